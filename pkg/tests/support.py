"""Independent oracles for the test suite.

Everything here is deliberately written the slow, obvious way (scalar
loops, brute-force elimination, finite differences) so that the vectorized
implementations in the package are checked against code that shares none of
their structure.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from amolf.dataset import Dataset, make_dataset
from amolf.network import ACTIVATIONS, Mlp, mse


def scalar_forward(mlp: Mlp, dataset: Dataset):
    """Pattern-by-pattern forward pass with explicit index loops."""
    act = ACTIVATIONS[mlp.activation][0]
    nv = dataset.n_patterns
    nh, m, n1 = mlp.n_hidden, mlp.n_outputs, mlp.n_inputs + 1
    net = np.zeros((nv, nh))
    activ = np.zeros((nv, nh))
    output = np.zeros((nv, m))
    for p in range(nv):
        for k in range(nh):
            s = 0.0
            for n in range(n1):
                s += mlp.w[k, n] * dataset.inputs[p, n]
            net[p, k] = s
            activ[p, k] = act(s)
        for i in range(m):
            s = 0.0
            for n in range(n1):
                s += mlp.woi[i, n] * dataset.inputs[p, n]
            for k in range(nh):
                s += mlp.woh[i, k] * activ[p, k]
            output[p, i] = s
    return net, activ, output


def scalar_mse(mlp: Mlp, dataset: Dataset) -> float:
    _, _, output = scalar_forward(mlp, dataset)
    total = 0.0
    for p in range(dataset.n_patterns):
        for i in range(dataset.n_outputs):
            total += (dataset.targets[p, i] - output[p, i]) ** 2
    return total / dataset.n_patterns


def scalar_correlations(mlp: Mlp, dataset: Dataset):
    """Autocorrelation and cross-correlation of [inputs, activations]."""
    _, activ, _ = scalar_forward(mlp, dataset)
    nv = dataset.n_patterns
    basis = np.hstack((dataset.inputs, activ))
    nu = basis.shape[1]
    m = dataset.n_outputs
    r = np.zeros((nu, nu))
    c = np.zeros((nu, m))
    for p in range(nv):
        for a in range(nu):
            for b in range(nu):
                r[a, b] += basis[p, a] * basis[p, b]
            for i in range(m):
                c[a, i] += basis[p, a] * dataset.targets[p, i]
    return r / nv, c / nv


def fd_gradients(mlp: Mlp, dataset: Dataset, step: float = 1e-6):
    """Central finite differences of the MSE, negated to match the package's
    negative-gradient convention."""

    def fd_matrix(get, set_):
        base = get(mlp)
        out = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            plus = base.copy()
            plus[idx] += step
            minus = base.copy()
            minus[idx] -= step
            e_plus = mse(set_(mlp, plus), dataset)
            e_minus = mse(set_(mlp, minus), dataset)
            out[idx] = -(e_plus - e_minus) / (2.0 * step)
        return out

    g_w = fd_matrix(lambda m_: m_.w, lambda m_, a: replace(m_, w=a))
    g_woh = fd_matrix(lambda m_: m_.woh, lambda m_, a: replace(m_, woh=a))
    g_woi = fd_matrix(lambda m_: m_.woi, lambda m_, a: replace(m_, woi=a))
    return g_w, g_woh, g_woi


def gauss_elimination_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Plain Gaussian elimination with partial (row) pivoting; independent of
    the package's fixed-order symmetric solver."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    vector = b.ndim == 1
    if vector:
        b = b[:, None]
    n = a.shape[0]
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(a[col:, col])))
        if pivot_row != col:
            a[[col, pivot_row]] = a[[pivot_row, col]]
            b[[col, pivot_row]] = b[[pivot_row, col]]
        for row in range(col + 1, n):
            f = a[row, col] / a[col, col]
            a[row, col:] -= f * a[col, col:]
            b[row] -= f * b[col]
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x[:, 0] if vector else x


def random_spd(rng: np.random.Generator, n: int, jitter: float = 0.5) -> np.ndarray:
    m = rng.standard_normal((n, n))
    return m @ m.T + jitter * np.eye(n)


def grouped_quadratic_drop(h: np.ndarray, g: np.ndarray, groups) -> float:
    """Minimum change of the quadratic model E0 - e.g + e.H.e/2 when the
    move is restricted to per-group multiples of the (negative) gradient.

    ``groups`` is a list of index arrays. Returns the minimized change
    (non-positive when the model is consistent), evaluated directly from
    the quadratic, not through any trainer code path.
    """
    from amolf.linalg import solve_sym

    basis = np.zeros((len(g), len(groups)))
    for c, idx in enumerate(groups):
        basis[idx, c] = g[idx]
    a = basis.T @ h @ basis
    a = 0.5 * (a + a.T)
    b = basis.T @ g
    z = solve_sym(a, b).solution
    return float(-(z @ b) + 0.5 * z @ (a @ z))


def nested_split_chain(dim: int, counts) -> list[list[np.ndarray]]:
    """Partition chains where each stage refines the previous by splitting
    contiguous blocks, e.g. counts (1, 2, 4, 8)."""
    chains = []
    for count in counts:
        edges = np.linspace(0, dim, count + 1).astype(int)
        chains.append([np.arange(edges[i], edges[i + 1]) for i in range(count)])
    return chains


def random_network(
    rng: np.random.Generator,
    n_inputs: int,
    n_hidden: int,
    n_outputs: int,
    n_patterns: int,
    activation: str = "sigmoid",
    weight_scale: float = 0.8,
) -> tuple[Mlp, Dataset]:
    """A seeded random net with nonzero output weights over random data."""
    raw = rng.standard_normal((n_patterns, n_inputs))
    targets = rng.standard_normal((n_patterns, n_outputs))
    dataset = make_dataset(raw, targets)
    mlp = Mlp(
        w=weight_scale * rng.standard_normal((n_hidden, n_inputs + 1)),
        woh=weight_scale * rng.standard_normal((n_outputs, n_hidden)),
        woi=weight_scale * rng.standard_normal((n_outputs, n_inputs + 1)),
        activation=activation,
    )
    return mlp, dataset


def near_interpolating_network(
    rng: np.random.Generator,
    n_inputs: int,
    n_hidden: int,
    n_outputs: int,
    n_patterns: int,
    noise: float = 1e-4,
) -> tuple[Mlp, Dataset]:
    """A net whose targets are its own outputs plus tiny noise, so residuals
    are small and Gauss-Newton curvature matches the true curvature."""
    from amolf.network import forward

    mlp, dataset = random_network(rng, n_inputs, n_hidden, n_outputs, n_patterns)
    outputs = forward(mlp, dataset).output
    targets = outputs + noise * rng.standard_normal(outputs.shape)
    return mlp, make_dataset(dataset.inputs[:, :-1], targets)


def relative_max_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """Max over entries of |actual - expected| / |expected|, with a floor on
    the denominator at one thousandth of the largest expected magnitude."""
    expected = np.asarray(expected, dtype=float)
    actual = np.asarray(actual, dtype=float)
    scale = np.abs(expected).max()
    floor = max(1e-3 * scale, 1e-300)
    return float((np.abs(actual - expected) / np.maximum(np.abs(expected), floor)).max())


def matrix_relative_error(actual: np.ndarray, expected: np.ndarray) -> float:
    """Norm-level relative error, |actual - expected|_max / (1 + |expected|_max)."""
    diff = float(np.abs(np.asarray(actual) - np.asarray(expected)).max())
    return diff / (1.0 + float(np.abs(expected).max()))


def fd_second_derivative(f, h: float) -> float:
    """Central second difference of a scalar function at 0."""
    return (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)


def quadratic_line_minimum(f, h: float = 0.5) -> float:
    """Exact minimizer of a quadratic scalar function from three samples."""
    num = f(-h) - f(h)
    den = 2.0 * (f(h) - 2.0 * f(0.0) + f(-h))
    return h * num / den


def timed(fn):
    import time

    start = time.perf_counter()
    result = fn()
    return result, time.perf_counter() - start
