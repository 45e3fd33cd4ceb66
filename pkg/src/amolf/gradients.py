"""Backpropagation gradients and Gauss-Newton curvature.

Sign convention: every gradient object here is a NEGATIVE gradient of the
mean squared error, so adding ``step * gradient`` with a small positive step
decreases the error. Hessians are Gauss-Newton (sums of output-Jacobian
outer products scaled by 2/n_patterns), hence symmetric positive
semi-definite by construction.

Input weights flatten row-major: weight (unit k, input n) maps to index
k * (n_inputs + 1) + n, and plain reshape inverts the map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .network import ForwardTrace, Mlp, activation_derivative
from .owo import augmented_basis


@dataclass(frozen=True)
class GradientBundle:
    """Negative error gradients for all three weight matrices."""

    input_weights: np.ndarray  # (n_hidden, n_inputs + 1)
    output_weights: np.ndarray  # (n_outputs, n_hidden)
    bypass_weights: np.ndarray  # (n_outputs, n_inputs + 1)


@dataclass(frozen=True)
class HessianBundle:
    """Flattened Gauss-Newton input-weight Hessian with its gradient vector."""

    matrix: np.ndarray  # (n_iw, n_iw) with n_iw = n_hidden * (n_inputs + 1)
    gradient: np.ndarray  # (n_iw,) flattened negative gradient


def flatten_index(unit: int, input_index: int, n_inputs: int) -> int:
    """Position of input weight (unit, input_index) in the flattened vector."""
    return unit * (n_inputs + 1) + input_index


def unflatten_index(flat: int, n_inputs: int) -> tuple[int, int]:
    return divmod(flat, n_inputs + 1)


def output_deltas(dataset: Dataset, trace: ForwardTrace) -> np.ndarray:
    """Per-pattern negative-gradient output deltas, 2 * (target - output)."""
    return 2.0 * (dataset.targets - trace.output)


def hidden_deltas(mlp: Mlp, dataset: Dataset, trace: ForwardTrace) -> np.ndarray:
    """Output deltas pushed through the output weights and the activation slope."""
    return activation_derivative(mlp, trace) * (output_deltas(dataset, trace) @ mlp.woh)


def backprop(mlp: Mlp, dataset: Dataset, trace: ForwardTrace) -> GradientBundle:
    """Negative gradients of the MSE for all weights, averaged over patterns."""
    nv = dataset.n_patterns
    d_out = output_deltas(dataset, trace)
    d_hid = activation_derivative(mlp, trace) * (d_out @ mlp.woh)
    return GradientBundle(
        input_weights=d_hid.T @ dataset.inputs / nv,
        output_weights=d_out.T @ trace.activ / nv,
        bypass_weights=d_out.T @ dataset.inputs / nv,
    )


def gauss_newton_input_hessian(
    mlp: Mlp,
    dataset: Dataset,
    trace: ForwardTrace,
    grads: GradientBundle | None = None,
) -> HessianBundle:
    """Gauss-Newton Hessian over the input weights, flattened row-major.

    Entry ((k, n), (j, m)) is 2/n_patterns times the pattern-and-output sum
    of products of output sensitivities woh(i,k) f'(net_k) x(n) and
    woh(i,j) f'(net_j) x(m). The matrix is exactly symmetric.
    """
    nv, n1 = dataset.n_patterns, dataset.n_inputs + 1
    nh = mlp.n_hidden
    fprime = activation_derivative(mlp, trace)
    psi = (fprime[:, :, None] * dataset.inputs[:, None, :]).reshape(nv, nh * n1)
    gram = psi.T @ psi
    s = mlp.woh.T @ mlp.woh
    h = (2.0 / nv) * gram.reshape(nh, n1, nh, n1) * s[:, None, :, None]
    if grads is None:
        grads = backprop(mlp, dataset, trace)
    return HessianBundle(matrix=h.reshape(nh * n1, nh * n1), gradient=grads.input_weights.ravel())


def gn_curvature_along_input_direction(
    mlp: Mlp, dataset: Dataset, trace: ForwardTrace, direction: np.ndarray
) -> float:
    """Gauss-Newton second derivative of the error along an input-weight
    direction, i.e. the Hessian quadratic form evaluated without forming the
    Hessian."""
    u = (activation_derivative(mlp, trace) * (dataset.inputs @ direction.T)) @ mlp.woh.T
    return float(2.0 * (u * u).sum() / dataset.n_patterns)


def gn_curvature_along_direction(
    mlp: Mlp,
    dataset: Dataset,
    trace: ForwardTrace,
    d_w: np.ndarray,
    d_woh: np.ndarray,
    d_woi: np.ndarray,
) -> float:
    """Gauss-Newton quadratic form along a direction over all weights."""
    u = (
        dataset.inputs @ d_woi.T
        + trace.activ @ d_woh.T
        + (activation_derivative(mlp, trace) * (dataset.inputs @ d_w.T)) @ mlp.woh.T
    )
    return float(2.0 * (u * u).sum() / dataset.n_patterns)


def output_hessian_gradient(
    mlp: Mlp, dataset: Dataset, trace: ForwardTrace
) -> tuple[np.ndarray, np.ndarray]:
    """Newton system for the output-side weights at the current point.

    The Hessian is block diagonal: one copy of twice the basis
    autocorrelation per output. The negative gradient flattens output-major,
    entry (i, j) at position i * n_basis + j.
    """
    nv = dataset.n_patterns
    basis = augmented_basis(dataset, trace)
    r = basis.T @ basis / nv
    m = dataset.n_outputs
    ho = np.kron(np.eye(m), 2.0 * r)
    residual = dataset.targets - trace.output
    go = (2.0 / nv) * (residual.T @ basis)
    return ho, go.ravel()


def curvature_map(mlp: Mlp, dataset: Dataset, trace: ForwardTrace) -> np.ndarray:
    """Per-weight diagonal Gauss-Newton curvature of the input weights.

    Entry (k, n) is 2/n_patterns times the squared-output-weight sum for
    unit k times the pattern sum of f'(net_k)^2 x(n)^2; always >= 0. Equals
    the matching diagonal entry of the full input-weight Hessian.
    """
    nv = dataset.n_patterns
    fprime = activation_derivative(mlp, trace)
    weight_sq = (mlp.woh * mlp.woh).sum(axis=0)
    pattern_sums = (fprime * fprime).T @ (dataset.inputs * dataset.inputs)
    return (2.0 / nv) * weight_sq[:, None] * pattern_sums


def gauss_newton_full_hessian(
    mlp: Mlp,
    dataset: Dataset,
    trace: ForwardTrace,
    grads: GradientBundle | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Newton Hessian and negative gradient over every weight.

    Weight order is the concatenation of the flattened input, output, and
    bypass matrices. Built from the dense per-pattern output Jacobian, so
    memory is n_patterns * n_outputs * n_weights; meant for small networks.
    """
    nv, n1 = dataset.n_patterns, dataset.n_inputs + 1
    nh, m = mlp.n_hidden, mlp.n_outputs
    niw = nh * n1
    nw = niw + m * nh + m * n1
    fprime = activation_derivative(mlp, trace)
    jac = np.zeros((nv, m, nw))
    jac[:, :, :niw] = np.einsum(
        "ik,pk,pn->pikn", mlp.woh, fprime, dataset.inputs
    ).reshape(nv, m, niw)
    for i in range(m):
        jac[:, i, niw + i * nh : niw + (i + 1) * nh] = trace.activ
        off = niw + m * nh
        jac[:, i, off + i * n1 : off + (i + 1) * n1] = dataset.inputs
    flat = jac.reshape(nv * m, nw)
    h = (2.0 / nv) * (flat.T @ flat)
    if grads is None:
        grads = backprop(mlp, dataset, trace)
    g = np.concatenate(
        (
            grads.input_weights.ravel(),
            grads.output_weights.ravel(),
            grads.bypass_weights.ravel(),
        )
    )
    return h, g
