"""Closed-form multiply counts per training iteration, and the cost ledger.

Counts are formula-evaluated, never instrumented from the actual arithmetic:
the point is a fixed cost model that implementation choices cannot perturb.
Formulas are evaluated in exact rational arithmetic and rounded to the
nearest integer (ties to even). Throughout, nu = n + nh + 1 is the
augmented-basis size, niw = nh * (n + 1) the input-weight count, and
nw = m * nu + (n + 1) * nh the total weight count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction


def _as_int(value: Fraction) -> int:
    return round(value)


def mult_ols(nu: int, m: int) -> int:
    """Solving the output-weight system by orthogonal least squares:
    nu (nu+1) [m + (2 nu + 1)/6 + 3/2]."""
    f = Fraction(nu * (nu + 1)) * (Fraction(m) + Fraction(2 * nu + 1, 6) + Fraction(3, 2))
    return _as_int(f)


def mult_owo_bp(n: int, nh: int, m: int, nv: int) -> int:
    """One iteration of output-weight solving plus gradient descent on the
    input weights with a second-order step size."""
    nu = n + nh + 1
    f = Fraction(nu * (nu + 1)) * (
        Fraction(m) + Fraction(2 * nu + 1, 6) + Fraction(3, 2) + Fraction(nv, 2)
    ) + Fraction(nv) * Fraction(nh * (m + 2 * n + 3) + m * (2 * nu + 1))
    return _as_int(f)


def mult_lm(n: int, nh: int, m: int, nv: int) -> int:
    """One damped full-Hessian iteration over every weight in the network."""
    nu = n + nh + 1
    nw = m * nu + (n + 1) * nh
    f = Fraction(nv) * Fraction(
        m * nu
        + 2 * nh * (n + 1)
        + m * (n + 6 * nh + 4)
        + m * nu * (nu + 3 * nh * (n + 1))
        + 4 * nh * nh * (n + 1) * (n + 1)
    ) + Fraction(nw**3 + nw**2)
    return _as_int(f)


def mult_newton(n: int, nh: int, m: int, nv: int) -> int:
    """One full second-order step on the input weights alone:
    nv [niw (2m + 1) + niw (niw + 1) (nv m / 2 + (2 niw + 1)/6 + 5/2)].

    The nv m / 2 term sits inside a bracket that is itself scaled by nv,
    which makes the count quadratic in nv; evaluated exactly as defined.
    """
    niw = nh * (n + 1)
    inner = Fraction(nv * m, 2) + Fraction(2 * niw + 1, 6) + Fraction(5, 2)
    f = Fraction(nv) * (Fraction(niw * (2 * m + 1)) + Fraction(niw * (niw + 1)) * inner)
    return _as_int(f)


def mult_owo(n: int, nh: int, m: int, nv: int) -> int:
    """The output-weight stage on its own (forward pass plus solve)."""
    nu = n + nh + 1
    f = Fraction(nv) * Fraction(nh * (n + 1) + m * (2 * nu + 1)) + Fraction(
        nu * (nu + 1)
    ) * (Fraction(m) + Fraction(nv, 2) + Fraction(2 * nu + 1, 6) + Fraction(3, 2))
    return _as_int(f)


def mult_owo_newton(n: int, nh: int, m: int, nv: int) -> int:
    """Output-weight stage plus the full input-weight second-order step."""
    return mult_owo(n, nh, m, nv) + mult_newton(n, nh, m, nv)


def mult_owo_molf(n: int, nh: int, m: int, nv: int) -> int:
    """One iteration with a compressed nh-by-nh step-size system:
    nh (nh+1) [(2 nh + 1)/6 + 5/2] + nv nh [2m + n + 2 + m (nh + 1)/2]."""
    f = Fraction(nh * (nh + 1)) * (Fraction(2 * nh + 1, 6) + Fraction(5, 2)) + Fraction(
        nv * nh
    ) * (Fraction(2 * m + n + 2) + Fraction(m * (nh + 1), 2))
    return _as_int(f)


def mult_amolf(n: int, nh: int, m: int, nv: int, ng: int) -> int:
    """One grouped-step iteration with ng groups per hidden unit and
    nl = ng * nh learning factors:
    nl (nl+1) [(2 nl + 1)/6 + 5/2 + m nv / 2] + nh (n+1) + nh ng m (nv + 2)
    + nl nv m."""
    nl = ng * nh
    f = (
        Fraction(nl * (nl + 1))
        * (Fraction(2 * nl + 1, 6) + Fraction(5, 2) + Fraction(m * nv, 2))
        + Fraction(nh * (n + 1))
        + Fraction(nh * ng * m * (nv + 2))
        + Fraction(nl * nv * m)
    )
    return _as_int(f)


def mult_amolf_search(n: int, nh: int, m: int, nv: int) -> int:
    """Surcharge for one exhaustive group-count search.

    Counts building the full input-weight Hessian once (Jacobian factors
    plus its pattern-and-output accumulation over the upper triangle), then
    per candidate group count 1..n: compressing the Hessian onto the grouped
    unknowns, solving, applying a trial step, and one forward error
    evaluation.
    """
    niw = nh * (n + 1)
    nu = n + nh + 1
    total = Fraction(nv * nh * (n + 1)) + Fraction(nv * m) * Fraction(niw * (niw + 1), 2)
    trial_eval = Fraction(nv * (nh * (n + 1) + m * nu) + nv * m)
    for ng in range(1, n + 1):
        nl = ng * nh
        solve = Fraction(nl * (nl + 1)) * (Fraction(2 * nl + 1, 6) + Fraction(5, 2))
        total += Fraction(2 * niw * niw) + solve + Fraction(niw) + trial_eval
    return _as_int(total)


def mult_cg(n: int, nh: int, m: int, nv: int) -> int:
    """Per-iteration count for conjugate-gradient training of all weights.

    No published closed form exists for this trainer, so the count is a
    direct decomposition: forward pass, deltas and gradient accumulation,
    direction bookkeeping, the directional curvature pass for the step
    size, and the weight update.
    """
    nu = n + nh + 1
    nw = m * nu + (n + 1) * nh
    forward = nv * (nh * (n + 1) + m * nu)
    deltas = nv * (m + nh * (m + 1))
    grads = nv * ((nh + m) * (n + 1) + m * nh)
    curvature = nv * (nh * (n + 2) + m * (nh + nu) + m)
    direction_and_step = 4 * nw
    return forward + deltas + grads + curvature + direction_and_step


def epm(e_prev: float, e_now: float, m_it: int) -> float:
    """Error change per multiply for one iteration; negative when error rose."""
    if m_it <= 0:
        raise ValueError("multiply count must be positive")
    return (e_prev - e_now) / m_it


@dataclass
class CostLedger:
    """Per-iteration multiply counts for one training run."""

    algorithm: str
    per_iteration: list[int] = field(default_factory=list)

    def record(self, multiplies: int) -> None:
        if multiplies <= 0:
            raise ValueError("every completed iteration must cost at least one multiply")
        self.per_iteration.append(int(multiplies))

    def cumulative(self) -> list[int]:
        out: list[int] = []
        total = 0
        for count in self.per_iteration:
            total += count
            out.append(total)
        return out

    def total(self) -> int:
        return sum(self.per_iteration)
