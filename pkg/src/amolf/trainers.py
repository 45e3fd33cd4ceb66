"""Training algorithms with one uniform ``iterate(state) -> state`` step.

Six trainers share the same machinery:

* ``owo-bp``      solve output weights, then one gradient step on the input
                  weights with a second-order optimal step size.
* ``owo-molf``    one optimal step size per hidden unit, from a compressed
                  hidden-unit-by-hidden-unit curvature system.
* ``owo-newton``  a full second-order step on the input weights.
* ``amolf``       the input weights of each hidden unit are split into
                  curvature-ordered groups, one step size per group; the
                  group count adapts to the error change per multiply and is
                  re-searched exhaustively at a fixed period.
* ``lm``          damped full-network second-order steps with the classic
                  accept/reject damping schedule.
* ``cg``          Fletcher-Reeves conjugate gradient over all weights.

The grouped step interpolates between one step size per unit (one group)
and the full input-weight second-order step (all-singleton groups), which
is why the compressed systems can be read off either directly from
per-pattern sums or from the full input-weight Hessian.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import cost
from .cost import CostLedger
from .dataset import Dataset
from .gradients import (
    GradientBundle,
    HessianBundle,
    backprop,
    curvature_map,
    gauss_newton_input_hessian,
    gn_curvature_along_direction,
    gn_curvature_along_input_direction,
    gauss_newton_full_hessian,
    hidden_deltas,
)
from .linalg import solve_sym
from .network import ForwardTrace, Mlp, activation_derivative, forward, mse, output_mse
from .owo import accumulate_correlations, install_output_weights, solve_output_weights

ALGORITHMS = ("owo-bp", "owo-molf", "owo-newton", "amolf", "lm", "cg")

# Step-size fallback when the directional curvature is numerically zero.
OLF_FALLBACK = 1e-3
CURVATURE_FLOOR = 1e-12
LM_MAX_RETRIES = 10
DEFAULT_SEARCH_PERIOD = 50
DEFAULT_LM_LAMBDA = 1e-2


# ---------------------------------------------------------------------------
# Grouping of input weights


@dataclass(frozen=True)
class GroupPartition:
    """Per-unit grouping of input indices by descending curvature.

    ``order[k]`` permutes the augmented input indices of hidden unit k so
    that higher-curvature weights come first (ties by ascending index).
    All units share the same group sizes; groups never span units.
    """

    order: np.ndarray  # (n_hidden, n_inputs + 1) int
    sizes: np.ndarray  # (n_groups,) int, summing to n_inputs + 1
    boundaries: np.ndarray  # (n_groups + 1,) prefix offsets into order rows
    group_of_position: np.ndarray  # (n_inputs + 1,) group id of each order slot

    @property
    def n_groups(self) -> int:
        return len(self.sizes)


def build_partition(curvature: np.ndarray, n_groups: int) -> GroupPartition:
    """Split each unit's inputs into ``n_groups`` curvature-ordered groups.

    Sizes are an equal split of n_inputs + 1 with the remainder going to the
    earliest (highest-curvature) groups.
    """
    nh, n1 = curvature.shape
    if not 1 <= n_groups <= n1:
        raise ValueError(f"n_groups must be in 1..{n1}, got {n_groups}")
    order = np.argsort(-curvature, axis=1, kind="stable")
    base, extra = divmod(n1, n_groups)
    sizes = np.array([base + 1] * extra + [base] * (n_groups - extra), dtype=np.int64)
    boundaries = np.concatenate(([0], np.cumsum(sizes)))
    return GroupPartition(
        order=order,
        sizes=sizes,
        boundaries=boundaries,
        group_of_position=np.repeat(np.arange(n_groups), sizes),
    )


def single_group_partition(n_hidden: int, n_augmented: int) -> GroupPartition:
    """The one-group-per-unit partition (one step size per hidden unit)."""
    return GroupPartition(
        order=np.tile(np.arange(n_augmented), (n_hidden, 1)),
        sizes=np.array([n_augmented], dtype=np.int64),
        boundaries=np.array([0, n_augmented], dtype=np.int64),
        group_of_position=np.zeros(n_augmented, dtype=np.int64),
    )


def _group_weight_tensor(grads_w: np.ndarray, part: GroupPartition) -> np.ndarray:
    """Tensor t with t[k, n, c] = gradient(k, n) if input n is in group c of
    unit k, else 0. Sums over n of t against per-pattern inputs give the
    grouped net-change factors."""
    nh, n1 = grads_w.shape
    t = np.zeros((nh, n1, part.n_groups))
    rows = np.repeat(np.arange(nh), n1)
    cols = part.order.ravel()
    groups = np.tile(part.group_of_position, nh)
    t[rows, cols, groups] = grads_w[rows, cols]
    return t


def apply_grouped_step(
    mlp: Mlp, grads: GradientBundle, part: GroupPartition, z: np.ndarray
) -> Mlp:
    """Update every input weight once: weight (k, n) moves by the group's
    step size times its own negative gradient."""
    gw = grads.input_weights
    nh, n1 = gw.shape
    z = np.asarray(z, dtype=np.float64).reshape(nh, part.n_groups)
    per_weight = np.empty_like(gw)
    rows = np.repeat(np.arange(nh), n1)
    cols = part.order.ravel()
    per_weight[rows, cols] = z[:, part.group_of_position].ravel()
    return replace(mlp, w=mlp.w + per_weight * gw)


def _grouped_gradient_squares(grads_w: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Negative gradient of the error wrt each group's step size at step 0,
    which reduces to the group sum of squared weight gradients."""
    return (t * grads_w[:, :, None]).sum(axis=1)


def assemble_grouped_direct(
    mlp: Mlp,
    dataset: Dataset,
    trace: ForwardTrace,
    grads: GradientBundle,
    part: GroupPartition,
) -> tuple[np.ndarray, np.ndarray]:
    """Grouped step-size system accumulated from per-pattern sums.

    Returns the Gauss-Newton Hessian over the n_hidden * n_groups step
    sizes (flattened unit-major) and the matching negative gradient.
    """
    nv = dataset.n_patterns
    nh, ng = mlp.n_hidden, part.n_groups
    t = _group_weight_tensor(grads.input_weights, part)
    delta_net = np.tensordot(dataset.inputs, t, axes=([1], [1]))  # (nv, nh, ng)
    phi = activation_derivative(mlp, trace)[:, :, None] * delta_net
    phi_flat = phi.reshape(nv, nh * ng)
    gram = phi_flat.T @ phi_flat
    s = mlp.woh.T @ mlp.woh
    ha = (2.0 / nv) * gram.reshape(nh, ng, nh, ng) * s[:, None, :, None]
    ga = _grouped_gradient_squares(grads.input_weights, t)
    return ha.reshape(nh * ng, nh * ng), ga.ravel()


def grouped_gradient_from_residuals(
    mlp: Mlp,
    dataset: Dataset,
    trace: ForwardTrace,
    grads: GradientBundle,
    part: GroupPartition,
) -> np.ndarray:
    """The grouped step-size gradient accumulated from residuals pattern by
    pattern; equals the group sums of squared weight gradients up to
    rounding, and exists so that identity can be asserted rather than
    assumed."""
    t = _group_weight_tensor(grads.input_weights, part)
    delta_net = np.tensordot(dataset.inputs, t, axes=([1], [1]))
    deltas = hidden_deltas(mlp, dataset, trace)
    return np.einsum("pk,pkc->kc", deltas, delta_net).ravel() / dataset.n_patterns


def assemble_grouped_from_hessian(
    hessian: HessianBundle, grads: GradientBundle, part: GroupPartition
) -> tuple[np.ndarray, np.ndarray]:
    """Grouped step-size system compressed out of the full input-weight
    Hessian, so candidate group counts can be evaluated without recomputing
    any per-pattern sums."""
    gw = grads.input_weights
    nh, n1 = gw.shape
    ng = part.n_groups
    t = _group_weight_tensor(gw, part)
    p = np.zeros((nh, n1, nh, ng))
    units = np.arange(nh)
    p[units, :, units, :] = t
    p = p.reshape(nh * n1, nh * ng)
    ha = p.T @ (hessian.matrix @ p)
    ga = _grouped_gradient_squares(gw, t)
    return ha, ga.ravel()


# ---------------------------------------------------------------------------
# Step-size and direction primitives


def olf(
    mlp: Mlp, dataset: Dataset, grads: GradientBundle, trace: ForwardTrace | None = None
) -> float:
    """Optimal scalar step size along the input-weight gradient.

    Ratio of the negative slope (the squared gradient norm) to the
    Gauss-Newton curvature along the gradient direction, both at step 0.
    Falls back to a small constant when the curvature vanishes.
    """
    if trace is None:
        trace = forward(mlp, dataset)
    numerator = float((grads.input_weights * grads.input_weights).sum())
    denominator = gn_curvature_along_input_direction(
        mlp, dataset, trace, grads.input_weights
    )
    if denominator <= CURVATURE_FLOOR:
        return OLF_FALLBACK
    return numerator / denominator


def molf_solve(hessian: HessianBundle, grads: GradientBundle) -> np.ndarray:
    """One optimal step size per hidden unit, by compressing the full
    input-weight Hessian onto the per-unit gradient directions."""
    nh, n1 = grads.input_weights.shape
    part = single_group_partition(nh, n1)
    ha, ga = assemble_grouped_from_hessian(hessian, grads, part)
    return solve_sym(ha, ga).solution


def newton_input_step(hessian: HessianBundle, n_inputs: int) -> np.ndarray:
    """Full second-order input-weight change, unflattened to matrix shape.

    Singular Hessians fall back to pivot skipping: excluded weights simply
    do not move.
    """
    report = solve_sym(hessian.matrix, hessian.gradient)
    return report.solution.reshape(-1, n_inputs + 1)


def fletcher_reeves_direction(
    gradient: np.ndarray,
    previous_direction: np.ndarray | None = None,
    previous_norm_sq: float | None = None,
) -> np.ndarray:
    """Conjugate direction update: the fresh negative gradient plus the ratio
    of successive squared gradient norms times the previous direction. The
    first call (no history) returns the gradient itself."""
    if (
        previous_direction is None
        or previous_norm_sq is None
        or previous_norm_sq <= CURVATURE_FLOOR
    ):
        return gradient.copy()
    beta = float(gradient @ gradient) / previous_norm_sq
    return gradient + beta * previous_direction


# ---------------------------------------------------------------------------
# Group-count adaptation


def adapt_group_count(
    n_groups: int, previous_epm: float, current_epm: float, max_groups: int
) -> int:
    """Double the group count when the error change per multiply rose,
    halve it when it fell, hold on a tie. Clamped to [1, max_groups]; the
    cap stays below the augmented input count, where all-singleton groups
    would make collinear inputs resurface as singular systems."""
    if current_epm > previous_epm:
        return min(2 * n_groups, max_groups)
    if current_epm < previous_epm:
        return max(-(-n_groups // 2), 1)
    return n_groups


def initial_group_search(
    mlp: Mlp,
    dataset: Dataset,
    *,
    trace: ForwardTrace | None = None,
    grads: GradientBundle | None = None,
    curvature: np.ndarray | None = None,
    max_groups: int | None = None,
) -> int:
    """Exhaustive group-count selection.

    Builds the full input-weight Hessian once, then for every candidate
    count compresses it onto the grouped unknowns, solves, applies the
    trial step to a scratch copy, and evaluates the resulting error. The
    candidate with the lowest error wins; ties go to the smaller count.
    """
    if trace is None:
        trace = forward(mlp, dataset)
    if grads is None:
        grads = backprop(mlp, dataset, trace)
    if curvature is None:
        curvature = curvature_map(mlp, dataset, trace)
    if max_groups is None:
        max_groups = dataset.n_inputs
    hessian = gauss_newton_input_hessian(mlp, dataset, trace, grads)
    best_count, best_error = 1, np.inf
    for ng in range(1, max_groups + 1):
        part = build_partition(curvature, ng)
        ha, ga = assemble_grouped_from_hessian(hessian, grads, part)
        z = solve_sym(ha, ga).solution
        candidate = apply_grouped_step(mlp, grads, part, z)
        err = mse(candidate, dataset)
        if err < best_error:
            best_count, best_error = ng, err
    return best_count


# ---------------------------------------------------------------------------
# Trainer state and iterations


@dataclass(frozen=True)
class AmolfState:
    """Adaptive-grouping bookkeeping carried across iterations.

    ``epm_history`` holds (iteration, error change per multiply) pairs.
    ``fixed_n_groups`` pins the group count and disables both the searches
    and the adaptation; pinning at 1 reproduces the one-factor-per-unit
    trainer exactly.
    """

    n_groups: int = 1
    epm_history: tuple[tuple[int, float], ...] = ()
    search_period: int = DEFAULT_SEARCH_PERIOD
    fixed_n_groups: int | None = None


@dataclass
class TrainerState:
    """Snapshot of one training run after ``iteration`` completed steps.

    ``last_error`` always equals a fresh error evaluation of ``mlp``. The
    ledger is shared (appended in place) across the run's states.
    """

    mlp: Mlp
    dataset: Dataset
    algorithm: str
    ledger: CostLedger
    last_error: float
    iteration: int = 0
    lm_lambda: float = DEFAULT_LM_LAMBDA
    lm_stalled: bool = False
    cg_direction: np.ndarray | None = None
    cg_gradient_norm_sq: float | None = None
    amolf: AmolfState | None = None


def init_state(
    algorithm: str,
    mlp: Mlp,
    dataset: Dataset,
    *,
    search_period: int = DEFAULT_SEARCH_PERIOD,
    fixed_n_groups: int | None = None,
    lm_lambda: float = DEFAULT_LM_LAMBDA,
) -> TrainerState:
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")
    state = TrainerState(
        mlp=mlp,
        dataset=dataset,
        algorithm=algorithm,
        ledger=CostLedger(algorithm),
        last_error=mse(mlp, dataset),
        lm_lambda=lm_lambda,
    )
    if algorithm == "amolf":
        state.amolf = AmolfState(
            search_period=search_period, fixed_n_groups=fixed_n_groups
        )
    return state


def _perform_owo(mlp: Mlp, dataset: Dataset) -> Mlp:
    trace = forward(mlp, dataset)
    solution = solve_output_weights(accumulate_correlations(dataset, trace))
    return install_output_weights(mlp, solution)


def _dims(state: TrainerState) -> tuple[int, int, int, int]:
    d = state.dataset
    return d.n_inputs, state.mlp.n_hidden, d.n_outputs, d.n_patterns


def owo_bp_iteration(state: TrainerState) -> TrainerState:
    """Output-weight solve, then a gradient step with the optimal step size."""
    d = state.dataset
    mlp = _perform_owo(state.mlp, d)
    trace = forward(mlp, d)
    grads = backprop(mlp, d, trace)
    z = olf(mlp, d, grads, trace)
    mlp = replace(mlp, w=mlp.w + z * grads.input_weights)
    state.ledger.record(cost.mult_owo_bp(*_dims(state)))
    return replace(
        state, mlp=mlp, iteration=state.iteration + 1, last_error=mse(mlp, d)
    )


def _grouped_input_step(
    mlp: Mlp, dataset: Dataset, part: GroupPartition
) -> tuple[Mlp, GradientBundle]:
    """Shared step of the grouped trainers: backprop, solve the grouped
    step-size system from per-pattern sums, and move the input weights."""
    trace = forward(mlp, dataset)
    grads = backprop(mlp, dataset, trace)
    ha, ga = assemble_grouped_direct(mlp, dataset, trace, grads, part)
    z = solve_sym(ha, ga).solution
    return apply_grouped_step(mlp, grads, part, z), grads


def owo_molf_iteration(state: TrainerState) -> TrainerState:
    """One optimal step size per hidden unit, then the output-weight solve."""
    d = state.dataset
    part = single_group_partition(state.mlp.n_hidden, d.n_inputs + 1)
    mlp, _ = _grouped_input_step(state.mlp, d, part)
    mlp = _perform_owo(mlp, d)
    state.ledger.record(cost.mult_owo_molf(*_dims(state)))
    return replace(
        state, mlp=mlp, iteration=state.iteration + 1, last_error=mse(mlp, d)
    )


def owo_newton_iteration(state: TrainerState) -> TrainerState:
    """Full second-order input-weight step, then the output-weight solve."""
    d = state.dataset
    mlp = state.mlp
    trace = forward(mlp, d)
    grads = backprop(mlp, d, trace)
    hessian = gauss_newton_input_hessian(mlp, d, trace, grads)
    mlp = replace(mlp, w=mlp.w + newton_input_step(hessian, d.n_inputs))
    mlp = _perform_owo(mlp, d)
    state.ledger.record(cost.mult_owo_newton(*_dims(state)))
    return replace(
        state, mlp=mlp, iteration=state.iteration + 1, last_error=mse(mlp, d)
    )


def amolf_iteration(state: TrainerState) -> TrainerState:
    """Adaptive grouped step: pick the group count (exhaustive search on the
    first iteration and periodically after, error-per-multiply adaptation
    otherwise), take the grouped step, solve output weights, record the
    iteration's error change per multiply."""
    d = state.dataset
    mlp = state.mlp
    ast = state.amolf
    n, nh, m, nv = _dims(state)
    iteration = state.iteration + 1

    trace = forward(mlp, d)
    grads = backprop(mlp, d, trace)
    curvature = curvature_map(mlp, d, trace)

    searched = False
    if ast.fixed_n_groups is not None:
        n_groups = ast.fixed_n_groups
    elif iteration == 1 or (
        ast.search_period > 0 and iteration % ast.search_period == 0
    ):
        n_groups = initial_group_search(
            mlp, d, trace=trace, grads=grads, curvature=curvature
        )
        searched = True
    elif len(ast.epm_history) >= 2:
        n_groups = adapt_group_count(
            ast.n_groups, ast.epm_history[-2][1], ast.epm_history[-1][1], n
        )
    else:
        n_groups = ast.n_groups

    part = build_partition(curvature, n_groups)
    ha, ga = assemble_grouped_direct(mlp, d, trace, grads, part)
    z = solve_sym(ha, ga).solution
    mlp = apply_grouped_step(mlp, grads, part, z)
    mlp = _perform_owo(mlp, d)
    err = mse(mlp, d)

    multiplies = cost.mult_amolf(n, nh, m, nv, n_groups)
    epm_now = cost.epm(state.last_error, err, multiplies)
    state.ledger.record(
        multiplies + (cost.mult_amolf_search(n, nh, m, nv) if searched else 0)
    )
    new_amolf = replace(
        ast,
        n_groups=n_groups,
        epm_history=ast.epm_history + ((iteration, epm_now),),
    )
    return replace(
        state,
        mlp=mlp,
        iteration=iteration,
        last_error=err,
        amolf=new_amolf,
    )


def _pack_direction(grads: GradientBundle) -> np.ndarray:
    return np.concatenate(
        (
            grads.input_weights.ravel(),
            grads.output_weights.ravel(),
            grads.bypass_weights.ravel(),
        )
    )


def _unpack_direction(
    mlp: Mlp, vec: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n1 = mlp.n_inputs + 1
    nh, m = mlp.n_hidden, mlp.n_outputs
    niw = nh * n1
    d_w = vec[:niw].reshape(nh, n1)
    d_woh = vec[niw : niw + m * nh].reshape(m, nh)
    d_woi = vec[niw + m * nh :].reshape(m, n1)
    return d_w, d_woh, d_woi


def lm_iteration(state: TrainerState) -> TrainerState:
    """Damped full-network second-order step.

    Solves the ridged system at the current damping; on error decrease the
    step is accepted and the damping shrinks tenfold, otherwise it grows
    tenfold and the solve is retried. After LM_MAX_RETRIES consecutive
    rejections the iteration ends with the weights unchanged, flagged
    stalled.
    """
    d = state.dataset
    mlp = state.mlp
    trace = forward(mlp, d)
    grads = backprop(mlp, d, trace)
    hessian, gradient = gauss_newton_full_hessian(mlp, d, trace, grads)
    base_error = output_mse(d, trace.output)

    lam = state.lm_lambda
    accepted = False
    new_mlp, err = mlp, base_error
    for _ in range(LM_MAX_RETRIES):
        step = solve_sym(hessian, gradient, ridge=lam).solution
        d_w, d_woh, d_woi = _unpack_direction(mlp, step)
        candidate = Mlp(
            w=mlp.w + d_w,
            woh=mlp.woh + d_woh,
            woi=mlp.woi + d_woi,
            activation=mlp.activation,
        )
        candidate_error = mse(candidate, d)
        if candidate_error < base_error:
            new_mlp, err, accepted = candidate, candidate_error, True
            lam /= 10.0
            break
        lam *= 10.0

    state.ledger.record(cost.mult_lm(*_dims(state)))
    return replace(
        state,
        mlp=new_mlp,
        iteration=state.iteration + 1,
        last_error=err,
        lm_lambda=lam,
        lm_stalled=not accepted,
    )


def cg_iteration(state: TrainerState) -> TrainerState:
    """Conjugate-gradient step over all weights, with the step size from the
    Gauss-Newton curvature along the direction."""
    d = state.dataset
    mlp = state.mlp
    trace = forward(mlp, d)
    grads = backprop(mlp, d, trace)
    gradient = _pack_direction(grads)
    direction = fletcher_reeves_direction(
        gradient, state.cg_direction, state.cg_gradient_norm_sq
    )
    d_w, d_woh, d_woi = _unpack_direction(mlp, direction)
    denominator = gn_curvature_along_direction(mlp, d, trace, d_w, d_woh, d_woi)
    slope = float(gradient @ direction)
    step = slope / denominator if denominator > CURVATURE_FLOOR else OLF_FALLBACK
    mlp = Mlp(
        w=mlp.w + step * d_w,
        woh=mlp.woh + step * d_woh,
        woi=mlp.woi + step * d_woi,
        activation=mlp.activation,
    )
    state.ledger.record(cost.mult_cg(*_dims(state)))
    return replace(
        state,
        mlp=mlp,
        iteration=state.iteration + 1,
        last_error=mse(mlp, d),
        cg_direction=direction,
        cg_gradient_norm_sq=float(gradient @ gradient),
    )


_ITERATIONS = {
    "owo-bp": owo_bp_iteration,
    "owo-molf": owo_molf_iteration,
    "owo-newton": owo_newton_iteration,
    "amolf": amolf_iteration,
    "lm": lm_iteration,
    "cg": cg_iteration,
}


def iterate(state: TrainerState) -> TrainerState:
    """Run one training iteration of the state's algorithm."""
    return _ITERATIONS[state.algorithm](state)
