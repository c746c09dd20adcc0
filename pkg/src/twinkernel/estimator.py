"""Level-j twin-kernel intensity estimators, confidence intervals and level selection.

The twin kernel at level j compares points after transporting them by the
j-th inverse power of the group action,

    K_j(t, s) = K(d(phi^-j t, phi^-j s) / h_j) / h_j,

and the estimator smooths the Nelson-Aalen increments with it.  Because a
periodic shift is an isometry of the circle, that literal kernel is the same
at every level for the periodic action, so the orbit-averaged mode instead
pools kernel copies centred at t, phi^-1 t, ..., phi^-j t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import _smooth
from .errors import AtRiskZero, EmptySample
from .group import GroupAction, identity
from .kernels import EPANECHNIKOV, BandwidthLadder, KernelSpec, equivalent_kernel_coefficients
from .process import EventSample, at_risk

__all__ = [
    "LITERAL",
    "ORBIT_AVERAGED",
    "EstimatorConfig",
    "IntensityEstimate",
    "SelectionResult",
    "LevelProfiles",
    "twin_kernel_weight",
    "estimate_level",
    "ramlau_hansen",
    "pointwise_ci",
    "contrast",
    "level_profiles",
    "select_level",
    "penalty_weight",
    "default_grid",
]

LITERAL = "literal"
ORBIT_AVERAGED = "orbit_averaged"
ORBIT_POOLED = "orbit_pooled"
KERNEL_MODES = (LITERAL, ORBIT_AVERAGED, ORBIT_POOLED)
DEFAULT_GRID_SIZE = 512
DEFAULT_PENALTY = 2.0


def penalty_weight(j: int) -> float:
    """L(j) = (j + 1) log 2, so that sum_j exp(-L(j)) = 1."""
    return (j + 1) * math.log(2.0)


@dataclass(frozen=True)
class EstimatorConfig:
    action: GroupAction = field(default_factory=identity)
    kernel: KernelSpec = EPANECHNIKOV
    ladder: BandwidthLadder = field(default_factory=BandwidthLadder)
    kernel_mode: str | None = None
    penalty: float = DEFAULT_PENALTY
    candidate_levels: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kernel_mode is None:
            mode = ORBIT_POOLED if self.action.kind == "periodic" else LITERAL
            object.__setattr__(self, "kernel_mode", mode)
        if self.kernel_mode not in KERNEL_MODES:
            raise ValueError(f"kernel_mode must be one of {KERNEL_MODES}")
        if self.kernel_mode == ORBIT_POOLED and self.action.kind == "dyadic":
            raise ValueError("at-risk pooling needs a measure-preserving action")
        if not self.penalty > 0:
            raise ValueError("penalty weight must be positive")
        levels = self.candidate_levels
        if levels is None:
            levels = tuple(self.ladder.levels())
        levels = tuple(sorted(set(int(j) for j in levels)))
        if not levels:
            raise ValueError("candidate level set is empty")
        if levels[0] < 0 or levels[-1] > self.ladder.max_level:
            raise ValueError(f"candidate levels must lie in [0, {self.ladder.max_level}]")
        object.__setattr__(self, "candidate_levels", levels)
        if self.action.circular and self.ladder.h0 >= self.action.domain_end / 2:
            raise ValueError("bandwidth must be below half the circle length")

    def bandwidth(self, j: int) -> float:
        return self.ladder.bandwidth(j)


@dataclass(frozen=True)
class IntensityEstimate:
    grid: np.ndarray
    values: np.ndarray
    variance_proxy: np.ndarray
    level: int
    bandwidth: float
    kernel: KernelSpec = EPANECHNIKOV
    degree: int | None = None
    derivative_order: int = 0

    def __len__(self):
        return self.grid.size

    def at(self, t: float) -> float:
        idx = int(np.argmin(np.abs(self.grid - t)))
        if not math.isclose(self.grid[idx], t, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"t={t} is not a grid point")
        return float(self.values[idx])


@dataclass(frozen=True)
class SelectionResult:
    chosen_level: int
    scores: dict  # level -> (contrast, penalty, total)

    @property
    def totals(self) -> dict:
        return {j: s[2] for j, s in self.scores.items()}


def default_grid(sample: EventSample, size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    return np.linspace(0.0, sample.window_end, size)


def twin_kernel_weight(cfg: EstimatorConfig, j: int, t: float, s: float) -> float:
    """K_j(t, s) straight from the definition; used as a reference for the compiled path."""
    h = cfg.bandwidth(j)
    act = cfg.action
    if cfg.kernel_mode == LITERAL:
        return float(cfg.kernel.eval(act.transported_distance(j, t, s) / h)) / h
    act.check_domain(s)
    total = 0.0
    for k in range(j + 1):
        total += float(cfg.kernel.eval(act.distance(act.power(-k, t), s) / h)) / h
    return total / (j + 1)


def _transport(action: GroupAction, k: int, t: np.ndarray) -> np.ndarray:
    return np.asarray(action.power(-k, t), dtype=float) if k else np.asarray(t, dtype=float)


def _smooth_at(cfg: EstimatorConfig, sample: EventSample, j: int, queries, *,
               degree: int | None = None, deriv: int = 0, self_idx=None, want_var=False):
    """Evaluate the level-j smoother at ``queries``.

    With ``degree`` set, the kernel is replaced by the boundary-aware
    equivalent kernel of a degree-``degree`` local polynomial fit and points
    are compared by signed difference on the observation interval.
    """
    queries = np.asarray(queries, dtype=float)
    act = cfg.action
    act.check_domain(queries)
    h = cfg.bandwidth(j)
    ev = sample.status & (sample.weights > 0)
    ev_times = sample.times[ev]
    w = sample.weights[ev]
    nq = queries.size

    if cfg.kernel_mode == LITERAL:
        shifts = [j]
        pts = _transport(act, j, ev_times)
    else:
        shifts = list(range(j + 1))
        pts = ev_times
    ncopy = len(shifts)
    q_copy = np.stack([_transport(act, k, queries) for k in shifts], axis=1).ravel()
    q_owner = np.repeat(np.arange(nq), ncopy)
    if cfg.kernel_mode == ORBIT_POOLED:
        w = _pooled_weights(act, sample, ev_times, j)
        q_col = np.tile(np.arange(ncopy), nq)
        copies = 1
    else:
        q_col = None
        copies = ncopy
    order = np.argsort(pts, kind="stable")
    pts = pts[order]
    pt_owner = order

    if act.circular:
        # the torus has no boundary: wrap the points once in each direction
        period = act.domain_end
        pts = np.concatenate([pts - period, pts, pts + period])
        pt_owner = np.concatenate([pt_owner, pt_owner, pt_owner])
    if degree is None:
        lo = np.full(q_copy.size, -1.0)
        hi = np.full(q_copy.size, 1.0)
        coef = np.ones((q_copy.size, 1))
        scale = 1.0 / (copies * h)
    else:
        if act.circular:
            lo = np.full(q_copy.size, -1.0)
            hi = np.full(q_copy.size, 1.0)
        else:
            if cfg.kernel_mode == LITERAL:
                left = float(_transport(act, j, np.array(0.0)))
                right = float(_transport(act, j, np.array(sample.window_end)))
            else:
                left, right = 0.0, sample.window_end
            lo = np.maximum(-1.0, (left - q_copy) / h)
            hi = np.minimum(1.0, (right - q_copy) / h)
        coef = equivalent_kernel_coefficients(cfg.kernel, deriv, degree, lo, hi)
        scale = 1.0 / (copies * h ** (deriv + 1))

    if self_idx is not None:
        # map record indices onto the reduced event arrays
        remap = np.full(sample.n, -1, dtype=np.int64)
        remap[np.flatnonzero(ev)] = np.arange(int(ev.sum()))
        self_idx = np.where(np.asarray(self_idx) >= 0, remap[np.asarray(self_idx)], -1)

    return _smooth.orbit_sum(
        q_copy, q_owner, np.full(q_copy.size, scale), lo, hi, coef, pts, pt_owner, w, h,
        cfg.kernel.code, nq, self_idx=self_idx, want_var=want_var, q_col=q_col,
    )


def _pooled_weights(act: GroupAction, sample: EventSample, ev_times: np.ndarray, j: int) -> np.ndarray:
    """Delta_i / Y_pool for each event seen from copy k = 0..j.

    An event near the k-th copy phi^-k t lines up with the points
    phi^(k - k') X_i near the other copies k', so its pooled at-risk count is
    sum_{k'=0..j} Y(phi^(k - k') X_i).
    """
    y_shift = np.stack([at_risk(sample, act.power(d, ev_times)) for d in range(-j, j + 1)], axis=1)
    csum = np.concatenate([np.zeros((ev_times.size, 1)), np.cumsum(y_shift, axis=1)], axis=1)
    # column d + j of y_shift holds offset d; copy k pools offsets k - j .. k
    k = np.arange(j + 1)
    pooled = csum[:, k + j + 1] - csum[:, k]
    with np.errstate(divide="ignore"):
        return np.where(pooled > 0, 1.0 / pooled, 0.0)


def estimate_level(cfg: EstimatorConfig, sample: EventSample, j: int, grid=None) -> IntensityEstimate:
    """Twin-kernel estimate at level j with its plug-in variance proxy."""
    if sample.n == 0:
        raise EmptySample("sample has no records")
    if j not in cfg.candidate_levels:
        raise ValueError(f"level {j} is not a candidate level")
    grid = default_grid(sample) if grid is None else np.asarray(grid, dtype=float)
    est, var, _ = _smooth_at(cfg, sample, j, grid, want_var=True)
    return IntensityEstimate(grid, np.maximum(est, 0.0), var, j, cfg.bandwidth(j), cfg.kernel)


def ramlau_hansen(sample: EventSample, bandwidth: float, kernel: KernelSpec = EPANECHNIKOV,
                  grid=None) -> IntensityEstimate:
    """Classical kernel-smoothed Nelson-Aalen estimator (identity action, level 0)."""
    cfg = EstimatorConfig(identity(), kernel, BandwidthLadder(bandwidth, 0.5, 0))
    return estimate_level(cfg, sample, 0, grid)


def pointwise_ci(est: IntensityEstimate, sample: EventSample, t: float, gamma: float = 0.05):
    """Asymptotic (1 - gamma) interval alpha_hat +/- z sqrt(alpha_hat R(K) / (Y(t) h))."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    a = est.at(t)
    y = at_risk(sample, t)
    if y == 0:
        raise AtRiskZero(f"nobody at risk at t={t}")
    z = stats.norm.ppf(1.0 - gamma / 2.0)
    half = z * math.sqrt(max(a, 0.0) * est.kernel.l2_norm_sq / (y * est.bandwidth))
    return max(a - half, 0.0), a + half


def ci_band(est: IntensityEstimate, sample: EventSample, gamma: float = 0.05):
    """Vectorised ``pointwise_ci`` over the whole grid; NaN where nobody is at risk."""
    y = at_risk(sample, est.grid).astype(float)
    z = stats.norm.ppf(1.0 - gamma / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        half = z * np.sqrt(est.values * est.kernel.l2_norm_sq / (y * est.bandwidth))
    half[y == 0] = np.nan
    return np.maximum(est.values - half, 0.0), est.values + half


@dataclass(frozen=True)
class LevelProfiles:
    """Dense-grid estimates and contrasts for every candidate level."""

    grid: np.ndarray
    values: dict  # level -> dense estimate (unclipped)
    contrasts: dict  # level -> gamma_n(j)


def contrast_grid(cfg: EstimatorConfig, sample: EventSample) -> np.ndarray:
    step = cfg.bandwidth(cfg.ladder.max_level) / 4.0
    m = int(math.ceil(sample.window_end / step))
    return np.linspace(0.0, sample.window_end, m + 1)


def level_profiles(cfg: EstimatorConfig, sample: EventSample, levels=None, *,
                   degree: int | None = None, deriv: int = 0,
                   leave_one_out: bool = True) -> LevelProfiles:
    """Contrast gamma_n(j) = int alpha_hat_j^2 - 2 sum_i alpha_hat_j^(-i)(X_i) Delta_i / Y(X_i).

    The cross term leaves out the diagonal pair i = l, which makes it an
    unbiased estimate of <alpha_hat_j, alpha>; keeping it (``leave_one_out=False``)
    rewards undersmoothing.
    """
    if sample.n == 0:
        raise EmptySample("sample has no records")
    levels = cfg.candidate_levels if levels is None else tuple(levels)
    dense = contrast_grid(cfg, sample)
    ev_idx = np.flatnonzero(sample.status & (sample.weights > 0))
    ev_times = sample.times[ev_idx]
    w = sample.weights[ev_idx]
    values, contrasts = {}, {}
    for j in levels:
        d, _, _ = _smooth_at(cfg, sample, j, dense, degree=degree, deriv=deriv)
        values[j] = d
        sq = np.trapezoid(d * d, dense)
        if ev_idx.size:
            at_ev, _, selfw = _smooth_at(cfg, sample, j, ev_times, degree=degree, deriv=deriv,
                                         self_idx=ev_idx)
            if not leave_one_out:
                selfw = 0.0
            cross = float(np.sum(w * (at_ev - selfw)))
        else:
            cross = 0.0
        contrasts[j] = float(sq - 2.0 * cross)
    return LevelProfiles(dense, values, contrasts)


def contrast(cfg: EstimatorConfig, sample: EventSample, j: int, *,
             leave_one_out: bool = True) -> float:
    return level_profiles(cfg, sample, (j,), leave_one_out=leave_one_out).contrasts[j]


def select_from_contrasts(contrasts: dict, penalty: float, n: int) -> SelectionResult:
    scores = {}
    best, best_total = None, math.inf
    for j in sorted(contrasts):
        pen = penalty * penalty_weight(j) / n
        total = contrasts[j] + pen
        scores[j] = (contrasts[j], pen, total)
        if total < best_total:
            best, best_total = j, total
    return SelectionResult(best, scores)


def select_level(cfg: EstimatorConfig, sample: EventSample, *, degree: int | None = None,
                 deriv: int = 0) -> SelectionResult:
    """Penalised contrast minimisation over the candidate levels (ties go to the smaller level)."""
    prof = level_profiles(cfg, sample, degree=degree, deriv=deriv)
    return select_from_contrasts(prof.contrasts, cfg.penalty, sample.n)
