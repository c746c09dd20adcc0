"""Simulated censored survival data, ISE and the replicate benchmark harness."""
from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooCoarse, InsufficientPoints
from .estimator import (
    EstimatorConfig,
    IntensityEstimate,
    level_profiles,
    select_from_contrasts,
)
from .group import identity, periodic_shift
from .kernels import BandwidthLadder, get_kernel
from .process import EventSample

__all__ = [
    "INTENSITIES",
    "ScenarioSpec",
    "MethodSpec",
    "METHODS",
    "CellResult",
    "BenchmarkResult",
    "BenchmarkSettings",
    "true_intensity",
    "cumulative_hazard",
    "inverse_cumulative_hazard",
    "simulate_sample",
    "ise",
    "ise_on_grid",
    "run_replicate",
    "run_benchmark",
    "rate_diagnostic",
    "worker_count",
    "scenario_seed",
    "loglog_slope",
]

INTENSITIES = ("A1", "A2", "A3")
TWO_PI = 2.0 * math.pi


def true_intensity(intensity_id: str, t):
    t = np.asarray(t, dtype=float)
    if intensity_id == "A1":
        out = 1.0 + 0.5 * np.sin(TWO_PI * t)
    elif intensity_id == "A2":
        out = 1.0 + 0.5 * np.sin(TWO_PI * t) + 0.1 * t
    elif intensity_id == "A3":
        out = np.exp(-t / 2.0) * (1.0 + t * t)
    elif intensity_id == "const":
        out = np.ones_like(t)
    else:
        raise ValueError(f"unknown intensity {intensity_id!r}")
    return float(out) if out.ndim == 0 else out


def cumulative_hazard(intensity_id: str, t):
    t = np.asarray(t, dtype=float)
    if intensity_id == "A1":
        out = t + (1.0 - np.cos(TWO_PI * t)) / (4.0 * math.pi)
    elif intensity_id == "A2":
        out = t + (1.0 - np.cos(TWO_PI * t)) / (4.0 * math.pi) + 0.05 * t * t
    elif intensity_id == "A3":
        # closed-form antiderivative of exp(-t/2)(1 + t^2)
        out = 18.0 - np.exp(-t / 2.0) * (2.0 * t * t + 8.0 * t + 18.0)
    elif intensity_id == "const":
        out = t.copy()
    else:
        raise ValueError(f"unknown intensity {intensity_id!r}")
    return float(out) if out.ndim == 0 else out


def inverse_cumulative_hazard(intensity_id: str, target, upper: float, tol: float = 1e-10):
    """Solve A(t) = target on [0, upper] by safeguarded Newton iteration.

    Targets beyond A(upper) return ``inf``.
    """
    target = np.asarray(target, dtype=float)
    out = np.full(target.shape, np.inf)
    inside = target <= cumulative_hazard(intensity_id, upper)
    e = target[inside]
    lo = np.zeros_like(e)
    hi = np.full_like(e, upper)
    x = np.clip(e, 0.0, upper)
    for _ in range(200):
        f = cumulative_hazard(intensity_id, x) - e
        lo = np.where(f <= 0, x, lo)
        hi = np.where(f > 0, x, hi)
        rate = true_intensity(intensity_id, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(rate > 0, f / rate, np.inf)
        nxt = x - step
        bad = ~((nxt > lo) & (nxt < hi))
        nxt = np.where(bad, 0.5 * (lo + hi), nxt)
        done = (np.abs(nxt - x) <= tol) & (np.abs(f) <= 1e-12 + 1e-12 * np.abs(e))
        x = nxt
        if np.all(done | (hi - lo <= tol)):
            break
    out[inside] = x
    return out


@dataclass(frozen=True)
class ScenarioSpec:
    intensity_id: str
    n: int
    seed: int = 0
    domain_end: float = 5.0
    c_max: float | None = 6.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.c_max is not None and not self.c_max > 0:
            raise ValueError("c_max must be positive")
        true_intensity(self.intensity_id, 0.0)


def _generator(*key) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


def simulate_sample(spec: ScenarioSpec) -> EventSample:
    """Draw n censored survival records.

    Subject i consumes the (2i)-th and (2i+1)-th uniforms of the stream keyed
    by the seed, so its record does not depend on n.
    """
    rng = _generator(spec.seed & 0xFFFFFFFFFFFFFFFF)
    u = rng.random((spec.n, 2))
    e = -np.log1p(-u[:, 0])
    t = inverse_cumulative_hazard(spec.intensity_id, e, spec.domain_end)
    c = spec.c_max * u[:, 1] if spec.c_max is not None else np.full(spec.n, np.inf)
    end = spec.domain_end
    x = np.minimum(np.minimum(t, c), end)
    status = t <= np.minimum(c, end)
    return EventSample(x, status, end)


def ise_on_grid(grid, values, truth_values, interval=None) -> float:
    grid = np.asarray(grid, dtype=float)
    diff2 = (np.asarray(values, dtype=float) - np.asarray(truth_values, dtype=float)) ** 2
    if interval is None:
        return float(np.trapezoid(diff2, grid))
    a, b = interval
    if not (grid[0] <= a + 1e-12 and grid[-1] >= b - 1e-12 and a < b):
        raise ValueError(f"grid does not cover [{a}, {b}]")
    inside = (grid > a) & (grid < b)
    g = np.concatenate([[a], grid[inside], [b]])
    d = np.concatenate([[np.interp(a, grid, diff2)], diff2[inside], [np.interp(b, grid, diff2)]])
    return float(np.trapezoid(d, g))


def ise(est: IntensityEstimate, intensity_id: str, interval=(0.0, 5.0)) -> float:
    """Trapezoid integral of (alpha_hat - alpha)^2 over ``interval`` on the estimate grid."""
    a, b = interval
    step = float(np.max(np.diff(est.grid))) if est.grid.size > 1 else math.inf
    if step > (b - a) / 64 + 1e-12:
        raise GridTooCoarse(f"grid step {step:.4g} exceeds (b - a)/64 = {(b - a) / 64:.4g}")
    values = est.values
    if est.derivative_order:
        raise ValueError("ISE is defined for intensity estimates, not derivatives")
    return ise_on_grid(est.grid, values, true_intensity(intensity_id, est.grid), interval)


# ---------------------------------------------------------------- methods


@dataclass(frozen=True)
class MethodSpec:
    """Benchmark method: an action plus an optional local polynomial degree."""

    name: str
    action: str = "identity"
    kernel_mode: str | None = None
    degree: int | None = None

    def config(self, domain_end: float, period: float, kernel: str, ladder: BandwidthLadder,
               penalty: float) -> EstimatorConfig:
        if self.action == "periodic":
            act = periodic_shift(period, domain_end)
        elif self.action == "identity":
            act = identity(domain_end)
        else:
            raise ValueError(f"benchmark action must be identity or periodic, got {self.action!r}")
        return EstimatorConfig(act, get_kernel(kernel), ladder, self.kernel_mode, penalty)


METHODS = {
    "classical": MethodSpec("classical", "identity"),
    "local_linear": MethodSpec("local_linear", "identity", degree=1),
    "twin": MethodSpec("twin", "periodic", "orbit_pooled"),
    "twin_lp": MethodSpec("twin_lp", "periodic", "orbit_pooled", degree=1),
    "twin_avg": MethodSpec("twin_avg", "periodic", "orbit_averaged"),
    "twin_avg_lp": MethodSpec("twin_avg_lp", "periodic", "orbit_averaged", degree=1),
}


@dataclass(frozen=True)
class BenchmarkSettings:
    h0: float = 1.0
    ratio: float = 0.5
    max_level: int = 7
    penalty: float = 2.0
    kernel: str = "epanechnikov"
    period: float = 1.0
    interval: tuple[float, float] = (0.0, 5.0)

    def ladder(self, n: int) -> BandwidthLadder:
        return BandwidthLadder(self.h0, self.ratio, self.max_level).capped(n)


@dataclass(frozen=True)
class ReplicateOutcome:
    ise: float
    chosen_level: int
    level_ise: dict


def run_replicate(scenario: ScenarioSpec, method: MethodSpec, settings: BenchmarkSettings,
                  rep: int) -> ReplicateOutcome:
    """Simulate one replicate, select the level and score it (plus every fixed level)."""
    sample = simulate_sample(_replicate_scenario(scenario, rep))
    ladder = settings.ladder(scenario.n)
    cfg = method.config(scenario.domain_end, settings.period, settings.kernel, ladder,
                        settings.penalty)
    prof = level_profiles(cfg, sample, degree=method.degree)
    sel = select_from_contrasts(prof.contrasts, cfg.penalty, sample.n)
    truth = true_intensity(scenario.intensity_id, prof.grid)
    level_ise = {
        j: ise_on_grid(prof.grid, np.maximum(v, 0.0), truth, settings.interval)
        for j, v in prof.values.items()
    }
    return ReplicateOutcome(level_ise[sel.chosen_level], sel.chosen_level, level_ise)


def _replicate_scenario(scenario: ScenarioSpec, rep: int) -> ScenarioSpec:
    seq = np.random.SeedSequence([scenario.seed & 0xFFFFFFFFFFFFFFFF, rep])
    seed = int(seq.generate_state(1, dtype=np.uint64)[0])
    return ScenarioSpec(scenario.intensity_id, scenario.n, seed, scenario.domain_end,
                        scenario.c_max)


def scenario_seed(base_seed: int, intensity_id: str, n: int) -> int:
    seq = np.random.SeedSequence([base_seed & 0xFFFFFFFFFFFFFFFF, INTENSITIES.index(intensity_id)
                                  if intensity_id in INTENSITIES else 99, n])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------- harness


@dataclass(frozen=True)
class CellResult:
    scenario: str
    method: str
    n: int
    reps: int
    mean_ise: float
    se: float | None
    runtime_ms: float | None
    ises: tuple = field(repr=False, default=())
    chosen_levels: tuple = field(repr=False, default=())
    level_ise: tuple = field(repr=False, default=())


@dataclass
class BenchmarkResult:
    cells: list

    def cell(self, scenario: str, method: str, n: int) -> CellResult:
        for c in self.cells:
            if (c.scenario, c.method, c.n) == (scenario, method, n):
                return c
        raise KeyError((scenario, method, n))

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["scenario", "method", "n", "reps", "mean_ise_x1000", "se_x1000", "runtime_ms"])
        for c in self.cells:
            wr.writerow([
                c.scenario, c.method, c.n, c.reps, f"{1000 * c.mean_ise:.6f}",
                "NA" if c.se is None else f"{1000 * c.se:.6f}",
                "NA" if c.runtime_ms is None else f"{c.runtime_ms:.1f}",
            ])
        return buf.getvalue()

    def summary(self) -> str:
        """Methods as rows, n as columns, one block per scenario."""
        sizes = sorted({c.n for c in self.cells})
        lines = []
        for scen in dict.fromkeys(c.scenario for c in self.cells):
            lines.append(f"Intensity {scen}: mean ISE x 1000 (SE)")
            lines.append("  " + f"{'method':<14}" + "".join(f"{n:>18}" for n in sizes))
            for meth in dict.fromkeys(c.method for c in self.cells if c.scenario == scen):
                row = f"  {meth:<14}"
                for n in sizes:
                    try:
                        c = self.cell(scen, meth, n)
                    except KeyError:
                        row += f"{'-':>18}"
                        continue
                    se = "NA" if c.se is None else f"{1000 * c.se:.2f}"
                    row += f"{1000 * c.mean_ise:>11.2f} ({se:>4})"
                lines.append(row)
        return "\n".join(lines)


def worker_count() -> int:
    env = os.environ.get("TWINKERNEL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"TWINKERNEL_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _task(args):
    scenario, method, settings, rep = args
    return run_replicate(scenario, method, settings, rep)


def run_benchmark(scenarios, methods, reps: int, settings: BenchmarkSettings | None = None,
                  workers: int | None = None, timing: bool = False) -> BenchmarkResult:
    """Mean and standard error of ISE per (scenario, method) cell.

    Replicate r of a scenario uses the same simulated sample for every method.
    Results do not depend on ``workers``: each replicate seeds itself and the
    aggregation runs in replicate order.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    settings = settings or BenchmarkSettings()
    methods = [METHODS[m] if isinstance(m, str) else m for m in methods]
    workers = worker_count() if workers is None else max(1, workers)
    cells = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for scen in scenarios:
            for meth in methods:
                start = time.perf_counter()
                tasks = [(scen, meth, settings, r) for r in range(reps)]
                if pool is None:
                    outs = [_task(t) for t in tasks]
                else:
                    outs = list(pool.map(_task, tasks, chunksize=max(1, reps // (4 * workers))))
                elapsed = 1000.0 * (time.perf_counter() - start)
                vals = np.array([o.ise for o in outs])
                mean = float(math.fsum(vals) / reps)
                se = float(np.std(vals, ddof=1) / math.sqrt(reps)) if reps > 1 else None
                cells.append(CellResult(
                    scen.intensity_id, meth.name, scen.n, reps, mean, se,
                    elapsed if timing else None, tuple(vals),
                    tuple(o.chosen_level for o in outs),
                    tuple(o.level_ise for o in outs),
                ))
    finally:
        if pool is not None:
            pool.shutdown()
    return BenchmarkResult(cells)


def rate_diagnostic(results: BenchmarkResult, scenario: str, method: str):
    """OLS slope (and its standard error) of log mean ISE against log n."""
    pts = sorted((c.n, c.mean_ise) for c in results.cells
                 if c.scenario == scenario and c.method == method)
    if len(pts) < 3:
        raise InsufficientPoints(f"need >= 3 sample sizes, have {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return loglog_slope(x, y)


def loglog_slope(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    slope = float(np.dot(xc, y - y.mean()) / sxx)
    resid = y - y.mean() - slope * xc
    dof = x.size - 2
    stderr = math.sqrt(float(np.dot(resid, resid)) / dof / sxx) if dof > 0 else math.nan
    return slope, stderr
