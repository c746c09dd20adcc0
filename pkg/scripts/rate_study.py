"""Log-log ISE slopes against n for the classical and twin estimators.

Also reports the slope restricted to the interior [0.25, 4.75] and on a
shorter window where the risk set stays large, which separates the rate of
the estimator from the thinning of the risk set near the end of follow-up.

Usage: python scripts/rate_study.py [--reps N]
"""
import argparse
import time

import numpy as np

from twinkernel.sim import BenchmarkSettings, ScenarioSpec, loglog_slope, run_benchmark, scenario_seed

SIZES = [250, 500, 1000, 2000, 4000]


def slopes(aid, methods, reps, interval, domain_end=5.0, seed=7):
    scen = [ScenarioSpec(aid, n, scenario_seed(seed, aid, n), domain_end) for n in SIZES]
    # the circle needs h0 < T/2
    settings = BenchmarkSettings(h0=min(1.0, domain_end / 4), interval=interval)
    res = run_benchmark(scen, methods, reps, settings)
    out = {}
    for m in methods:
        means = [res.cell(aid, m, n).mean_ise for n in SIZES]
        out[m] = (loglog_slope(np.log(SIZES), np.log(means)), means)
    return out


def show(title, table):
    print(title)
    for m, ((slope, se), means) in table.items():
        ise = " ".join(f"{1000 * v:8.1f}" for v in means)
        print(f"  {m:<12} slope {slope:+.3f} (se {se:.3f})   ISE x1000: {ise}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=100)
    args = ap.parse_args()
    start = time.perf_counter()
    methods = ["classical", "twin", "twin_avg"]
    for aid in ("A1", "A3"):
        show(f"{aid} on [0, 5]", slopes(aid, methods, args.reps, (0.0, 5.0)))
        show(f"{aid} on [0.25, 4.75]", slopes(aid, methods, args.reps, (0.25, 4.75)))
        show(f"{aid} with window [0, 2]", slopes(aid, methods, args.reps, (0.0, 2.0), 2.0))
    print(f"\n{time.perf_counter() - start:.0f}s")


if __name__ == "__main__":
    main()
