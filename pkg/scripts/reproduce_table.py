"""Run the 3 x 4 x 4 benchmark grid and print the ISE table.

Usage: python scripts/reproduce_table.py [--reps N] [--interior] [--out results/table.csv]
"""
import argparse
import json
import time
from pathlib import Path

from twinkernel.config import parse_benchmark_config
from twinkernel.sim import run_benchmark

HERE = Path(__file__).parent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default=HERE / "configs" / "table.json")
    ap.add_argument("--reps", type=int)
    ap.add_argument("--interior", action="store_true", help="ISE over [0.25, 4.75]")
    ap.add_argument("--out", default=HERE / "results" / "table.csv")
    args = ap.parse_args()

    doc = json.loads(Path(args.config).read_text())
    interval = (0.25, 4.75) if args.interior else None
    scen, methods, reps, settings = parse_benchmark_config(doc, reps=args.reps, interval=interval)
    start = time.perf_counter()
    res = run_benchmark(scen, methods, reps, settings)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(res.to_csv())
    print(res.summary())
    # ratios to the classical smoother, the quantity the comparison is really about
    print("\nratio of mean ISE to classical")
    for c in res.cells:
        if c.method != "classical":
            base = res.cell(c.scenario, "classical", c.n).mean_ise
            print(f"  {c.scenario} {c.method:<13} n={c.n:<5} {c.mean_ise / base:6.3f}")
    print(f"\n{len(res.cells)} cells, {reps} reps, {time.perf_counter() - start:.0f}s -> {out}")


if __name__ == "__main__":
    main()
