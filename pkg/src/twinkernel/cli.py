"""Command-line front end: ``twinkernel {estimate,select,simulate,benchmark,plot}``.

Exit codes: 0 success, 2 input error, 3 config error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .config import (
    ConfigError,
    load_json,
    parse_benchmark_config,
    parse_estimator_config,
)
from .errors import EmptySample, OutOfDomain, SingularMomentMatrix
from .estimator import ci_band, estimate_level, select_level
from .local_poly import locpoly_estimate
from .process import SampleFormatError, read_csv
from .sim import INTENSITIES, ScenarioSpec, run_benchmark, simulate_sample, true_intensity

EXIT_OK, EXIT_INPUT, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4
INTERIOR = (0.25, 4.75)
ESTIMATE_HEADER = ["t", "alpha_hat", "var_proxy", "ci_lo", "ci_hi"]


class InputError(ValueError):
    pass


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


# ---------------------------------------------------------------- estimate / select


def _settings(args):
    doc = load_json(args.config) if args.config else {}
    over = dict(action_name=args.action, period=args.period, domain_end=args.domain_end,
                penalty=args.penalty, grid_size=args.grid_size, window_end=args.window_end,
                level=getattr(args, "level", None))
    if getattr(args, "method", None) == "classical":
        # classical kernel smoothing: identity action at the coarsest bandwidth
        over.update(action_name="identity", level=0, period=None)
        doc.pop("local_poly", None)
        doc.pop("kernel_mode", None)
        if "action" in doc:
            doc["action"] = {k: v for k, v in doc["action"].items() if k in ("domain_end",)}
            doc["action"]["name"] = "identity"
    if args.interval is not None:
        over["interval"] = list(args.interval)
    return parse_estimator_config(doc, **over)


def _load_sample(path, window_end):
    try:
        sample = read_csv(path, window_end)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except SampleFormatError as exc:
        raise InputError(f"{path}: {exc}") from None
    if sample.n == 0:
        raise InputError(f"{path}: no records")
    return sample


def _grid(run, sample):
    a, b = run.interval if run.interval is not None else (0.0, sample.window_end)
    return np.linspace(a, b, run.grid_size)


def _selection_doc(sel):
    return {str(j): {"contrast": c, "penalty": p, "total": t} for j, (c, p, t) in sel.scores.items()}


def cmd_estimate(args) -> int:
    run = _settings(args)
    sample = _load_sample(args.input, run.window_end)
    run = run.for_sample(sample.n)
    cfg = run.estimator
    deg = run.locpoly.degree if run.locpoly else None
    deriv = run.locpoly.derivative_order if run.locpoly else 0
    sel = None
    level = run.level
    if level is None:
        sel = select_level(cfg, sample, degree=deg, deriv=deriv)
        level = sel.chosen_level
    grid = _grid(run, sample)
    if run.locpoly is not None:
        est = locpoly_estimate(run.locpoly, sample, level, grid)
    else:
        est = estimate_level(cfg, sample, level, grid)
    lo, hi = ci_band(est, sample, run.gamma)
    if deriv > 0:
        lo = np.full_like(lo, np.nan)
        hi = np.full_like(hi, np.nan)
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(ESTIMATE_HEADER)
    for row in zip(est.grid, est.values, est.variance_proxy, lo, hi):
        wr.writerow([_fmt(x) for x in row])
    out = Path(args.output)
    out.write_text(buf.getvalue(), encoding="utf-8")
    side = {
        "level": level,
        "bandwidth": est.bandwidth,
        "action": cfg.action.kind,
        "kernel": cfg.kernel.id,
        "kernel_mode": cfg.kernel_mode,
        "selection_scores": _selection_doc(sel) if sel else None,
    }
    if run.locpoly is not None:
        side["degree"] = run.locpoly.degree
        side["derivative_order"] = run.locpoly.derivative_order
    out.with_suffix(".json").write_text(json.dumps(side, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_select(args) -> int:
    run = _settings(args)
    sample = _load_sample(args.input, run.window_end)
    run = run.for_sample(sample.n)
    deg = run.locpoly.degree if run.locpoly else None
    deriv = run.locpoly.derivative_order if run.locpoly else 0
    sel = select_level(run.estimator, sample, degree=deg, deriv=deriv)
    doc = {"chosen_level": sel.chosen_level,
           "bandwidth": run.estimator.bandwidth(sel.chosen_level),
           "scores": _selection_doc(sel)}
    text = json.dumps(doc, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- simulate / benchmark


def cmd_simulate(args) -> int:
    try:
        spec = ScenarioSpec(args.scenario, args.n, args.seed, args.domain_end or 5.0)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    sample = simulate_sample(spec)
    lines = ["time,status"] + [f"{float(t)!r},{int(d)}" for t, d in zip(sample.times, sample.status)]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    doc = load_json(args.config)
    interval = INTERIOR if args.interior else args.interval
    scenarios, methods, reps, settings = parse_benchmark_config(
        doc, seed=args.seed, reps=args.reps, interval=interval)
    res = run_benchmark(scenarios, methods, reps, settings, timing=args.timing)
    text = res.to_csv()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(res.summary())
    return EXIT_OK


# ---------------------------------------------------------------- plot


def read_estimate_csv(path):
    """Columns of an estimate CSV as float arrays, validating the header."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ESTIMATE_HEADER:
        raise InputError(f"{path}: line 1: expected header {','.join(ESTIMATE_HEADER)}")
    data = []
    for k, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(ESTIMATE_HEADER):
            raise InputError(f"{path}: line {k}: expected {len(ESTIMATE_HEADER)} fields")
        try:
            data.append([float(x) for x in row])
        except ValueError:
            raise InputError(f"{path}: line {k}: non-numeric field") from None
    if not data:
        raise InputError(f"{path}: no data rows")
    return np.array(data).T


def render_svg(t, alpha, lo, hi, truth=None, truth_label="truth", width=640, height=400) -> str:
    """Standalone SVG: CI band polygon, estimate polyline and an optional truth polyline."""
    left, right, top, bottom = 60, 20, 20, 45
    pw, ph = width - left - right, height - top - bottom
    lo = np.where(np.isfinite(lo), lo, alpha)
    hi = np.where(np.isfinite(hi), hi, alpha)
    curves = [alpha, lo, hi] + ([truth] if truth is not None else [])
    ymax = max(float(np.nanmax(c)) for c in curves)
    ymin = min(0.0, min(float(np.nanmin(c)) for c in curves))
    if not ymax > ymin:
        ymax = ymin + 1.0
    x0, x1 = float(t[0]), float(t[-1])
    if not x1 > x0:
        x1 = x0 + 1.0

    def px(x):
        return left + pw * (x - x0) / (x1 - x0)

    def py(y):
        return top + ph * (1.0 - (y - ymin) / (ymax - ymin))

    def pts(xs, ys):
        return " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>']
    band = pts(np.concatenate([t, t[::-1]]), np.concatenate([hi, lo[::-1]]))
    out.append(f'<polygon class="ci-band" points="{band}" fill="#9ecae1" fill-opacity="0.5" '
               'stroke="none"/>')
    if truth is not None:
        out.append(f'<polyline class="truth" points="{pts(t, truth)}" fill="none" stroke="#d62728" '
                   'stroke-width="1.5" stroke-dasharray="6,3"/>')
    out.append(f'<polyline class="estimate" points="{pts(t, alpha)}" fill="none" stroke="#08519c" '
               'stroke-width="1.5"/>')
    # axes and ticks
    out.append(f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>')
    for x in np.linspace(x0, x1, 6):
        out.append(f'<line x1="{px(x):.2f}" y1="{top + ph}" x2="{px(x):.2f}" y2="{top + ph + 5}" '
                   'stroke="black"/>')
        out.append(f'<text x="{px(x):.2f}" y="{top + ph + 18}" font-size="11" '
                   f'text-anchor="middle">{x:.3g}</text>')
    for y in np.linspace(ymin, ymax, 5):
        out.append(f'<line x1="{left - 5}" y1="{py(y):.2f}" x2="{left}" y2="{py(y):.2f}" '
                   'stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py(y) + 4:.2f}" font-size="11" '
                   f'text-anchor="end">{y:.3g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 8}" font-size="12" '
               'text-anchor="middle">t</text>')
    # legend
    entries = [("#08519c", "estimate", ""), ("#9ecae1", "pointwise CI", "")]
    if truth is not None:
        entries.append(("#d62728", escape(truth_label), ' stroke-dasharray="6,3"'))
    lx, ly = left + pw - 150, top + 10
    out.append('<g class="legend">')
    for k, (color, label, dash) in enumerate(entries):
        y = ly + 16 * k
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 24}" y2="{y}" stroke="{color}" '
                   f'stroke-width="3"{dash}/>')
        out.append(f'<text x="{lx + 30}" y="{y + 4}" font-size="11">{label}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cmd_plot(args) -> int:
    t, alpha, _, lo, hi = read_estimate_csv(args.input)
    truth = true_intensity(args.truth, t) if args.truth else None
    svg = render_svg(t, alpha, lo, hi, truth, f"truth {args.truth}" if args.truth else "truth")
    Path(args.output).write_text(svg, encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_estimator_flags(p):
    p.add_argument("input", help="CSV with header time,status")
    p.add_argument("--config", help="estimator JSON config")
    p.add_argument("--action", choices=["identity", "periodic", "dyadic"])
    p.add_argument("--period", type=float)
    p.add_argument("--domain-end", type=float)
    p.add_argument("--window-end", type=float, help="end of the observation window")
    p.add_argument("--penalty", type=float, help="penalty constant lambda")
    p.add_argument("--grid-size", type=int)
    p.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twinkernel",
                                     description="Twin-kernel intensity estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate the intensity on a grid")
    _add_estimator_flags(p)
    p.add_argument("-o", "--output", required=True, help="estimate CSV; sidecar goes next to it")
    p.add_argument("--level", type=int, help="fixed level instead of penalised selection")
    p.add_argument("--method", choices=["twin", "classical"], default="twin")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("select", help="print penalised selection scores")
    _add_estimator_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate", help="simulate a censored sample")
    p.add_argument("--scenario", choices=list(INTENSITIES), required=True)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--domain-end", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="Monte-Carlo ISE benchmark")
    p.add_argument("--config", required=True, help="benchmark JSON config")
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"))
    g.add_argument("--interior", action="store_true", help=f"ISE over {INTERIOR}")
    p.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("plot", help="SVG plot of an estimate CSV")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--truth", choices=list(INTENSITIES))
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "grid_size", None) is not None and args.grid_size < 64:
            raise ConfigError("grid size must be at least 64")
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (EmptySample, OutOfDomain) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularMomentMatrix as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
