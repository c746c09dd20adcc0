"""JSON run configurations for the command-line interface.

Both schemas reject unknown keys.  ``ESTIMATOR_SCHEMA`` drives ``estimate`` and
``select``; ``BENCHMARK_SCHEMA`` drives ``benchmark``.
"""
from __future__ import annotations

import json
import math
from dataclasses import replace
from pathlib import Path

import jsonschema

from .estimator import KERNEL_MODES, EstimatorConfig
from .group import make_action
from .kernels import KERNELS, BandwidthLadder, get_kernel
from .local_poly import LocPolyConfig
from .sim import INTENSITIES, METHODS, BenchmarkSettings, MethodSpec

__all__ = ["ConfigError", "ESTIMATOR_SCHEMA", "BENCHMARK_SCHEMA", "load_json", "RunSettings",
           "parse_estimator_config", "parse_benchmark_config"]


class ConfigError(ValueError):
    pass


_LADDER = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "h0": {"type": "number", "exclusiveMinimum": 0},
        "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "max_level": {"type": "integer", "minimum": 0},
    },
}

ESTIMATOR_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "action": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": ["identity", "periodic", "dyadic"]},
                "period": {"type": "number", "exclusiveMinimum": 0},
                "domain_end": {"type": "number", "exclusiveMinimum": 0},
                "d_eff_hint": {"type": "number", "minimum": 0},
            },
        },
        "kernel": {"enum": sorted(KERNELS)},
        "ladder": _LADDER,
        "kernel_mode": {"enum": list(KERNEL_MODES)},
        "penalty": {"type": "number", "exclusiveMinimum": 0},
        "candidate_levels": {"type": "array", "items": {"type": "integer", "minimum": 0},
                             "minItems": 1},
        "local_poly": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "degree": {"type": "integer", "minimum": 0, "maximum": 3},
                "derivative_order": {"type": "integer", "minimum": 0, "maximum": 3},
            },
        },
        "level": {"type": "integer", "minimum": 0},
        "grid_size": {"type": "integer", "minimum": 64},
        "interval": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "window_end": {"type": "number", "exclusiveMinimum": 0},
        "gamma": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
}

BENCHMARK_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["scenarios", "methods", "sizes"],
    "properties": {
        "scenarios": {"type": "array", "items": {"enum": list(INTENSITIES)}, "minItems": 1},
        "methods": {"type": "array", "minItems": 1, "items": {
            "anyOf": [
                {"enum": sorted(METHODS)},
                {"type": "object", "additionalProperties": False, "required": ["name", "action"],
                 "properties": {
                     "name": {"type": "string"},
                     "action": {"enum": ["identity", "periodic"]},
                     "kernel_mode": {"enum": list(KERNEL_MODES)},
                     "degree": {"type": "integer", "minimum": 0, "maximum": 3},
                 }},
            ]}},
        "sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "reps": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "domain_end": {"type": "number", "exclusiveMinimum": 0},
        "c_max": {"type": "number", "exclusiveMinimum": 0},
        "settings": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "h0": {"type": "number", "exclusiveMinimum": 0},
                "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "max_level": {"type": "integer", "minimum": 0},
                "penalty": {"type": "number", "exclusiveMinimum": 0},
                "kernel": {"enum": sorted(KERNELS)},
                "period": {"type": "number", "exclusiveMinimum": 0},
                "interval": {"type": "array", "items": {"type": "number"}, "minItems": 2,
                             "maxItems": 2},
            },
        },
    },
}


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def _validate(doc: dict, schema: dict):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {exc.message}") from None


class RunSettings:
    """Parsed estimator settings plus the output-grid options."""

    def __init__(self, estimator: EstimatorConfig, locpoly: LocPolyConfig | None, level: int | None,
                 grid_size: int, interval, window_end: float | None, gamma: float,
                 explicit_levels: bool = False):
        self.estimator = estimator
        self.explicit_levels = explicit_levels
        self.locpoly = locpoly
        self.level = level
        self.grid_size = grid_size
        self.interval = interval
        self.window_end = window_end
        self.gamma = gamma

    def for_sample(self, n: int) -> "RunSettings":
        """Drop ladder levels with n h < 1 unless the levels were listed explicitly."""
        if self.explicit_levels:
            return self
        capped = self.estimator.ladder.capped(n)
        if self.level is not None and self.level > capped.max_level:
            return self
        est = replace(self.estimator, ladder=capped, candidate_levels=None)
        lp = replace(self.locpoly, base=est) if self.locpoly is not None else None
        return RunSettings(est, lp, self.level, self.grid_size, self.interval, self.window_end,
                           self.gamma, False)


def parse_estimator_config(doc: dict | None = None, **overrides) -> RunSettings:
    """Build estimator settings from a config document; non-None ``overrides`` win."""
    doc = dict(doc or {})
    _validate(doc, ESTIMATOR_SCHEMA)
    for key, val in overrides.items():
        if val is None:
            continue
        if key in ("action_name", "period", "domain_end"):
            action = dict(doc.get("action", {"name": "identity"}))
            action[{"action_name": "name"}.get(key, key)] = val
            doc["action"] = action
        else:
            doc[key] = val
    _validate(doc, ESTIMATOR_SCHEMA)
    try:
        act_doc = doc.get("action", {"name": "identity"})
        window_end = doc.get("window_end")
        domain_end = act_doc.get("domain_end", window_end)
        if act_doc["name"] == "dyadic":
            domain_end = None
        action = make_action(act_doc["name"], period=act_doc.get("period"),
                             domain_end=domain_end if domain_end is not None else math.inf,
                             d_eff_hint=act_doc.get("d_eff_hint"))
        ladder = BandwidthLadder(**doc.get("ladder", {}))
        levels = doc.get("candidate_levels")
        est = EstimatorConfig(action, get_kernel(doc.get("kernel", "epanechnikov")), ladder,
                              doc.get("kernel_mode"), doc.get("penalty", 2.0),
                              tuple(levels) if levels else None)
        lp = None
        if "local_poly" in doc:
            lp = LocPolyConfig(est, doc["local_poly"].get("degree", 1),
                               doc["local_poly"].get("derivative_order", 0))
        level = doc.get("level")
        if level is not None and level not in est.candidate_levels:
            raise ValueError(f"level {level} is not among the candidate levels")
        interval = doc.get("interval")
        if interval is not None and not interval[0] < interval[1]:
            raise ValueError("interval must satisfy a < b")
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    if window_end is None and math.isfinite(action.domain_end):
        window_end = action.domain_end
    return RunSettings(est, lp, level, doc.get("grid_size", 512), interval, window_end,
                       doc.get("gamma", 0.05), bool(levels))



def parse_benchmark_config(doc: dict, **overrides):
    """Return (scenarios, methods, reps, settings) for ``run_benchmark``."""
    from .sim import ScenarioSpec, scenario_seed

    doc = dict(doc)
    for key, val in overrides.items():
        if val is not None:
            if key == "interval":
                doc.setdefault("settings", {})
                doc["settings"] = dict(doc["settings"], interval=list(val))
            else:
                doc[key] = val
    _validate(doc, BENCHMARK_SCHEMA)
    try:
        seed = doc.get("seed", 0)
        domain_end = doc.get("domain_end", 5.0)
        c_max = doc.get("c_max", 6.0)
        scenarios = [ScenarioSpec(a, n, scenario_seed(seed, a, n), domain_end, c_max)
                     for a in doc["scenarios"] for n in doc["sizes"]]
        methods = []
        for m in doc["methods"]:
            methods.append(METHODS[m] if isinstance(m, str) else MethodSpec(**m))
        names = [m.name for m in methods]
        if len(set(names)) != len(names):
            raise ValueError("method names must be unique")
        s = dict(doc.get("settings", {}))
        if "interval" in s:
            s["interval"] = tuple(s["interval"])
            if not 0 <= s["interval"][0] < s["interval"][1] <= domain_end:
                raise ValueError("interval must lie inside [0, domain_end] with a < b")
        settings = BenchmarkSettings(**s)
        for m in methods:
            m.config(domain_end, settings.period, settings.kernel,
                     settings.ladder(min(doc["sizes"])), settings.penalty)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return scenarios, methods, doc.get("reps", 100), settings
