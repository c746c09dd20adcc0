"""Cyclic group actions on the time axis.

Three actions are provided: the identity, a periodic shift acting on the
torus [0, T) with T a multiple of the period, and dyadic scaling t -> 2t on
the half-line.  Each carries the metric used to compare transported points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomain

__all__ = ["GroupAction", "identity", "periodic_shift", "dyadic_scale", "make_action"]

_KINDS = ("identity", "periodic", "dyadic")


@dataclass(frozen=True)
class GroupAction:
    """A cyclic action phi on the time domain.

    Parameters
    ----------
    kind : {"identity", "periodic", "dyadic"}
    domain_end : float
        Right end T of the domain [0, T]; ``inf`` means the half-line.
    period : float or None
        Shift length for the periodic action; ``domain_end`` must be an
        integer multiple of it.
    d_eff_hint : float or None
        Effective dimension used only by rate diagnostics.  Defaults to 0 for
        the periodic action and 1 otherwise.
    """

    kind: str
    domain_end: float = math.inf
    period: float | None = None
    d_eff_hint: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown action {self.kind!r}; choose from {_KINDS}")
        if self.kind == "periodic":
            if self.period is None or not self.period > 0:
                raise ValueError("periodic action needs a positive period")
            if not math.isfinite(self.domain_end):
                raise ValueError("periodic action needs a finite domain_end")
            cycles = self.domain_end / self.period
            if abs(cycles - round(cycles)) > 1e-9 or round(cycles) < 1:
                raise ValueError("domain_end must be an integer multiple of period")
        if self.kind == "dyadic" and math.isfinite(self.domain_end):
            raise ValueError("dyadic scaling acts on the half-line; leave domain_end infinite")
        if self.d_eff_hint is None:
            object.__setattr__(self, "d_eff_hint", 0.0 if self.kind == "periodic" else 1.0)

    @property
    def circular(self) -> bool:
        return self.kind == "periodic"

    @property
    def quasi_measure_bounds(self) -> tuple[float, float]:
        return (2.0, 2.0) if self.kind == "dyadic" else (1.0, 1.0)

    @property
    def orbit_size(self) -> float:
        if self.kind == "periodic":
            return round(self.domain_end / self.period)
        return 1 if self.kind == "identity" else math.inf

    def check_domain(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(~np.isfinite(t)) or np.any(t < 0) or np.any(t > self.domain_end):
            raise OutOfDomain(f"time outside domain [0, {self.domain_end}]")
        return t

    def power(self, j: int, t):
        """phi^j(t); negative j applies the inverse."""
        t = self.check_domain(t)
        if self.kind == "identity":
            out = t.copy()
        elif self.kind == "periodic":
            out = np.mod(t + j * self.period, self.domain_end)
        else:
            out = np.ldexp(t, j)
        return float(out) if out.ndim == 0 else out

    def forward(self, t):
        return self.power(1, t)

    def inverse(self, t):
        return self.power(-1, t)

    def distance(self, a, b):
        """Metric on the domain: circular for the torus, absolute difference otherwise."""
        diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
        if self.circular:
            diff = np.mod(diff, self.domain_end)
            diff = np.minimum(diff, self.domain_end - diff)
        return float(diff) if np.ndim(diff) == 0 else diff

    def transported_distance(self, j: int, t, s):
        return self.distance(self.power(-j, t), self.power(-j, s))

    def orbit(self, t: float, depth: int) -> list[float]:
        """[t, phi^-1(t), ..., phi^-depth(t)]."""
        if depth < 0:
            raise ValueError("depth must be >= 0")
        self.check_domain(t)
        return [float(self.power(-k, t)) for k in range(depth + 1)]


def identity(domain_end: float = math.inf) -> GroupAction:
    return GroupAction("identity", domain_end)


def periodic_shift(period: float, domain_end: float) -> GroupAction:
    return GroupAction("periodic", domain_end, period)


def dyadic_scale() -> GroupAction:
    return GroupAction("dyadic")


def make_action(name: str, *, period: float | None = None, domain_end: float | None = None,
                d_eff_hint: float | None = None) -> GroupAction:
    name = name.lower()
    if name in ("identity", "id"):
        return GroupAction("identity", math.inf if domain_end is None else domain_end,
                           d_eff_hint=d_eff_hint)
    if name in ("periodic", "periodicshift", "periodic_shift"):
        return GroupAction("periodic", domain_end, period, d_eff_hint)
    if name in ("dyadic", "dyadicscale", "dyadic_scale"):
        return GroupAction("dyadic", d_eff_hint=d_eff_hint)
    raise ValueError(f"unknown action {name!r}")
