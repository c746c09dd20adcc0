"""Right-censored event data, the at-risk process and Nelson-Aalen estimation."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "EventSample",
    "CumulativeHazardPath",
    "SampleFormatError",
    "at_risk",
    "nelson_aalen",
    "compensator_residual",
    "read_csv",
    "parse_csv",
]


class SampleFormatError(ValueError):
    """Malformed event CSV; ``line`` is the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class EventSample:
    """Observed times X_i = min(T_i, C_i) with event indicators, sorted ascending.

    At tied times events are placed before censorings.
    """

    times: np.ndarray
    status: np.ndarray
    window_end: float
    _weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float).ravel()
        status = np.asarray(self.status).ravel().astype(bool)
        if times.shape != status.shape:
            raise ValueError("times and status must have the same length")
        if np.any(~np.isfinite(times)) or np.any(times < 0):
            raise ValueError("times must be finite and nonnegative")
        if not self.window_end > 0:
            raise ValueError("window_end must be positive")
        if times.size and times.max() > self.window_end:
            raise ValueError("all times must be <= window_end")
        order = np.lexsort((~status, times))
        times, status = times[order], status[order]
        times.flags.writeable = False
        status.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "status", status)
        object.__setattr__(self, "window_end", float(self.window_end))
        n = times.size
        y = n - np.searchsorted(times, times, side="left")
        w = np.where(status, 1.0 / np.maximum(y, 1), 0.0)
        w.flags.writeable = False
        object.__setattr__(self, "_weights", w)

    @classmethod
    def from_arrays(cls, times, status, window_end: float | None = None) -> "EventSample":
        times = np.asarray(times, dtype=float)
        if window_end is None:
            window_end = float(times.max()) if times.size and times.max() > 0 else 1.0
        return cls(times, status, window_end)

    @property
    def n(self) -> int:
        return int(self.times.size)

    @property
    def n_events(self) -> int:
        return int(self.status.sum())

    @property
    def weights(self) -> np.ndarray:
        """Delta_i / Y(X_i): the jump of the Nelson-Aalen estimator attributable to record i."""
        return self._weights

    def at_risk(self, t):
        return at_risk(self, t)

    def __len__(self):
        return self.n


def at_risk(sample: EventSample, t):
    """Y(t) = #{i : X_i >= t} (left-continuous)."""
    y = sample.n - np.searchsorted(sample.times, np.asarray(t, dtype=float), side="left")
    return int(y) if np.ndim(y) == 0 else y


@dataclass(frozen=True)
class CumulativeHazardPath:
    jump_times: np.ndarray
    values: np.ndarray
    variance_values: np.ndarray

    def __call__(self, t):
        """Right-continuous step evaluation."""
        idx = np.searchsorted(self.jump_times, np.asarray(t, dtype=float), side="right")
        vals = np.concatenate([[0.0], self.values])[idx]
        return float(vals) if np.ndim(vals) == 0 else vals

    def variance(self, t):
        idx = np.searchsorted(self.jump_times, np.asarray(t, dtype=float), side="right")
        vals = np.concatenate([[0.0], self.variance_values])[idx]
        return float(vals) if np.ndim(vals) == 0 else vals


def nelson_aalen(sample: EventSample) -> CumulativeHazardPath:
    """Nelson-Aalen estimator with the optional-variation variance sum(1/Y^2).

    Partial sums are accumulated in extended precision and rounded once.
    """
    ev = sample.status
    t_ev = sample.times[ev]
    if t_ev.size == 0:
        empty = np.empty(0)
        return CumulativeHazardPath(empty, empty, empty)
    y = (sample.n - np.searchsorted(sample.times, t_ev, side="left")).astype(np.longdouble)
    inv = np.longdouble(1) / y
    jump_times, first = np.unique(t_ev, return_index=True)
    cum = np.cumsum(inv)
    cum_var = np.cumsum(inv * inv)
    last = np.append(first[1:], t_ev.size) - 1
    return CumulativeHazardPath(jump_times, cum[last].astype(float), cum_var[last].astype(float))


def compensator_residual(sample: EventSample, truth: Callable[[float], float], t: float,
                         cumulative: Callable[[float], float] | None = None) -> float:
    """A_hat(t) - int_0^t J(s) alpha(s) ds.

    J(s) = 1 exactly while someone is at risk, i.e. for s <= max X_i.  When the
    antiderivative ``cumulative`` is known it replaces the quadrature.
    """
    a_hat = nelson_aalen(sample)(t)
    upper = min(t, float(sample.times[-1])) if sample.n else 0.0
    if upper <= 0:
        return a_hat
    if cumulative is not None:
        comp = cumulative(upper) - cumulative(0.0)
    else:
        comp = integrate.quad(truth, 0.0, upper, limit=200, epsabs=1e-12)[0]
    return a_hat - comp


def _parse_rows(lines, window_end):
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise SampleFormatError("empty file", 1) from None
    if [h.strip().lower() for h in header] != ["time", "status"]:
        raise SampleFormatError("header must be 'time,status'", 1)
    times, status = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise SampleFormatError(f"expected 2 fields, got {len(row)}", lineno)
        try:
            t = float(row[0])
        except ValueError:
            raise SampleFormatError(f"time {row[0]!r} is not a number", lineno) from None
        if not np.isfinite(t) or t < 0:
            raise SampleFormatError(f"time {row[0]!r} must be finite and nonnegative", lineno)
        s = row[1].strip()
        if s not in ("0", "1"):
            raise SampleFormatError(f"status {row[1]!r} must be 0 or 1", lineno)
        times.append(t)
        status.append(s == "1")
    if not times:
        raise SampleFormatError("no records", 2)
    if window_end is not None and max(times) > window_end:
        raise SampleFormatError(f"time {max(times)} exceeds window end {window_end}")
    return EventSample.from_arrays(times, status, window_end)


def parse_csv(text: str, window_end: float | None = None) -> EventSample:
    return _parse_rows(io.StringIO(text, newline=None), window_end)


def read_csv(path, window_end: float | None = None) -> EventSample:
    """Read a ``time,status`` CSV (LF or CRLF); rows need not be sorted."""
    return parse_csv(Path(path).read_text(encoding="utf-8-sig"), window_end)
