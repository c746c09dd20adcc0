"""Compactly supported base kernels, bandwidth ladders and equivalent kernels.

All kernels live on [-1, 1], are nonnegative and integrate to one.  The
equivalent kernel of order (m, r) is the effective weight function produced
by a degree-r local polynomial fit when estimating the m-th derivative; a
truncated support window encodes proximity to a boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import SingularMomentMatrix

__all__ = [
    "KernelSpec",
    "BandwidthLadder",
    "EPANECHNIKOV",
    "TRIANGULAR",
    "UNIFORM",
    "KERNELS",
    "get_kernel",
    "eval_kernel",
    "kernel_l2_norm_sq",
    "moment_matrix",
    "kernel_moments",
    "equivalent_kernel_coefficients",
    "equivalent_kernel",
]

# integer codes shared with the compiled smoothing loop
KERNEL_CODES = {"epanechnikov": 0, "triangular": 1, "uniform": 2}

COND_LIMIT = 1e12


def _epanechnikov(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def _triangular(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 1.0 - np.abs(u), 0.0)


def _uniform(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 0.5, 0.0)


@dataclass(frozen=True)
class KernelSpec:
    """A base kernel supported on [-1, 1].

    ``lipschitz_const`` is ``inf`` for the uniform kernel, which has jumps at
    the support endpoints.
    """

    id: str
    func: Callable[[np.ndarray], np.ndarray]
    sup_norm: float
    lipschitz_const: float
    l2_norm_sq: float
    support_radius: float = 1.0

    @property
    def code(self) -> int:
        return KERNEL_CODES[self.id]

    def eval(self, u):
        out = self.func(u)
        return float(out) if np.ndim(out) == 0 else out

    def __call__(self, u):
        return self.eval(u)


EPANECHNIKOV = KernelSpec("epanechnikov", _epanechnikov, 0.75, 1.5, 0.6)
TRIANGULAR = KernelSpec("triangular", _triangular, 1.0, 1.0, 2.0 / 3.0)
UNIFORM = KernelSpec("uniform", _uniform, 0.5, math.inf, 0.5)

KERNELS = {k.id: k for k in (EPANECHNIKOV, TRIANGULAR, UNIFORM)}


def get_kernel(name: str | KernelSpec) -> KernelSpec:
    if isinstance(name, KernelSpec):
        return name
    try:
        return KERNELS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None


def eval_kernel(kernel: KernelSpec, u):
    return kernel.eval(u)


def kernel_l2_norm_sq(kernel: KernelSpec) -> float:
    """R(K) = integral of K(u)^2, closed form for the registered kernels."""
    return kernel.l2_norm_sq


@dataclass(frozen=True)
class BandwidthLadder:
    """Geometric bandwidth sequence h_j = h0 * ratio**j, j = 0..max_level."""

    h0: float = 1.0
    ratio: float = 0.5
    max_level: int = 7

    def __post_init__(self):
        if not self.h0 > 0:
            raise ValueError("h0 must be positive")
        if not 0.0 < self.ratio < 1.0:
            raise ValueError("ratio must lie in (0, 1)")
        if self.max_level < 0:
            raise ValueError("max_level must be >= 0")

    def bandwidth(self, j: int) -> float:
        if not 0 <= j <= self.max_level:
            raise ValueError(f"level {j} outside ladder [0, {self.max_level}]")
        return self.h0 * self.ratio**j

    @property
    def bandwidths(self) -> np.ndarray:
        return self.h0 * self.ratio ** np.arange(self.max_level + 1)

    def levels(self) -> list[int]:
        return list(range(self.max_level + 1))

    def capped(self, n: int) -> "BandwidthLadder":
        """Drop the levels whose bandwidth falls below the variance floor n*h >= 1."""
        top = self.max_level
        while top > 0 and n * self.bandwidth(top) < 1.0:
            top -= 1
        return BandwidthLadder(self.h0, self.ratio, top)


def _moment_primitive(kernel_id: str, p: int, x):
    """Antiderivative of u^p K(u) on [0, 1] (x >= 0), closed form per kernel."""
    if kernel_id == "epanechnikov":
        return 0.75 * (x ** (p + 1) / (p + 1) - x ** (p + 3) / (p + 3))
    if kernel_id == "triangular":
        return x ** (p + 1) / (p + 1) - x ** (p + 2) / (p + 2)
    return 0.5 * x ** (p + 1) / (p + 1)


def kernel_moments(kernel: KernelSpec, p_max: int, lo, hi) -> np.ndarray:
    """int_lo^hi u^p K(u) du for p = 0..p_max, batched over windows -> shape (W, p_max+1).

    The registered kernels are even, so the negative half is folded onto
    [0, 1] with the sign (-1)^p.
    """
    lo = np.atleast_1d(np.clip(np.asarray(lo, dtype=float), -1.0, 1.0))
    hi = np.atleast_1d(np.clip(np.asarray(hi, dtype=float), -1.0, 1.0))
    out = np.empty((lo.size, p_max + 1))
    for p in range(p_max + 1):
        def prim(x, p=p):
            # signed primitive F(x) = int_0^x u^p K(u) du for x in [-1, 1]
            return np.where(x >= 0, 1.0, (-1.0) ** (p + 1)) * _moment_primitive(kernel.id, p, np.abs(x))
        out[:, p] = prim(hi) - prim(lo)
    return out


def moment_matrix(kernel: KernelSpec, r: int, lo, hi) -> np.ndarray:
    """S[k, l] = int_lo^hi u^(k+l) K(u) du, batched over windows -> shape (W, r+1, r+1)."""
    mom = kernel_moments(kernel, 2 * r, lo, hi)
    idx = np.arange(r + 1)
    return mom[:, idx[:, None] + idx[None, :]]


def equivalent_kernel_coefficients(kernel: KernelSpec, m: int, r: int, lo, hi) -> np.ndarray:
    """Polynomial coefficients c with K*(u) = (sum_k c_k u^k) K(u) on [lo, hi].

    Returns an array of shape (W, r+1), one row per window.
    """
    if not 0 <= m <= r:
        raise ValueError(f"need 0 <= m <= r, got m={m}, r={r}")
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if np.any(lo < -1.0 - 1e-12) or np.any(hi > 1.0 + 1e-12) or np.any(hi <= lo):
        raise ValueError("support window must be a nonempty subinterval of [-1, 1]")
    lo, hi = np.broadcast_arrays(lo, hi)
    # most windows are the full interval; solve once per distinct window
    uniq, inverse = np.unique(np.stack([lo, hi], axis=1), axis=0, return_inverse=True)
    if uniq.shape[0] < lo.shape[0]:
        coef = equivalent_kernel_coefficients(kernel, m, r, uniq[:, 0], uniq[:, 1])
        return coef[inverse.ravel()]
    S = moment_matrix(kernel, r, lo, hi)
    cond = np.linalg.cond(S)
    if not np.all(np.isfinite(cond)) or np.any(cond > COND_LIMIT):
        raise SingularMomentMatrix(
            f"moment matrix condition number {np.max(cond):.3g} exceeds {COND_LIMIT:g} "
            f"for (m={m}, r={r})"
        )
    e = np.zeros((len(lo), r + 1))
    e[:, m] = 1.0
    # S is symmetric, so e_m^T S^{-1} is the m-th row of S^{-1}
    return math.factorial(m) * np.linalg.solve(S, e[:, :, None])[:, :, 0]


def equivalent_kernel(kernel: KernelSpec, m: int, r: int, support_window=(-1.0, 1.0)):
    """Return u -> K*_{m,r}(u) for a single support window."""
    lo, hi = map(float, support_window)
    coef = equivalent_kernel_coefficients(kernel, m, r, lo, hi)[0]

    def kstar(u):
        u = np.asarray(u, dtype=float)
        inside = (u >= lo) & (u <= hi)
        val = np.polynomial.polynomial.polyval(u, coef) * kernel.func(u)
        out = np.where(inside, val, 0.0)
        return float(out) if out.ndim == 0 else out

    kstar.coefficients = coef
    kstar.window = (lo, hi)
    return kstar
