"""Compiled inner loop shared by every kernel estimator in the package.

The estimators are all of the form

    est(t) = sum_i sum_c scale_c * P_c(u) K(u) * w[i, col_c],   u = (X_i - q_c) / h

where the q_c are transported copies of the query point t, P_c is a
polynomial (identically 1 for plain kernels) and w[i, col] is the
Nelson-Aalen increment of record i as seen from copy column ``col``
(usually a single column Delta_i / Y(X_i)).  Contributions of one record are
accumulated over copies before squaring, so the variance proxy
sum_i (contribution_i)^2 is exact even when copies overlap.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _kernel(u, code):
    a = abs(u)
    if a > 1.0:
        return 0.0
    if code == 0:
        return 0.75 * (1.0 - u * u)
    if code == 1:
        return 1.0 - a
    return 0.5


@njit(cache=True)
def _orbit_sum(q_copy, q_owner, q_col, q_scale, lo, hi, coef, pts, pt_owner, w, h, code,
               nq, self_idx, want_var):
    est = np.zeros(nq)
    var = np.zeros(nq)
    selfw = np.zeros(nq)
    n = w.shape[0]
    tmp = np.zeros(n)
    touched = np.empty(n, dtype=np.int64)
    seen = np.zeros(n, dtype=np.bool_)
    npoly = coef.shape[1]
    nc = q_copy.shape[0]
    c = 0
    while c < nc:
        owner = q_owner[c]
        ntouch = 0
        while c < nc and q_owner[c] == owner:
            q = q_copy[c]
            # widen the search a little; the test on u below decides membership
            slack = 1e-9 * h
            left = np.searchsorted(pts, q + lo[c] * h - slack, side="left")
            right = np.searchsorted(pts, q + hi[c] * h + slack, side="right")
            for k in range(left, right):
                u = (pts[k] - q) / h
                if u < lo[c] or u > hi[c]:
                    continue
                kv = _kernel(u, code)
                if kv == 0.0:
                    continue
                if npoly > 1:
                    p = coef[c, npoly - 1]
                    for d in range(npoly - 2, -1, -1):
                        p = p * u + coef[c, d]
                    kv *= p
                else:
                    kv *= coef[c, 0]
                i = pt_owner[k]
                if not seen[i]:
                    seen[i] = True
                    touched[ntouch] = i
                    ntouch += 1
                tmp[i] += kv * q_scale[c] * w[i, q_col[c]]
            c += 1
        s = 0.0
        v = 0.0
        me = self_idx[owner]
        for t in range(ntouch):
            i = touched[t]
            contrib = tmp[i]
            s += contrib
            if want_var:
                v += contrib * contrib
            if i == me:
                selfw[owner] = tmp[i]
            tmp[i] = 0.0
            seen[i] = False
        est[owner] = s
        var[owner] = v
    return est, var, selfw


def orbit_sum(q_copy, q_owner, q_scale, lo, hi, coef, pts, pt_owner, w, h, code, nq,
              self_idx=None, want_var=False, q_col=None):
    """Thin wrapper normalising dtypes before calling the compiled loop."""
    if self_idx is None:
        self_idx = np.full(nq, -1, dtype=np.int64)
    coef = np.ascontiguousarray(coef, dtype=float)
    if coef.ndim == 1:
        coef = coef[:, None]
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    if q_col is None:
        q_col = np.zeros(len(q_copy), dtype=np.int64)
    return _orbit_sum(
        np.ascontiguousarray(q_copy, dtype=float),
        np.ascontiguousarray(q_owner, dtype=np.int64),
        np.ascontiguousarray(q_col, dtype=np.int64),
        np.ascontiguousarray(q_scale, dtype=float),
        np.ascontiguousarray(lo, dtype=float),
        np.ascontiguousarray(hi, dtype=float),
        coef,
        np.ascontiguousarray(pts, dtype=float),
        np.ascontiguousarray(pt_owner, dtype=np.int64),
        np.ascontiguousarray(w),
        float(h),
        int(code),
        int(nq),
        np.ascontiguousarray(self_idx, dtype=np.int64),
        bool(want_var),
    )
