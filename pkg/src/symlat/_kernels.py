"""Hot numeric kernels for kernel regression, in numba and pure numpy.

The numba path is used when available; set ``SYMLAT_DISABLE_NUMBA=1`` to force
the pure-numpy fallback.  Both backends implement the same contract (the
numba loops may differ from numpy reductions by float rounding only).
``benchmarks/bench_kernels.py`` times the two side by side.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("SYMLAT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}

try:
    if _DISABLE:
        raise ImportError("numba disabled by SYMLAT_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    njit = None
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# Pure-numpy implementations
# ---------------------------------------------------------------------------

def nw_predict_numpy(xt: np.ndarray, yt: np.ndarray, xq: np.ndarray,
                     h: np.ndarray) -> np.ndarray:
    """Gaussian-kernel locally-constant prediction.

    Per query the quadratic exponents are shifted by their row minimum before
    exponentiation; the common factor cancels in the weight ratio, and when
    every other weight underflows the prediction degrades to the nearest
    training response instead of 0/0.
    """
    diffs = (xq[:, None, :] - xt[None, :, :]) / h
    q = 0.5 * np.einsum("qnd,qnd->qn", diffs, diffs)
    q -= q.min(axis=1, keepdims=True)
    w = np.exp(-q)
    return (w @ yt) / w.sum(axis=1)


def loo_cv_sse_numpy(xt: np.ndarray, yt: np.ndarray, h: np.ndarray) -> float:
    """Leave-one-out squared-error sum for one bandwidth vector."""
    diffs = (xt[:, None, :] - xt[None, :, :]) / h
    q = 0.5 * np.einsum("qnd,qnd->qn", diffs, diffs)
    np.fill_diagonal(q, np.inf)
    q -= q.min(axis=1, keepdims=True)
    w = np.exp(-q)
    preds = (w @ yt) / w.sum(axis=1)
    resid = preds - yt
    return float(resid @ resid)


# ---------------------------------------------------------------------------
# Numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _nw_predict_numba(xt, yt, xq, h):
        nq = xq.shape[0]
        n = xt.shape[0]
        d = xt.shape[1]
        out = np.empty(nq)
        q = np.empty(n)
        for i in range(nq):
            qmin = np.inf
            for j in range(n):
                acc = 0.0
                for k in range(d):
                    t = (xq[i, k] - xt[j, k]) / h[k]
                    acc += t * t
                q[j] = 0.5 * acc
                if q[j] < qmin:
                    qmin = q[j]
            s0 = 0.0
            s1 = 0.0
            for j in range(n):
                w = np.exp(-(q[j] - qmin))
                s0 += w
                s1 += w * yt[j]
            out[i] = s1 / s0
        return out

    @njit(cache=True)
    def _loo_cv_sse_numba(xt, yt, h):
        n = xt.shape[0]
        d = xt.shape[1]
        sse = 0.0
        q = np.empty(n)
        for i in range(n):
            qmin = np.inf
            for j in range(n):
                if j == i:
                    q[j] = np.inf
                    continue
                acc = 0.0
                for k in range(d):
                    t = (xt[i, k] - xt[j, k]) / h[k]
                    acc += t * t
                q[j] = 0.5 * acc
                if q[j] < qmin:
                    qmin = q[j]
            s0 = 0.0
            s1 = 0.0
            for j in range(n):
                if j == i:
                    continue
                w = np.exp(-(q[j] - qmin))
                s0 += w
                s1 += w * yt[j]
            r = s1 / s0 - yt[i]
            sse += r * r
        return sse

    nw_predict = _nw_predict_numba
    loo_cv_sse = _loo_cv_sse_numba
    BACKEND = "numba"
else:
    nw_predict = nw_predict_numpy
    loo_cv_sse = loo_cv_sse_numpy
    BACKEND = "numpy"
