"""Hot inner loops: Kalman filter, RTS smoother, FFBS backward pass.

Each kernel is written once in plain numpy and compiled with numba's
``@njit`` when available.  Set ``GOODWILL_NUMBA=0`` to force the pure-numpy
fallback (used by the benchmark and as an escape hatch).  All randomness is
drawn by the caller and passed in, so both backends consume the same
standard-normal stream.

Array convention: index ``t = 0..T-1`` of the filter arrays refers to model
time ``t+1``; the initial belief (time 0) is passed separately.
"""

from __future__ import annotations

import os

import numpy as np

LOG2PI = float(np.log(2.0 * np.pi))

NUMBA_ENABLED = os.environ.get("GOODWILL_NUMBA", "1").lower() not in ("0", "false", "off")


def py_filter_core(y, observed, F, G, HWH, V, m0, P0):
    """Predict/update recursion with Joseph-form covariance update.

    Returns (pred_mean, pred_cov, filt_mean, filt_cov, yhat, S, loglik, fail)
    where fail is -1 on success, else the 0-based time index at which the
    one-step predictive variance became nonpositive.
    """
    T, m = F.shape
    am = np.zeros((T, m))
    aP = np.zeros((T, m, m))
    fm = np.zeros((T, m))
    fP = np.zeros((T, m, m))
    yhat = np.zeros(T)
    S = np.zeros(T)
    eye = np.eye(m)
    loglik = 0.0
    mean = m0.copy()
    cov = P0.copy()
    for t in range(T):
        Gt = G[t]
        a = Gt @ mean
        R = Gt @ cov @ Gt.T + HWH[t]
        R = 0.5 * (R + R.T)
        am[t] = a
        aP[t] = R
        f = F[t]
        yhat[t] = f @ a
        Rf = R @ f
        S[t] = f @ Rf + V[t]
        if observed[t]:
            if S[t] <= 0.0:
                return am, aP, fm, fP, yhat, S, loglik, t
            K = Rf / S[t]
            e = y[t] - yhat[t]
            mean = a + K * e
            A = eye - np.outer(K, f)
            cov = A @ R @ A.T + V[t] * np.outer(K, K)
            cov = 0.5 * (cov + cov.T)
            loglik += -0.5 * (LOG2PI + np.log(S[t]) + e * e / S[t])
        else:
            mean = a
            cov = R
        fm[t] = mean
        fP[t] = cov
    return am, aP, fm, fP, yhat, S, loglik, -1


def py_smoother_core(G, am, aP, fm, fP, m0, P0):
    """RTS backward pass; returns smoothed moments for times 0..T."""
    T, m = fm.shape
    sm = np.zeros((T + 1, m))
    sP = np.zeros((T + 1, m, m))
    sm[T] = fm[T - 1]
    sP[T] = fP[T - 1]
    for t in range(T - 1, -1, -1):
        if t >= 1:
            mf = fm[t - 1]
            Pf = fP[t - 1]
        else:
            mf = m0
            Pf = P0
        R = aP[t]
        Rinv = np.linalg.pinv(0.5 * (R + R.T))
        J = Pf @ G[t].T @ Rinv
        sm[t] = mf + J @ (sm[t + 1] - am[t])
        C = Pf + J @ (sP[t + 1] - R) @ J.T
        sP[t] = 0.5 * (C + C.T)
    return sm, sP


def py_ffbs_core(G, am, aP, fm, fP, m0, P0, z):
    """Backward sampling from filtered moments (Carter-Kohn).

    ``z`` is a (T+1, m) block of standard normals; row t drives the draw of
    the state at time t.  Degenerate conditional covariances are handled by
    eigenvalue clipping at 0.
    """
    T, m = fm.shape
    path = np.zeros((T + 1, m))
    # terminal draw from the filtered distribution at T
    w, v = np.linalg.eigh(np.ascontiguousarray(fP[T - 1]))
    w = np.maximum(w, 0.0)
    path[T] = fm[T - 1] + v @ (np.sqrt(w) * z[T])
    for t in range(T - 1, -1, -1):
        if t >= 1:
            mf = fm[t - 1]
            Pf = fP[t - 1]
        else:
            mf = m0
            Pf = P0
        R = aP[t]
        Rinv = np.linalg.pinv(0.5 * (R + R.T))
        J = Pf @ G[t].T @ Rinv
        cm = mf + J @ (path[t + 1] - am[t])
        C = Pf - J @ R @ J.T
        C = 0.5 * (C + C.T)
        w, v = np.linalg.eigh(np.ascontiguousarray(C))
        w = np.maximum(w, 0.0)
        path[t] = cm + v @ (np.sqrt(w) * z[t])
    return path


def draw_mvn(mean, cov, z):
    """One draw from N(mean, cov) via eigendecomposition, tolerant of PSD rank loss."""
    w, v = np.linalg.eigh(0.5 * (cov + cov.T))
    w = np.maximum(w, 0.0)
    return mean + v @ (np.sqrt(w) * z)


_JITTED = None


def jitted():
    """Numba-compiled kernel set (compiles on first call of each kernel)."""
    global _JITTED
    if _JITTED is None:
        from numba import njit
        _JITTED = {
            "filter_core": njit(cache=True)(py_filter_core),
            "smoother_core": njit(cache=True)(py_smoother_core),
            "ffbs_core": njit(cache=True)(py_ffbs_core),
        }
    return _JITTED


def pure():
    return {"filter_core": py_filter_core, "smoother_core": py_smoother_core,
            "ffbs_core": py_ffbs_core}


if NUMBA_ENABLED:
    _ACTIVE = jitted()
    BACKEND = "numba"
else:
    _ACTIVE = pure()
    BACKEND = "numpy"

filter_core = _ACTIVE["filter_core"]
smoother_core = _ACTIVE["smoother_core"]
ffbs_core = _ACTIVE["ffbs_core"]
