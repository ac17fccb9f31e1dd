"""Pure NumPy/Python implementations of the hot kernels.

These mirror ``_ckernels.pyx`` one-for-one and are used when the compiled
extension is unavailable or ``SUBNYQ_AMR_PURE_PYTHON=1`` is set.
"""

from __future__ import annotations

import numpy as np


def neighbor_sum(f: np.ndarray, l_half: int) -> np.ndarray:
    """sum_{j=1..l} f[i+j] + f[i-j], out-of-range terms dropped."""
    n = f.shape[0]
    c = np.empty(n + 1, dtype=f.dtype)
    c[0] = 0
    np.cumsum(f, out=c[1:])
    i = np.arange(n)
    hi = np.minimum(i + l_half, n - 1) + 1
    lo = np.maximum(i - l_half, 0)
    return c[hi] - c[lo] - f


def smooth_apply(f: np.ndarray, weights: np.ndarray, l_half: int) -> np.ndarray:
    """Banded smoothing ``B f`` with per-row neighbor weight ``weights[i]``."""
    return f - weights * neighbor_sum(f, l_half)


def smooth_adjoint(g: np.ndarray, weights: np.ndarray, l_half: int) -> np.ndarray:
    """Transpose ``B^T g`` of :func:`smooth_apply`."""
    return g - neighbor_sum(weights * g, l_half)


def soft_threshold(x: np.ndarray, thresh: float) -> np.ndarray:
    """Complex soft-thresholding on the modulus; phase is preserved."""
    mag = np.abs(x)
    scale = np.maximum(mag - thresh, 0.0)
    out = np.zeros_like(x)
    nz = mag > 0
    out[nz] = x[nz] * (scale[nz] / mag[nz])
    return out


def project_unit_disc(x: np.ndarray) -> np.ndarray:
    mag = np.abs(x)
    return x / np.maximum(mag, 1.0)


def suppress_nonmax(
    mags: np.ndarray, candidates: np.ndarray, radius: int, circular: bool
) -> np.ndarray:
    """Greedy non-maximum suppression of candidate bins (descending magnitude)."""
    n = mags.shape[0]
    order = candidates[np.argsort(-mags[candidates], kind="stable")]
    kept: list[int] = []
    for c in order:
        ok = True
        for k in kept:
            d = abs(int(c) - k)
            if circular:
                d = min(d, n - d)
            if d <= radius:
                ok = False
                break
        if ok:
            kept.append(int(c))
    return np.asarray(kept, dtype=np.intp)


def smo_solve(
    K: np.ndarray, y: np.ndarray, C: float, tol: float, max_iter: int
) -> tuple[np.ndarray, float, int]:
    """Dual soft-margin SVM by SMO with second-order working-set selection.

    Solves ``min 1/2 a^T Q a - e^T a`` s.t. ``y^T a = 0, 0 <= a <= C`` with
    ``Q = (y y^T) * K``. Returns ``(alpha, rho, iterations)``; the decision
    function is ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    n = y.shape[0]
    Q = K * np.outer(y, y)
    diag = np.diag(K).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    tau = 1e-12
    it = 0
    while it < max_iter:
        yG = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        cand = np.where(up, yG, -np.inf)
        i = int(np.argmax(cand))
        gmax = cand[i]
        gmin = np.min(np.where(low, yG, np.inf))
        if gmax - gmin < tol:
            break
        b = gmax - yG
        sel = low & (yG < gmax)
        a = diag[i] + diag - 2.0 * y[i] * y * Q[i]
        a = np.where(a > 0, a, tau)
        obj = np.where(sel, -(b * b) / a, np.inf)
        j = int(np.argmin(obj))
        if not np.isfinite(obj[j]):
            break

        old_ai, old_aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = diag[i] + diag[j] + 2.0 * Q[i, j]
            quad = quad if quad > 0 else tau
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = diag[i] + diag[j] - 2.0 * Q[i, j]
            quad = quad if quad > 0 else tau
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        d_i = alpha[i] - old_ai
        d_j = alpha[j] - old_aj
        G += Q[i] * d_i + Q[j] * d_j
        it += 1

    return alpha, _rho(alpha, y, G, C), it


def _rho(alpha: np.ndarray, y: np.ndarray, G: np.ndarray, C: float) -> float:
    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(np.mean(yG[free]))
    ub, lb = np.inf, -np.inf
    for t in range(y.shape[0]):
        at_upper = alpha[t] >= C
        at_lower = alpha[t] <= 0
        if (at_upper and y[t] < 0) or (at_lower and y[t] > 0):
            ub = min(ub, yG[t])
        else:
            lb = max(lb, yG[t])
    return float((ub + lb) / 2.0)
