# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see ``_pykernels`` for the reference."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()


def neighbor_sum(f, int l_half):
    cdef Py_ssize_t n = f.shape[0]
    if np.iscomplexobj(f):
        out = np.empty(n, dtype=np.complex128)
        _nsum_c(np.ascontiguousarray(f, dtype=np.complex128), out, l_half)
    else:
        out = np.empty(n, dtype=np.float64)
        _nsum_r(np.ascontiguousarray(f, dtype=np.float64), out, l_half)
    return out


cdef void _nsum_c(double complex[::1] f, double complex[::1] out, int l) noexcept:
    cdef Py_ssize_t n = f.shape[0], i, j
    cdef double complex acc = 0
    # sliding window: acc holds sum f[i-l .. i+l] clipped to range
    for j in range(0, min(l + 1, n)):
        acc = acc + f[j]
    for i in range(n):
        out[i] = acc - f[i]
        if i + l + 1 < n:
            acc = acc + f[i + l + 1]
        if i - l >= 0:
            acc = acc - f[i - l]


cdef void _nsum_r(double[::1] f, double[::1] out, int l) noexcept:
    cdef Py_ssize_t n = f.shape[0], i, j
    cdef double acc = 0
    for j in range(0, min(l + 1, n)):
        acc = acc + f[j]
    for i in range(n):
        out[i] = acc - f[i]
        if i + l + 1 < n:
            acc = acc + f[i + l + 1]
        if i - l >= 0:
            acc = acc - f[i - l]


cdef inline double[::1] _as_pairs(x):
    # complex128 vector viewed as interleaved (re, im) doubles
    return np.ascontiguousarray(x, dtype=np.complex128).view(np.float64)


cdef void _window_sum(double[::1] v, double[::1] out, Py_ssize_t n, int l) noexcept:
    # out[2i+c] = sum_{j != i, |j - i| <= l} v[2j+c], clipped to range
    cdef Py_ssize_t i, j
    cdef double ar = 0.0, ai = 0.0
    for j in range(0, min(l + 1, n)):
        ar += v[2 * j]
        ai += v[2 * j + 1]
    for i in range(n):
        out[2 * i] = ar - v[2 * i]
        out[2 * i + 1] = ai - v[2 * i + 1]
        if i + l + 1 < n:
            ar += v[2 * (i + l + 1)]
            ai += v[2 * (i + l + 1) + 1]
        if i - l >= 0:
            ar -= v[2 * (i - l)]
            ai -= v[2 * (i - l) + 1]


def smooth_apply(f, weights, int l_half):
    cdef double[::1] x = _as_pairs(f)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0], i
    out = np.empty(n, dtype=np.complex128)
    cdef double[::1] o = out.view(np.float64)
    _window_sum(x, o, n, l_half)
    for i in range(n):
        o[2 * i] = x[2 * i] - w[i] * o[2 * i]
        o[2 * i + 1] = x[2 * i + 1] - w[i] * o[2 * i + 1]
    return out


def smooth_adjoint(g, weights, int l_half):
    cdef double[::1] x = _as_pairs(g)
    cdef double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0], i
    wx_arr = np.empty(2 * n, dtype=np.float64)
    cdef double[::1] wx = wx_arr
    for i in range(n):
        wx[2 * i] = w[i] * x[2 * i]
        wx[2 * i + 1] = w[i] * x[2 * i + 1]
    out = np.empty(n, dtype=np.complex128)
    cdef double[::1] o = out.view(np.float64)
    _window_sum(wx, o, n, l_half)
    for i in range(2 * n):
        o[i] = x[i] - o[i]
    return out


def soft_threshold(x, double thresh):
    cdef double[::1] v = _as_pairs(x)
    cdef Py_ssize_t n = v.shape[0] // 2, i
    out = np.empty(n, dtype=np.complex128)
    cdef double[::1] o = out.view(np.float64)
    cdef double re, im, mag, s
    for i in range(n):
        re = v[2 * i]
        im = v[2 * i + 1]
        mag = sqrt(re * re + im * im)
        s = (mag - thresh) / mag if mag > thresh else 0.0
        o[2 * i] = re * s
        o[2 * i + 1] = im * s
    return out


def project_unit_disc(x):
    cdef double[::1] v = _as_pairs(x)
    cdef Py_ssize_t n = v.shape[0] // 2, i
    out = np.empty(n, dtype=np.complex128)
    cdef double[::1] o = out.view(np.float64)
    cdef double re, im, mag, s
    for i in range(n):
        re = v[2 * i]
        im = v[2 * i + 1]
        mag = re * re + im * im
        s = 1.0 / sqrt(mag) if mag > 1.0 else 1.0
        o[2 * i] = re * s
        o[2 * i + 1] = im * s
    return out


def suppress_nonmax(mags, candidates, int radius, bint circular):
    cdef double[::1] m = np.ascontiguousarray(mags, dtype=np.float64)
    cand = np.asarray(candidates, dtype=np.intp)
    order_np = cand[np.argsort(-np.asarray(mags)[cand], kind="stable")]
    cdef Py_ssize_t[::1] order = np.ascontiguousarray(order_np, dtype=np.intp)
    cdef Py_ssize_t n = m.shape[0], nc = order.shape[0], a, b, nk = 0, d
    kept_np = np.empty(nc, dtype=np.intp)
    cdef Py_ssize_t[::1] kept = kept_np
    cdef bint ok
    for a in range(nc):
        ok = True
        for b in range(nk):
            d = order[a] - kept[b]
            if d < 0:
                d = -d
            if circular and n - d < d:
                d = n - d
            if d <= radius:
                ok = False
                break
        if ok:
            kept[nk] = order[a]
            nk += 1
    return kept_np[:nk].copy()


def smo_solve(K, y, double C, double tol, long max_iter):
    cdef double[:, ::1] Kv = np.ascontiguousarray(K, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0], t, i, j
    alpha_np = np.zeros(n)
    G_np = -np.ones(n)
    cdef double[::1] alpha = alpha_np
    cdef double[::1] G = G_np
    cdef double tau = 1e-12
    cdef double gmax, gmin, yg, b, a, obj, best, quad, delta, diff, total
    cdef double old_ai, old_aj, d_i, d_j, qit, qjt
    cdef long it = 0
    while it < max_iter:
        gmax = -INFINITY
        i = -1
        for t in range(n):
            if (yv[t] > 0 and alpha[t] < C) or (yv[t] < 0 and alpha[t] > 0):
                yg = -yv[t] * G[t]
                if yg > gmax:
                    gmax = yg
                    i = t
        if i < 0:
            break
        gmin = INFINITY
        j = -1
        best = INFINITY
        for t in range(n):
            if (yv[t] > 0 and alpha[t] > 0) or (yv[t] < 0 and alpha[t] < C):
                yg = -yv[t] * G[t]
                if yg < gmin:
                    gmin = yg
                if yg < gmax:
                    b = gmax - yg
                    a = Kv[i, i] + Kv[t, t] - 2.0 * Kv[i, t]
                    if a <= 0:
                        a = tau
                    obj = -(b * b) / a
                    if obj < best:
                        best = obj
                        j = t
        if gmax - gmin < tol or j < 0:
            break

        old_ai = alpha[i]
        old_aj = alpha[j]
        if yv[i] != yv[j]:
            quad = Kv[i, i] + Kv[j, j] + 2.0 * yv[i] * yv[j] * Kv[i, j]
            if quad <= 0:
                quad = tau
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
            quad = Kv[i, i] + Kv[j, j] - 2.0 * yv[i] * yv[j] * Kv[i, j]
            if quad <= 0:
                quad = tau
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
        for t in range(n):
            qit = yv[i] * yv[t] * Kv[i, t]
            qjt = yv[j] * yv[t] * Kv[j, t]
            G[t] += qit * d_i + qjt * d_j
        it += 1

    return alpha_np, _rho(alpha_np, yv, G_np, C), it


cdef double _rho(double[::1] alpha, double[::1] y, double[::1] G, double C):
    cdef Py_ssize_t n = y.shape[0], t, nfree = 0
    cdef double ub = INFINITY, lb = -INFINITY, s = 0.0, yg
    for t in range(n):
        yg = y[t] * G[t]
        if alpha[t] >= C:
            if y[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif alpha[t] <= 0:
            if y[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            s += yg
    if nfree > 0:
        return s / nfree
    return (ub + lb) / 2.0
