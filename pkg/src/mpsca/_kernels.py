"""Fused Mirror-Prox loop compiled with numba.

``lam`` is the per-coordinate penalty weight (length 2N, equal on the real and
imaginary entries of an antenna).

Mirrors ``spmp.mp_iteration`` step for step; the simplex block is updated in
the log domain with a max-shift before exponentiation, which is the same
map followed by the same normalization.
"""

import math

import numpy as np
from numba import njit

TINY = 1e-300


@njit(cache=True, nogil=True)
def field(A, b, lam, w, y, s, gw, gy, gs):
    M, D = A.shape
    for j in range(D):
        gw[j] = lam[j] * s[j]
    for m in range(M):
        acc = b[m]
        ym = y[m]
        for j in range(D):
            acc += A[m, j] * w[j]
            gw[j] += A[m, j] * ym
        gy[m] = -acc
    for j in range(D):
        gs[j] = -lam[j] * w[j]


@njit(cache=True, nogil=True)
def prox_step(w0, y0, s0, gw, gy, gs, alpha, radius, wo, yo, so):
    D = w0.shape[0]
    n = D // 2
    nrm2 = 0.0
    for j in range(D):
        v = w0[j] - alpha * gw[j]
        wo[j] = v
        nrm2 += v * v
    nrm = math.sqrt(nrm2)
    if nrm > radius:
        scale = radius / nrm
        for j in range(D):
            wo[j] *= scale
    for j in range(n):
        p = s0[j] - alpha * gs[j]
        q = s0[j + n] - alpha * gs[j + n]
        r = math.hypot(p, q)
        if r > 1.0:
            p /= r
            q /= r
        so[j] = p
        so[j + n] = q
    M = y0.shape[0]
    top = -np.inf
    for m in range(M):
        v = math.log(max(y0[m], TINY)) - alpha * gy[m]
        yo[m] = v
        if v > top:
            top = v
    if not math.isfinite(top):
        return False
    tot = 0.0
    for m in range(M):
        e = math.exp(yo[m] - top)
        yo[m] = e
        tot += e
    for m in range(M):
        yo[m] = max(yo[m] / tot, TINY)
    return True


@njit(cache=True, nogil=True)
def primal_envelope(A, b, lam, w):
    M, D = A.shape
    n = D // 2
    best = -np.inf
    for m in range(M):
        acc = b[m]
        for j in range(D):
            acc += A[m, j] * w[j]
        if acc > best:
            best = acc
    reg = 0.0
    for j in range(n):
        reg += lam[j] * math.hypot(w[j], w[j + n])
    return best + reg


@njit(cache=True, nogil=True)
def dual_envelope(A, b, lam, radius, y, s):
    M, D = A.shape
    lin = 0.0
    for m in range(M):
        lin += y[m] * b[m]
    nrm2 = 0.0
    for j in range(D):
        acc = lam[j] * s[j]
        for m in range(M):
            acc += A[m, j] * y[m]
        nrm2 += acc * acc
    return lin - radius * math.sqrt(nrm2)


@njit(cache=True, nogil=True)
def run_mirror_prox(A, b, lam, radius, alpha, w, y, s, max_iters, gap_every, gap_tol):
    """Run up to ``max_iters`` iterations in place on ``(w, y, s)``.

    Returns ``(avg_w, avg_y, avg_s, iters, status, trace_t, trace_gap)`` where
    ``status`` is 0 on normal exit, 1 on early stop by gap, -1 on overflow.
    Trace entries hold the ergodic gap at the sampled iterations.
    """
    M, D = A.shape
    gw = np.empty(D)
    gy = np.empty(M)
    gs = np.empty(D)
    rw = np.empty(D)
    ry = np.empty(M)
    rs = np.empty(D)
    zw = np.empty(D)
    zy = np.empty(M)
    zs = np.empty(D)
    sw = np.zeros(D)
    sy = np.zeros(M)
    ss = np.zeros(D)
    aw = np.empty(D)
    ay = np.empty(M)
    as_ = np.empty(D)
    n_trace = max_iters // gap_every + 2
    trace_t = np.zeros(n_trace, dtype=np.int64)
    trace_gap = np.zeros(n_trace)
    k = 0
    status = 0
    t = 0
    while t < max_iters:
        field(A, b, lam, w, y, s, gw, gy, gs)
        if not prox_step(w, y, s, gw, gy, gs, alpha, radius, rw, ry, rs):
            status = -1
            break
        field(A, b, lam, rw, ry, rs, gw, gy, gs)
        if not prox_step(w, y, s, gw, gy, gs, alpha, radius, zw, zy, zs):
            status = -1
            break
        w[:] = zw
        y[:] = zy
        s[:] = zs
        sw += rw
        sy += ry
        ss += rs
        t += 1
        if t % gap_every == 0 or t == max_iters:
            aw[:] = sw / t
            ay[:] = sy / t
            as_[:] = ss / t
            h_avg = dual_envelope(A, b, lam, radius, ay, as_)
            f_avg = primal_envelope(A, b, lam, aw)
            trace_t[k] = t
            trace_gap[k] = f_avg - h_avg
            k += 1
            if gap_tol < np.inf:
                h_best = max(h_avg, dual_envelope(A, b, lam, radius, y, s))
                f_best = min(f_avg, primal_envelope(A, b, lam, w))
                if f_best - h_best <= gap_tol:
                    status = 1
                    break
    if t > 0:
        aw[:] = sw / t
        ay[:] = sy / t
        as_[:] = ss / t
    else:
        aw[:] = w
        ay[:] = y
        as_[:] = s
    return aw, ay, as_, t, status, trace_t[:k], trace_gap[:k]
