"""Compiled scalar kernels: one path per inner loop, nogil for thread chunks.

Math here mirrors kernels._numpy operation for operation; the two backends
must agree to ~1e-12 on every output. Keep them in lockstep when editing.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._codes import (
    EPS_CUT,
    FORMULA_DERIVED,
    NEWTON_DELTA_TOL,
    NEWTON_MAX_ITERS,
    SCHEME_EULER_HEUN,
    SMALL_ANGLE,
    STATUS_NONFINITE,
    STATUS_OK,
    STATUS_RADIAL_DOMAIN,
    THETA_SERIES_R,
    TWO_PI,
)


@njit(cache=True, nogil=True)
def _project(x):
    # x <- 0.5*(x + x^{-T}), x^{-T} = cofactor(x)/det(x); stop on stall
    for _ in range(NEWTON_MAX_ITERS):
        c00 = x[1, 1] * x[2, 2] - x[1, 2] * x[2, 1]
        c01 = x[1, 2] * x[2, 0] - x[1, 0] * x[2, 2]
        c02 = x[1, 0] * x[2, 1] - x[1, 1] * x[2, 0]
        c10 = x[0, 2] * x[2, 1] - x[0, 1] * x[2, 2]
        c11 = x[0, 0] * x[2, 2] - x[0, 2] * x[2, 0]
        c12 = x[0, 1] * x[2, 0] - x[0, 0] * x[2, 1]
        c20 = x[0, 1] * x[1, 2] - x[0, 2] * x[1, 1]
        c21 = x[0, 2] * x[1, 0] - x[0, 0] * x[1, 2]
        c22 = x[0, 0] * x[1, 1] - x[0, 1] * x[1, 0]
        det = x[0, 0] * c00 + x[0, 1] * c01 + x[0, 2] * c02
        inv = 1.0 / det
        delta = 0.0
        n = 0.5 * (x[0, 0] + c00 * inv)
        delta = max(delta, abs(n - x[0, 0]))
        x[0, 0] = n
        n = 0.5 * (x[0, 1] + c01 * inv)
        delta = max(delta, abs(n - x[0, 1]))
        x[0, 1] = n
        n = 0.5 * (x[0, 2] + c02 * inv)
        delta = max(delta, abs(n - x[0, 2]))
        x[0, 2] = n
        n = 0.5 * (x[1, 0] + c10 * inv)
        delta = max(delta, abs(n - x[1, 0]))
        x[1, 0] = n
        n = 0.5 * (x[1, 1] + c11 * inv)
        delta = max(delta, abs(n - x[1, 1]))
        x[1, 1] = n
        n = 0.5 * (x[1, 2] + c12 * inv)
        delta = max(delta, abs(n - x[1, 2]))
        x[1, 2] = n
        n = 0.5 * (x[2, 0] + c20 * inv)
        delta = max(delta, abs(n - x[2, 0]))
        x[2, 0] = n
        n = 0.5 * (x[2, 1] + c21 * inv)
        delta = max(delta, abs(n - x[2, 1]))
        x[2, 1] = n
        n = 0.5 * (x[2, 2] + c22 * inv)
        delta = max(delta, abs(n - x[2, 2]))
        x[2, 2] = n
        if delta <= NEWTON_DELTA_TOL:
            break


@njit(cache=True, nogil=True)
def _exp_into(w0, w1, w2, out):
    # Rodrigues: I + a*hat(w) + b*hat(w)^2, hat(w)^2 = w w^T - |w|^2 I
    th2 = w0 * w0 + w1 * w1 + w2 * w2
    th = np.sqrt(th2)
    if th < SMALL_ANGLE:
        a = 1.0 - th2 / 6.0
        b = 0.5 - th2 / 24.0
    else:
        a = np.sin(th) / th
        half = np.sin(0.5 * th) / (0.5 * th)
        b = 0.5 * half * half
    out[0, 0] = 1.0 + b * (w0 * w0 - th2)
    out[0, 1] = -a * w2 + b * (w0 * w1)
    out[0, 2] = a * w1 + b * (w0 * w2)
    out[1, 0] = a * w2 + b * (w0 * w1)
    out[1, 1] = 1.0 + b * (w1 * w1 - th2)
    out[1, 2] = -a * w0 + b * (w1 * w2)
    out[2, 0] = -a * w1 + b * (w0 * w2)
    out[2, 1] = a * w0 + b * (w1 * w2)
    out[2, 2] = 1.0 + b * (w2 * w2 - th2)


@njit(cache=True, nogil=True)
def _matmul3(a, b, out):
    for i in range(3):
        out[i, 0] = a[i, 0] * b[0, 0] + a[i, 1] * b[1, 0] + a[i, 2] * b[2, 0]
        out[i, 1] = a[i, 0] * b[0, 1] + a[i, 1] * b[1, 1] + a[i, 2] * b[2, 1]
        out[i, 2] = a[i, 0] * b[0, 2] + a[i, 1] * b[1, 2] + a[i, 2] * b[2, 2]


@njit(cache=True, nogil=True)
def _heun_update(x, u0, u1, u2, d0, d1, d2, m, nxt):
    # corrector as one right factor: M = I + hat(d+u) + 0.5*(u u^T - |u|^2 I)
    uu = u0 * u0 + u1 * u1 + u2 * u2
    m[0, 0] = 1.0 + 0.5 * (u0 * u0 - uu)
    m[0, 1] = -(d2 + u2) + 0.5 * u0 * u1
    m[0, 2] = (d1 + u1) + 0.5 * u0 * u2
    m[1, 0] = (d2 + u2) + 0.5 * u0 * u1
    m[1, 1] = 1.0 + 0.5 * (u1 * u1 - uu)
    m[1, 2] = -(d0 + u0) + 0.5 * u1 * u2
    m[2, 0] = -(d1 + u1) + 0.5 * u0 * u2
    m[2, 1] = (d0 + u0) + 0.5 * u1 * u2
    m[2, 2] = 1.0 + 0.5 * (u2 * u2 - uu)
    _matmul3(x, m, nxt)
    for i in range(3):
        for j in range(3):
            x[i, j] = nxt[i, j]


@njit(cache=True, nogil=True)
def _rel_log(x, v, w):
    """w <- group_log(x^T v); returns (theta, cut_flag).

    On the cut branch w is the near-pi axis-angle reconstruction from the
    symmetric part, usable for radial bookkeeping only.
    """
    z00 = x[0, 0] * v[0, 0] + x[1, 0] * v[1, 0] + x[2, 0] * v[2, 0]
    z01 = x[0, 0] * v[0, 1] + x[1, 0] * v[1, 1] + x[2, 0] * v[2, 1]
    z02 = x[0, 0] * v[0, 2] + x[1, 0] * v[1, 2] + x[2, 0] * v[2, 2]
    z10 = x[0, 1] * v[0, 0] + x[1, 1] * v[1, 0] + x[2, 1] * v[2, 0]
    z11 = x[0, 1] * v[0, 1] + x[1, 1] * v[1, 1] + x[2, 1] * v[2, 1]
    z12 = x[0, 1] * v[0, 2] + x[1, 1] * v[1, 2] + x[2, 1] * v[2, 2]
    z20 = x[0, 2] * v[0, 0] + x[1, 2] * v[1, 0] + x[2, 2] * v[2, 0]
    z21 = x[0, 2] * v[0, 1] + x[1, 2] * v[1, 1] + x[2, 2] * v[2, 1]
    z22 = x[0, 2] * v[0, 2] + x[1, 2] * v[1, 2] + x[2, 2] * v[2, 2]
    s0 = 0.5 * (z21 - z12)
    s1 = 0.5 * (z02 - z20)
    s2 = 0.5 * (z10 - z01)
    s = np.sqrt(s0 * s0 + s1 * s1 + s2 * s2)
    c = 0.5 * (z00 + z11 + z22 - 1.0)
    theta = np.arctan2(s, c)
    if theta >= np.pi - EPS_CUT:
        # axis from the symmetric part: z_sym = c I + (1-c) n n^T
        denom = 1.0 - c
        n0 = np.sqrt(max(0.0, (z00 - c) / denom))
        n1 = np.sqrt(max(0.0, (z11 - c) / denom))
        n2 = np.sqrt(max(0.0, (z22 - c) / denom))
        sym01 = 0.5 * (z01 + z10)
        sym02 = 0.5 * (z02 + z20)
        sym12 = 0.5 * (z12 + z21)
        if n0 >= n1 and n0 >= n2:
            if sym01 < 0.0:
                n1 = -n1
            if sym02 < 0.0:
                n2 = -n2
        elif n1 >= n0 and n1 >= n2:
            if sym01 < 0.0:
                n0 = -n0
            if sym12 < 0.0:
                n2 = -n2
        else:
            if sym02 < 0.0:
                n0 = -n0
            if sym12 < 0.0:
                n1 = -n1
        w[0] = theta * n0
        w[1] = theta * n1
        w[2] = theta * n2
        return theta, True
    if theta < SMALL_ANGLE:
        w[0] = s0
        w[1] = s1
        w[2] = s2
        return theta, False
    scale = theta / s
    w[0] = s0 * scale
    w[1] = s1 * scale
    w[2] = s2 * scale
    return theta, False


@njit(cache=True, nogil=True)
def _dlog_theta(r):
    if r < THETA_SERIES_R:
        return -r / 6.0 - r * r * r / 360.0
    h = 0.5 * r
    return (h * np.cos(h) - np.sin(h)) / (h * np.sin(h))


@njit(cache=True, nogil=True)
def _phi_increment(r, tau, dt, formula):
    dlt = _dlog_theta(r)
    if formula == FORMULA_DERIVED:
        return -(r * dlt) / (2.0 * tau) * dt
    return (r * r / tau) * dlt * dt


@njit(cache=True, nogil=True)
def _radial(w, a):
    q = (w[0] * (a[0, 0] * w[0] + a[0, 1] * w[1] + a[0, 2] * w[2])
         + w[1] * (a[1, 0] * w[0] + a[1, 1] * w[1] + a[1, 2] * w[2])
         + w[2] * (a[2, 0] * w[0] + a[2, 1] * w[1] + a[2, 2] * w[2]))
    return np.sqrt(max(0.0, q))


@njit(cache=True, nogil=True)
def _set_identity(x):
    for i in range(3):
        for j in range(3):
            x[i, j] = 1.0 if i == j else 0.0


@njit(cache=True, nogil=True)
def _finite3x3(x):
    ok = True
    for i in range(3):
        for j in range(3):
            ok = ok and np.isfinite(x[i, j])
    return ok


@njit(cache=True, nogil=True)
def _bm_step(x, db0, db1, db2, basis, v0, dt, scheme, reproject, m, nxt):
    u0 = basis[0, 0] * db0 + basis[0, 1] * db1 + basis[0, 2] * db2
    u1 = basis[1, 0] * db0 + basis[1, 1] * db1 + basis[1, 2] * db2
    u2 = basis[2, 0] * db0 + basis[2, 1] * db1 + basis[2, 2] * db2
    d0 = -0.5 * v0[0] * dt
    d1 = -0.5 * v0[1] * dt
    d2 = -0.5 * v0[2] * dt
    if scheme == SCHEME_EULER_HEUN:
        _heun_update(x, u0, u1, u2, d0, d1, d2, m, nxt)
        if reproject:
            _project(x)
    else:
        _exp_into(d0 + u0, d1 + u1, d2 + u2, m)
        _matmul3(x, m, nxt)
        for i in range(3):
            for j in range(3):
                x[i, j] = nxt[i, j]


@njit(cache=True, nogil=True)
def bm_paths(dbs, basis, v0, dt, scheme, reproject, states):
    n, k = dbs.shape[0], dbs.shape[1]
    x = np.empty((3, 3))
    m = np.empty((3, 3))
    nxt = np.empty((3, 3))
    for p in range(n):
        _set_identity(x)
        for i in range(3):
            for j in range(3):
                states[p, 0, i, j] = x[i, j]
        for step in range(k):
            _bm_step(x, dbs[p, step, 0], dbs[p, step, 1], dbs[p, step, 2],
                     basis, v0, dt, scheme, reproject, m, nxt)
            for i in range(3):
                for j in range(3):
                    states[p, step + 1, i, j] = x[i, j]


@njit(cache=True, nogil=True)
def bm_endpoints(dbs, basis, v0, dt, scheme, reproject, ends):
    n, k = dbs.shape[0], dbs.shape[1]
    x = np.empty((3, 3))
    m = np.empty((3, 3))
    nxt = np.empty((3, 3))
    for p in range(n):
        _set_identity(x)
        for step in range(k):
            _bm_step(x, dbs[p, step, 0], dbs[p, step, 1], dbs[p, step, 2],
                     basis, v0, dt, scheme, reproject, m, nxt)
        for i in range(3):
            for j in range(3):
                ends[p, i, j] = x[i, j]


@njit(cache=True, nogil=True)
def _bridge_path(x, dbs_p, target, basis, v0, a, dt, T, scheme, reproject,
                 formula, w, m, nxt, xbar, radial_out, logphi_cum_out):
    """Integrate one guided path in place. Returns (logphi, cuts, status).

    radial_out/logphi_cum_out may be length 0 (summary mode) or k+1.
    """
    k = dbs_p.shape[0]
    record = radial_out.shape[0] == k + 1
    cum = 0.0
    cuts = 0
    if record:
        logphi_cum_out[0] = 0.0
    for step in range(k):
        tau = T - step * dt
        theta, cut = _rel_log(x, target, w)
        r = _radial(w, a)
        if record:
            radial_out[step] = r
        if r >= TWO_PI:
            return cum, cuts, STATUS_RADIAL_DOMAIN
        g0 = 0.0
        g1 = 0.0
        g2 = 0.0
        if cut:
            cuts += 1
        else:
            cum += _phi_increment(r, tau, dt, formula)
            g0 = w[0] / tau
            g1 = w[1] / tau
            g2 = w[2] / tau
        u0 = basis[0, 0] * dbs_p[step, 0] + basis[0, 1] * dbs_p[step, 1] + basis[0, 2] * dbs_p[step, 2]
        u1 = basis[1, 0] * dbs_p[step, 0] + basis[1, 1] * dbs_p[step, 1] + basis[1, 2] * dbs_p[step, 2]
        u2 = basis[2, 0] * dbs_p[step, 0] + basis[2, 1] * dbs_p[step, 1] + basis[2, 2] * dbs_p[step, 2]
        # predictor state for the drift average, still at the left time
        m[0, 0] = 1.0
        m[0, 1] = -u2
        m[0, 2] = u1
        m[1, 0] = u2
        m[1, 1] = 1.0
        m[1, 2] = -u0
        m[2, 0] = -u1
        m[2, 1] = u0
        m[2, 2] = 1.0
        _matmul3(x, m, xbar)
        thetab, cutb = _rel_log(xbar, target, w)
        h0 = 0.0
        h1 = 0.0
        h2 = 0.0
        if cutb:
            cuts += 1
        else:
            h0 = w[0] / tau
            h1 = w[1] / tau
            h2 = w[2] / tau
        d0 = (-0.5 * v0[0] + 0.5 * (g0 + h0)) * dt
        d1 = (-0.5 * v0[1] + 0.5 * (g1 + h1)) * dt
        d2 = (-0.5 * v0[2] + 0.5 * (g2 + h2)) * dt
        if scheme == SCHEME_EULER_HEUN:
            _heun_update(x, u0, u1, u2, d0, d1, d2, m, nxt)
            if reproject:
                _project(x)
        else:
            _exp_into(d0 + u0, d1 + u1, d2 + u2, m)
            _matmul3(x, m, nxt)
            for i in range(3):
                for j in range(3):
                    x[i, j] = nxt[i, j]
        if record:
            logphi_cum_out[step + 1] = cum
    if not _finite3x3(x):
        return cum, cuts, STATUS_NONFINITE
    theta, cut = _rel_log(x, target, w)
    r = _radial(w, a)
    if record:
        radial_out[k] = r
    return cum, cuts, STATUS_OK


@njit(cache=True, nogil=True)
def bridge_paths(dbs, start, target, basis, v0, a, dt, T, scheme, reproject,
                 formula, states, radial, logphi_cum, logphi, cuts, status):
    n, k = dbs.shape[0], dbs.shape[1]
    x = np.empty((3, 3))
    w = np.empty(3)
    m = np.empty((3, 3))
    nxt = np.empty((3, 3))
    xbar = np.empty((3, 3))
    for p in range(n):
        for i in range(3):
            for j in range(3):
                x[i, j] = start[i, j]
        # states recorded via a strided walk alongside the integrator
        for i in range(3):
            for j in range(3):
                states[p, 0, i, j] = x[i, j]
        lp, ch, st = _bridge_path_record(x, dbs[p], target, basis, v0, a, dt, T,
                                         scheme, reproject, formula, w, m, nxt,
                                         xbar, radial[p], logphi_cum[p], states[p])
        logphi[p] = lp
        cuts[p] = ch
        status[p] = st


@njit(cache=True, nogil=True)
def _bridge_path_record(x, dbs_p, target, basis, v0, a, dt, T, scheme,
                        reproject, formula, w, m, nxt, xbar, radial_out,
                        logphi_cum_out, states_out):
    k = dbs_p.shape[0]
    cum = 0.0
    cuts = 0
    logphi_cum_out[0] = 0.0
    for step in range(k):
        tau = T - step * dt
        theta, cut = _rel_log(x, target, w)
        r = _radial(w, a)
        radial_out[step] = r
        if r >= TWO_PI:
            return cum, cuts, STATUS_RADIAL_DOMAIN
        g0 = 0.0
        g1 = 0.0
        g2 = 0.0
        if cut:
            cuts += 1
        else:
            cum += _phi_increment(r, tau, dt, formula)
            g0 = w[0] / tau
            g1 = w[1] / tau
            g2 = w[2] / tau
        u0 = basis[0, 0] * dbs_p[step, 0] + basis[0, 1] * dbs_p[step, 1] + basis[0, 2] * dbs_p[step, 2]
        u1 = basis[1, 0] * dbs_p[step, 0] + basis[1, 1] * dbs_p[step, 1] + basis[1, 2] * dbs_p[step, 2]
        u2 = basis[2, 0] * dbs_p[step, 0] + basis[2, 1] * dbs_p[step, 1] + basis[2, 2] * dbs_p[step, 2]
        m[0, 0] = 1.0
        m[0, 1] = -u2
        m[0, 2] = u1
        m[1, 0] = u2
        m[1, 1] = 1.0
        m[1, 2] = -u0
        m[2, 0] = -u1
        m[2, 1] = u0
        m[2, 2] = 1.0
        _matmul3(x, m, xbar)
        thetab, cutb = _rel_log(xbar, target, w)
        h0 = 0.0
        h1 = 0.0
        h2 = 0.0
        if cutb:
            cuts += 1
        else:
            h0 = w[0] / tau
            h1 = w[1] / tau
            h2 = w[2] / tau
        d0 = (-0.5 * v0[0] + 0.5 * (g0 + h0)) * dt
        d1 = (-0.5 * v0[1] + 0.5 * (g1 + h1)) * dt
        d2 = (-0.5 * v0[2] + 0.5 * (g2 + h2)) * dt
        if scheme == SCHEME_EULER_HEUN:
            _heun_update(x, u0, u1, u2, d0, d1, d2, m, nxt)
            if reproject:
                _project(x)
        else:
            _exp_into(d0 + u0, d1 + u1, d2 + u2, m)
            _matmul3(x, m, nxt)
            for i in range(3):
                for j in range(3):
                    x[i, j] = nxt[i, j]
        for i in range(3):
            for j in range(3):
                states_out[step + 1, i, j] = x[i, j]
        logphi_cum_out[step + 1] = cum
    if not _finite3x3(x):
        return cum, cuts, STATUS_NONFINITE
    theta, cut = _rel_log(x, target, w)
    radial_out[k] = _radial(w, a)
    return cum, cuts, STATUS_OK


@njit(cache=True, nogil=True)
def bridge_summary(dbs, start, target, basis, v0, a, dt, T, scheme, reproject,
                   formula, ends, logphi, cuts, status):
    n = dbs.shape[0]
    x = np.empty((3, 3))
    w = np.empty(3)
    m = np.empty((3, 3))
    nxt = np.empty((3, 3))
    xbar = np.empty((3, 3))
    empty = np.empty(0)
    for p in range(n):
        for i in range(3):
            for j in range(3):
                x[i, j] = start[i, j]
        lp, ch, st = _bridge_path(x, dbs[p], target, basis, v0, a, dt, T,
                                  scheme, reproject, formula, w, m, nxt, xbar,
                                  empty, empty)
        for i in range(3):
            for j in range(3):
                ends[p, i, j] = x[i, j]
        logphi[p] = lp
        cuts[p] = ch
        status[p] = st
