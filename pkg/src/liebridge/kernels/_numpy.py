"""Vectorized fallback kernels: one step across all paths per inner operation.

Math here mirrors kernels._numba operation for operation; the two backends
must agree to ~1e-12 on every output. Keep them in lockstep when editing.
"""

from __future__ import annotations

import numpy as np

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

_EYE3 = np.eye(3)


def _hat_batch(u: np.ndarray) -> np.ndarray:
    n = u.shape[0]
    m = np.zeros((n, 3, 3))
    m[:, 0, 1] = -u[:, 2]
    m[:, 0, 2] = u[:, 1]
    m[:, 1, 0] = u[:, 2]
    m[:, 1, 2] = -u[:, 0]
    m[:, 2, 0] = -u[:, 1]
    m[:, 2, 1] = u[:, 0]
    return m


def _project_batch(x: np.ndarray) -> np.ndarray:
    for _ in range(NEWTON_MAX_ITERS):
        c = np.empty_like(x)
        c[:, 0, 0] = x[:, 1, 1] * x[:, 2, 2] - x[:, 1, 2] * x[:, 2, 1]
        c[:, 0, 1] = x[:, 1, 2] * x[:, 2, 0] - x[:, 1, 0] * x[:, 2, 2]
        c[:, 0, 2] = x[:, 1, 0] * x[:, 2, 1] - x[:, 1, 1] * x[:, 2, 0]
        c[:, 1, 0] = x[:, 0, 2] * x[:, 2, 1] - x[:, 0, 1] * x[:, 2, 2]
        c[:, 1, 1] = x[:, 0, 0] * x[:, 2, 2] - x[:, 0, 2] * x[:, 2, 0]
        c[:, 1, 2] = x[:, 0, 1] * x[:, 2, 0] - x[:, 0, 0] * x[:, 2, 1]
        c[:, 2, 0] = x[:, 0, 1] * x[:, 1, 2] - x[:, 0, 2] * x[:, 1, 1]
        c[:, 2, 1] = x[:, 0, 2] * x[:, 1, 0] - x[:, 0, 0] * x[:, 1, 2]
        c[:, 2, 2] = x[:, 0, 0] * x[:, 1, 1] - x[:, 0, 1] * x[:, 1, 0]
        det = (x[:, 0, 0] * c[:, 0, 0] + x[:, 0, 1] * c[:, 0, 1]
               + x[:, 0, 2] * c[:, 0, 2])
        # x^{-T} = cofactor/det, entrywise (the adjugate transposed back)
        inv = 1.0 / det
        nxt = 0.5 * (x + c * inv[:, None, None])
        delta = float(np.abs(nxt - x).max())
        x = nxt
        if delta <= NEWTON_DELTA_TOL:
            break
    return x


def _exp_batch(w: np.ndarray) -> np.ndarray:
    th2 = np.einsum("ni,ni->n", w, w)
    th = np.sqrt(th2)
    small = th < SMALL_ANGLE
    th_safe = np.where(small, 1.0, th)
    a = np.where(small, 1.0 - th2 / 6.0, np.sin(th) / th_safe)
    half = np.sin(0.5 * th) / (0.5 * th_safe)
    b = np.where(small, 0.5 - th2 / 24.0, 0.5 * half * half)
    out = np.empty((w.shape[0], 3, 3))
    w0, w1, w2 = w[:, 0], w[:, 1], w[:, 2]
    out[:, 0, 0] = 1.0 + b * (w0 * w0 - th2)
    out[:, 0, 1] = -a * w2 + b * (w0 * w1)
    out[:, 0, 2] = a * w1 + b * (w0 * w2)
    out[:, 1, 0] = a * w2 + b * (w0 * w1)
    out[:, 1, 1] = 1.0 + b * (w1 * w1 - th2)
    out[:, 1, 2] = -a * w0 + b * (w1 * w2)
    out[:, 2, 0] = -a * w1 + b * (w0 * w2)
    out[:, 2, 1] = a * w0 + b * (w1 * w2)
    out[:, 2, 2] = 1.0 + b * (w2 * w2 - th2)
    return out


def _heun_factor(u: np.ndarray, d: np.ndarray) -> np.ndarray:
    # M = I + hat(d+u) + 0.5*(u u^T - |u|^2 I)
    uu = np.einsum("ni,ni->n", u, u)
    m = _hat_batch(d + u)
    m += 0.5 * (np.einsum("ni,nj->nij", u, u) - uu[:, None, None] * _EYE3)
    m += _EYE3
    return m


def _rel_log_batch(x: np.ndarray, v: np.ndarray):
    """Batch group_log(x^T v) with near-pi fallback.

    Returns (w, theta, cut) where cut rows carry the symmetric-part axis
    reconstruction in w, usable for radial bookkeeping only.
    """
    z = np.einsum("nji,jk->nik", x, v)
    s_vec = 0.5 * np.stack([
        z[:, 2, 1] - z[:, 1, 2],
        z[:, 0, 2] - z[:, 2, 0],
        z[:, 1, 0] - z[:, 0, 1],
    ], axis=1)
    s = np.sqrt(np.einsum("ni,ni->n", s_vec, s_vec))
    c = 0.5 * (z[:, 0, 0] + z[:, 1, 1] + z[:, 2, 2] - 1.0)
    theta = np.arctan2(s, c)
    cut = theta >= np.pi - EPS_CUT
    small = theta < SMALL_ANGLE
    scale = np.where(small, 1.0, theta / np.where(s > 0.0, s, 1.0))
    w = s_vec * scale[:, None]
    if np.any(cut):
        denom = 1.0 - c[cut]
        diag = np.stack([z[cut, 0, 0], z[cut, 1, 1], z[cut, 2, 2]], axis=1)
        n_abs = np.sqrt(np.maximum(0.0, (diag - c[cut, None]) / denom[:, None]))
        sym01 = 0.5 * (z[cut, 0, 1] + z[cut, 1, 0])
        sym02 = 0.5 * (z[cut, 0, 2] + z[cut, 2, 0])
        sym12 = 0.5 * (z[cut, 1, 2] + z[cut, 2, 1])
        lead = np.argmax(n_abs, axis=1)
        n = n_abs.copy()
        m0 = lead == 0
        n[m0, 1] = np.where(sym01[m0] < 0.0, -n_abs[m0, 1], n_abs[m0, 1])
        n[m0, 2] = np.where(sym02[m0] < 0.0, -n_abs[m0, 2], n_abs[m0, 2])
        m1 = lead == 1
        n[m1, 0] = np.where(sym01[m1] < 0.0, -n_abs[m1, 0], n_abs[m1, 0])
        n[m1, 2] = np.where(sym12[m1] < 0.0, -n_abs[m1, 2], n_abs[m1, 2])
        m2 = lead == 2
        n[m2, 0] = np.where(sym02[m2] < 0.0, -n_abs[m2, 0], n_abs[m2, 0])
        n[m2, 1] = np.where(sym12[m2] < 0.0, -n_abs[m2, 1], n_abs[m2, 1])
        w[cut] = theta[cut, None] * n
    return w, theta, cut


def _dlog_theta_batch(r: np.ndarray) -> np.ndarray:
    small = r < THETA_SERIES_R
    # clamp keeps sin(h) away from 0 on rows already headed for a domain
    # status; their values are never consumed
    h = 0.5 * np.minimum(r, TWO_PI - 1e-9)
    h_safe = np.where(small, 1.0, h)
    direct = (h_safe * np.cos(h_safe) - np.sin(h_safe)) / (h_safe * np.sin(h_safe))
    return np.where(small, -r / 6.0 - r ** 3 / 360.0, direct)


def _phi_increment_batch(r: np.ndarray, tau: float, dt: float, formula: int) -> np.ndarray:
    dlt = _dlog_theta_batch(r)
    if formula == FORMULA_DERIVED:
        return -(r * dlt) / (2.0 * tau) * dt
    return (r * r / tau) * dlt * dt


def _radial_batch(w: np.ndarray, a: np.ndarray) -> np.ndarray:
    q = np.einsum("ni,ij,nj->n", w, a, w)
    return np.sqrt(np.maximum(0.0, q))


def _bm_step_batch(x, db, basis, v0, dt, scheme, reproject):
    u = db @ basis.T
    d = np.broadcast_to(-0.5 * v0 * dt, u.shape)
    if scheme == SCHEME_EULER_HEUN:
        x = x @ _heun_factor(u, d)
        if reproject:
            x = _project_batch(x)
    else:
        x = x @ _exp_batch(d + u)
    return x


def bm_paths(dbs, basis, v0, dt, scheme, reproject, states):
    n, k = dbs.shape[0], dbs.shape[1]
    x = np.broadcast_to(_EYE3, (n, 3, 3)).copy()
    states[:, 0] = x
    for step in range(k):
        x = _bm_step_batch(x, dbs[:, step], basis, v0, dt, scheme, reproject)
        states[:, step + 1] = x


def bm_endpoints(dbs, basis, v0, dt, scheme, reproject, ends):
    n, k = dbs.shape[0], dbs.shape[1]
    x = np.broadcast_to(_EYE3, (n, 3, 3)).copy()
    for step in range(k):
        x = _bm_step_batch(x, dbs[:, step], basis, v0, dt, scheme, reproject)
    ends[:] = x


def _bridge_sweep(dbs, start, target, basis, v0, a, dt, T, scheme, reproject,
                  formula, states, radial, logphi_cum, logphi, cuts, status):
    """Shared guided-path integrator; states/radial/logphi_cum may be None."""
    n, k = dbs.shape[0], dbs.shape[1]
    x = np.broadcast_to(start, (n, 3, 3)).copy()
    cum = np.zeros(n)
    cut_count = np.zeros(n, dtype=np.int64)
    stat = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    record = states is not None
    if record:
        states[:, 0] = x
        logphi_cum[:, 0] = 0.0
    with np.errstate(all="ignore"):
        for step in range(k):
            tau = T - step * dt
            w, theta, cut = _rel_log_batch(x, target)
            r = _radial_batch(w, a)
            if record:
                radial[active, step] = r[active]
            bad = active & (r >= TWO_PI)
            stat[bad] = STATUS_RADIAL_DOMAIN
            active = active & ~bad
            cut_count[active & cut] += 1
            inc = _phi_increment_batch(r, tau, dt, formula)
            live = active & ~cut
            cum[live] += inc[live]
            g = np.where((~cut)[:, None], w / tau, 0.0)
            u = dbs[:, step] @ basis.T
            xbar = x @ (_EYE3 + _hat_batch(u))
            wb, thetab, cutb = _rel_log_batch(xbar, target)
            cut_count[active & cutb] += 1
            h = np.where((~cutb)[:, None], wb / tau, 0.0)
            d = (-0.5 * v0[None, :] + 0.5 * (g + h)) * dt
            if scheme == SCHEME_EULER_HEUN:
                nxt = x @ _heun_factor(u, d)
                if reproject:
                    nxt = _project_batch(nxt)
            else:
                nxt = x @ _exp_batch(d + u)
            x[active] = nxt[active]
            if record:
                states[active, step + 1] = x[active]
                logphi_cum[active, step + 1] = cum[active]
        nonfinite = active & ~np.isfinite(x).all(axis=(1, 2))
        stat[nonfinite] = STATUS_NONFINITE
        active = active & ~nonfinite
        w, theta, cut = _rel_log_batch(x, target)
        r = _radial_batch(w, a)
        if record:
            radial[active, k] = r[active]
    logphi[:] = cum
    cuts[:] = cut_count
    status[:] = stat
    return x


def bridge_paths(dbs, start, target, basis, v0, a, dt, T, scheme, reproject,
                 formula, states, radial, logphi_cum, logphi, cuts, status):
    _bridge_sweep(dbs, start, target, basis, v0, a, dt, T, scheme, reproject,
                  formula, states, radial, logphi_cum, logphi, cuts, status)


def bridge_summary(dbs, start, target, basis, v0, a, dt, T, scheme, reproject,
                   formula, ends, logphi, cuts, status):
    x = _bridge_sweep(dbs, start, target, basis, v0, a, dt, T, scheme,
                      reproject, formula, None, None, None, logphi, cuts,
                      status)
    ends[:] = x
