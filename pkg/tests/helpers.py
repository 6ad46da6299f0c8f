"""Shared oracles for the test suite.

Everything here is deliberately independent of the library internals: the
matrix exponential is a truncated power series, polar projection goes through
the SVD, and densities use closed forms. Tests compare library output against
these, never against the library itself.
"""

import numpy as np


def taylor_expm(m: np.ndarray, terms: int = 50) -> np.ndarray:
    """Truncated power-series matrix exponential.

    For 3x3 antisymmetric inputs with angle up to ~5 the tail beyond 50 terms
    is far below double precision.
    """
    out = np.eye(3)
    term = np.eye(3)
    for n in range(1, terms):
        term = term @ m / n
        out = out + term
    return out


def hat_oracle(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def svd_polar(m: np.ndarray) -> np.ndarray:
    """Closest rotation to m via SVD, the textbook polar factor."""
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


def random_rotation(rng: np.random.Generator, max_angle: float = np.pi - 0.2) -> np.ndarray:
    w = rng.normal(size=3)
    w = w / np.linalg.norm(w) * rng.uniform(0.0, max_angle)
    return taylor_expm(hat_oracle(w))


def random_spd(rng: np.random.Generator, max_cond: float = 1e3) -> np.ndarray:
    """Random SPD matrix with condition number at most max_cond."""
    q = svd_polar(rng.normal(size=(3, 3)))
    lo = rng.uniform(0.05, 1.0)
    eigs = np.array([lo, *rng.uniform(lo, min(lo * max_cond, 10.0), size=2)])
    return q @ np.diag(eigs) @ q.T


def rotation_angle(r: np.ndarray) -> np.ndarray:
    """Rotation angle(s) from the trace, vectorized over leading axes."""
    tr = np.trace(np.asarray(r), axis1=-2, axis2=-1)
    return np.arccos(np.clip(0.5 * (tr - 1.0), -1.0, 1.0))


def dlog_theta_closed(r: np.ndarray) -> np.ndarray:
    """d/dr log Theta via the closed form sin r / (1 - cos r) - 2/r.

    Independent of the packaged half-angle evaluation; vectorized.
    """
    r = np.asarray(r, dtype=float)
    safe = np.where(r < 1e-6, 1.0, r)
    direct = np.sin(safe) / (1.0 - np.cos(safe)) - 2.0 / safe
    return np.where(r < 1e-6, -r / 6.0, direct)


def so3_heat_kernel(t: float, r: float, n_images: int = 8) -> float:
    """Heat kernel on the rotation group w.r.t. Riemannian volume, a = I.

    Exact theta-function form: the group is the radius-2 3-sphere quotient,
    p(t, r) = (2 pi t)^{-3/2} e^{t/8} sum over the geodesic images of r of
    (x / (2 sin(r/2))) e^{-x^2/2t} with x running over rr + 4 pi n for
    rr in {r, 2 pi - r}.
    """
    total = 0.0
    for rr in (r, 2.0 * np.pi - r):
        for n in range(-n_images, n_images + 1):
            x = rr + 4.0 * np.pi * n
            total += x / (2.0 * np.sin(0.5 * rr)) * np.exp(-x * x / (2.0 * t))
    return float((2.0 * np.pi * t) ** -1.5 * np.exp(t / 8.0) * total)


def geodesic_ball_volume(radius: float) -> float:
    """Riemannian volume of a ball around a point, bi-invariant metric.

    vol = int_0^R int_{S^2} r^2 Theta(r) dOmega dr = 8 pi (R - sin R): the
    radial density is r^2 Theta(r) = 2 (1 - cos r) and |S^2| = 4 pi.
    """
    return float(8.0 * np.pi * (radius - np.sin(radius)))
