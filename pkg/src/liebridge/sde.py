"""Brownian motion on the rotation group: grids, increments, integrators.

The public euler_heun_step is the readable reference implementation; the
batch samplers delegate to the selected kernel backend, which reproduces the
same arithmetic path for path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, rng
from .errors import ArgumentError, NumericalError
from .group import Frame, MetricTensor, frame_from_metric, hat, project_to_group

SCHEMES = ("euler_heun", "lie_exponential")

_SCHEME_CODES = {
    "euler_heun": kernels.SCHEME_EULER_HEUN,
    "lie_exponential": kernels.SCHEME_LIE_EXPONENTIAL,
}


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid 0 = t_0 < ... < t_k = T."""

    t: np.ndarray
    dt: float

    @property
    def k(self) -> int:
        return len(self.t) - 1

    @property
    def horizon(self) -> float:
        return float(self.t[-1])


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration scheme, reprojection policy, and master seed."""

    scheme: str = "euler_heun"
    reproject: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ArgumentError(
                f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")

    @property
    def scheme_code(self) -> int:
        return _SCHEME_CODES[self.scheme]


@dataclass(frozen=True)
class SamplePath:
    """One discretized trajectory, identity-started."""

    grid: TimeGrid
    states: np.ndarray
    seed: int
    index: int = 0


def uniform_grid(T: float, k: int) -> TimeGrid:
    """Uniform grid with k steps on [0, T].

    Raises:
        ArgumentError: nonpositive or non-finite T, or k < 1.
    """
    T = float(T)
    if not np.isfinite(T) or T <= 0.0:
        raise ArgumentError(f"horizon must be positive, got {T!r}")
    k = int(k)
    if k < 1:
        raise ArgumentError(f"need at least one step, got k={k}")
    dt = T / k
    t = np.linspace(0.0, T, k + 1)
    t.setflags(write=False)
    return TimeGrid(t=t, dt=dt)


def gaussian_increments(seed: int, grid: TimeGrid, index: int = 0,
                        domain: str = rng.DOMAIN_BM) -> np.ndarray:
    """Stratonovich noise increments: k rows of N(0, dt) per coordinate.

    (seed, domain, index) names the substream, so increments for path j of a
    batch equal those of a standalone path with index=j.
    """
    draws = rng.normals(seed, domain, index, (grid.k, 3))
    return draws * np.sqrt(grid.dt)


def euler_heun_step(x: np.ndarray, frame: Frame, db: np.ndarray, dt: float,
                    extra_drift=None, reproject: bool = True) -> np.ndarray:
    """One Stratonovich predictor-corrector step (reference implementation).

    db holds the frame coefficients of the noise increment. The predictor is
    xb = x + x hat(u) with u = basis db; the corrector adds the drift
    -v0/2 dt (plus extra_drift dt) and averages the noise application between
    x and xb. With reproject the result is polar-projected onto the group.

    Raises:
        NumericalError: projection failed or produced non-finite values.
    """
    x = np.asarray(x, dtype=float)
    db = np.asarray(db, dtype=float)
    if extra_drift is None:
        extra_drift = np.zeros(3)
    extra_drift = np.asarray(extra_drift, dtype=float)
    u = frame.basis @ db
    drift = -0.5 * frame.v0 * dt + extra_drift * dt
    xbar = x + x @ hat(u)
    nxt = x + x @ hat(drift) + 0.5 * (x + xbar) @ hat(u)
    if not np.isfinite(nxt).all():
        raise NumericalError("integrator step produced non-finite state")
    if reproject:
        nxt = project_to_group(nxt)
    return nxt


def _as_metric(a) -> MetricTensor:
    return a if isinstance(a, MetricTensor) else MetricTensor(np.asarray(a, dtype=float))


def sample_brownian_paths(a, T: float, k: int, n: int, cfg: IntegratorConfig,
                          workers: int = 1) -> np.ndarray:
    """n full Brownian paths as an (n, k+1, 3, 3) state array."""
    metric = _as_metric(a)
    grid = uniform_grid(T, k)
    frame = frame_from_metric(metric)
    if n < 1:
        raise ArgumentError("need at least one path")
    mod = kernels.resolve()
    states = np.empty((n, k + 1, 3, 3))
    sqdt = np.sqrt(grid.dt)

    def job(s: int, e: int) -> None:
        dbs = np.empty((e - s, k, 3))
        for j in range(s, e):
            dbs[j - s] = rng.normals(cfg.seed, rng.DOMAIN_BM, j, (k, 3))
        dbs *= sqdt
        mod.bm_paths(dbs, frame.basis, frame.v0, grid.dt, cfg.scheme_code,
                     cfg.reproject, states[s:e])

    kernels.run_chunked(n, workers, job)
    if not np.isfinite(states).all():
        raise NumericalError("path sampling produced non-finite states")
    return states


def sample_brownian_endpoints(a, T: float, k: int, n: int,
                              cfg: IntegratorConfig, workers: int = 1,
                              domain: str = rng.DOMAIN_BM,
                              salt: int = 0) -> np.ndarray:
    """Endpoints only, (n, 3, 3); memory-light variant for large ensembles."""
    metric = _as_metric(a)
    grid = uniform_grid(T, k)
    frame = frame_from_metric(metric)
    if n < 1:
        raise ArgumentError("need at least one path")
    mod = kernels.resolve()
    ends = np.empty((n, 3, 3))
    sqdt = np.sqrt(grid.dt)

    def job(s: int, e: int) -> None:
        dbs = np.empty((e - s, k, 3))
        for j in range(s, e):
            dbs[j - s] = rng.normals(cfg.seed, domain, j, (k, 3), salt=salt)
        dbs *= sqdt
        mod.bm_endpoints(dbs, frame.basis, frame.v0, grid.dt, cfg.scheme_code,
                         cfg.reproject, ends[s:e])

    kernels.run_chunked(n, workers, job)
    if not np.isfinite(ends).all():
        raise NumericalError("endpoint sampling produced non-finite states")
    return ends


def sample_brownian_path(a, T: float, k: int, cfg: IntegratorConfig,
                         index: int = 0) -> SamplePath:
    """One Brownian path from the identity.

    Equals path `index` of sample_brownian_paths under the same seed.
    """
    metric = _as_metric(a)
    grid = uniform_grid(T, k)
    frame = frame_from_metric(metric)
    mod = kernels.resolve()
    states = np.empty((1, k + 1, 3, 3))
    dbs = gaussian_increments(cfg.seed, grid, index=index)[None, :, :]
    mod.bm_paths(np.ascontiguousarray(dbs), frame.basis, frame.v0, grid.dt,
                 cfg.scheme_code, cfg.reproject, states)
    if not np.isfinite(states).all():
        raise NumericalError("path sampling produced non-finite states")
    out = states[0]
    out.setflags(write=False)
    return SamplePath(grid=grid, states=out, seed=cfg.seed, index=index)
