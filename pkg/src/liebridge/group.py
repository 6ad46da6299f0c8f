"""Rotation-group primitives and left-invariant metric machinery.

Conventions: group elements are 3x3 rotation matrices acting on column
vectors, algebra elements are axis-angle vectors in R^3 identified with
antisymmetric matrices through ``hat``/``vee``, and a left-invariant metric is
given by a symmetric positive definite 3x3 matrix ``a`` on the algebra. The
distance used throughout is the chordal surrogate ``||group_log(x^-1 y)||_a``,
which is the exact geodesic distance when ``a`` is a multiple of the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, CutLocusError, DomainError, NotSPDError, NumericalError

# Angle guard below which a rotation is considered to sit on the cut locus.
# Stability, not policy: the axis of a rotation by an angle within ~1e-6 of pi
# cannot be recovered from the antisymmetric part at double precision.
EPS_CUT = 1e-6

# Series switches. Below these the closed forms lose digits to cancellation
# and the leading Taylor terms are exact to machine precision.
SMALL_ANGLE = 1e-8
THETA_SERIES_R = 1e-4

# Input validation tolerances.
ROTATION_ATOL = 1e-8
ANTISYM_ATOL = 1e-8
SYMMETRY_ATOL = 1e-12

_EYE3 = np.eye(3)


def hat(v: np.ndarray) -> np.ndarray:
    """Map an algebra vector to its antisymmetric matrix.

    hat(v) w = v x w for all w in R^3.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ArgumentError(f"expected a 3-vector, got shape {v.shape}")
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of ``hat``: extract the axis vector of an antisymmetric matrix."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3):
        raise ArgumentError(f"expected a 3x3 matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m + m.T).max() > ANTISYM_ATOL * scale:
        raise ArgumentError("matrix is not antisymmetric within tolerance")
    return np.array([
        0.5 * (m[2, 1] - m[1, 2]),
        0.5 * (m[0, 2] - m[2, 0]),
        0.5 * (m[1, 0] - m[0, 1]),
    ])


def group_exp(v: np.ndarray) -> np.ndarray:
    """Exponentiate an axis-angle vector to a rotation (Rodrigues form).

    Exact for all inputs; the small-angle branch only replaces the two
    trigonometric coefficients by their Taylor leads once the angle is below
    SMALL_ANGLE, where sin(t)/t and (1-cos t)/t^2 are 1 and 1/2 to machine
    precision.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ArgumentError(f"expected a 3-vector, got shape {v.shape}")
    th2 = float(v @ v)
    th = np.sqrt(th2)
    if th < SMALL_ANGLE:
        a = 1.0 - th2 / 6.0
        b = 0.5 - th2 / 24.0
    else:
        a = np.sin(th) / th
        half = np.sin(0.5 * th) / (0.5 * th)
        b = 0.5 * half * half
    k = hat(v)
    return _EYE3 + a * k + b * (k @ k)


def _require_rotation(r: np.ndarray, name: str = "r") -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.shape != (3, 3):
        raise ArgumentError(f"{name}: expected a 3x3 matrix, got shape {r.shape}")
    if not np.isfinite(r).all():
        raise ArgumentError(f"{name}: non-finite entries")
    if np.abs(r.T @ r - _EYE3).max() > ROTATION_ATOL:
        raise ArgumentError(f"{name}: not orthonormal within {ROTATION_ATOL}")
    if np.linalg.det(r) < 0.0:
        raise ArgumentError(f"{name}: negative determinant (not a rotation)")
    return r


def group_log(r: np.ndarray) -> np.ndarray:
    """Principal logarithm of a rotation as an axis-angle vector.

    The angle comes from atan2(||antisymmetric part||, (trace-1)/2), which is
    well conditioned on the whole domain. Rotations within EPS_CUT of angle pi
    raise CutLocusError; the logarithm is not continuous there.

    Raises:
        ArgumentError: input is not a rotation within ROTATION_ATOL.
        CutLocusError: rotation angle theta >= pi - EPS_CUT.
    """
    r = _require_rotation(r)
    s_vec = np.array([
        0.5 * (r[2, 1] - r[1, 2]),
        0.5 * (r[0, 2] - r[2, 0]),
        0.5 * (r[1, 0] - r[0, 1]),
    ])
    s = float(np.linalg.norm(s_vec))
    c = 0.5 * (float(np.trace(r)) - 1.0)
    theta = float(np.arctan2(s, c))
    if theta >= np.pi - EPS_CUT:
        raise CutLocusError(f"rotation angle {theta:.9f} within {EPS_CUT} of pi")
    if theta < SMALL_ANGLE:
        # theta/sin(theta) = 1 to machine precision here
        return s_vec
    return s_vec * (theta / s)


def project_to_group(m: np.ndarray, tol: float = 1e-14, max_iter: int = 30) -> np.ndarray:
    """Project a nonsingular matrix with positive determinant onto the rotations.

    Newton iteration for the orthogonal polar factor, X <- (X + X^-T)/2. The
    result is the closest rotation in the Frobenius sense.

    Raises:
        ArgumentError: wrong shape, non-finite entries, or det(m) <= 0.
        NumericalError: the iteration fails to reach orthogonality.
    """
    x = np.asarray(m, dtype=float)
    if x.shape != (3, 3):
        raise ArgumentError(f"expected a 3x3 matrix, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise ArgumentError("non-finite entries")
    if np.linalg.det(x) <= 0.0:
        raise ArgumentError("determinant must be positive")
    x = x.copy()
    for _ in range(max_iter):
        defect = np.abs(x.T @ x - _EYE3).max()
        if defect <= tol:
            return x
        x = 0.5 * (x + np.linalg.inv(x).T)
        if not np.isfinite(x).all():
            raise NumericalError("polar iteration produced non-finite values")
    if np.abs(x.T @ x - _EYE3).max() <= 1e-10:
        return x
    raise NumericalError("polar iteration did not converge")


@dataclass(frozen=True)
class MetricTensor:
    """Left-invariant metric on the algebra, stored with its Cholesky factor.

    ``a`` must be symmetric within SYMMETRY_ATOL and positive definite;
    ``cholesky_lower`` satisfies a = L L^T and is computed on construction.
    """

    a: np.ndarray
    cholesky_lower: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        if a.shape != (3, 3):
            raise ArgumentError(f"metric must be 3x3, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise NotSPDError("metric has non-finite entries")
        if np.abs(a - a.T).max() > SYMMETRY_ATOL * max(1.0, float(np.abs(a).max())):
            raise NotSPDError("metric is not symmetric within tolerance")
        a = 0.5 * (a + a.T)
        try:
            lower = np.linalg.cholesky(a)
        except np.linalg.LinAlgError as exc:
            raise NotSPDError("metric is not positive definite") from exc
        a.setflags(write=False)
        lower.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "cholesky_lower", lower)

    @staticmethod
    def identity() -> "MetricTensor":
        return MetricTensor(np.eye(3))

    @staticmethod
    def from_diagonal(diag) -> "MetricTensor":
        d = np.asarray(diag, dtype=float)
        if d.shape != (3,):
            raise ArgumentError("diagonal must have 3 entries")
        return MetricTensor(np.diag(d))

    @property
    def det(self) -> float:
        d = np.diag(self.cholesky_lower)
        return float(np.prod(d) ** 2)


@dataclass(frozen=True)
class Frame:
    """Orthonormal algebra frame for a metric, with structure constants.

    ``basis`` holds the frame vectors as columns, orthonormal in the metric:
    basis[:, i]^T a basis[:, j] = delta_ij. ``structure[k, i, j]`` is the
    coefficient of v_k in the bracket [v_i, v_j]; ``v0`` is the Stratonovich
    drift vector sum_ik structure[i, i, k] v_k. By the Koszul formula this is
    sum_i nabla_{v_i} v_i up to sign, and it vanishes identically for every
    metric here because the group is unimodular (trace of every ad is zero).
    """

    basis: np.ndarray
    structure: np.ndarray
    v0: np.ndarray


def frame_from_metric(metric: MetricTensor) -> Frame:
    """Build the metric-orthonormal frame and its structure constants.

    The frame vectors are the columns of L^-T where a = L L^T, so for
    a = diag(4, 1, 1) the first vector is (0.5, 0, 0).
    """
    if not isinstance(metric, MetricTensor):
        metric = MetricTensor(np.asarray(metric, dtype=float))
    lower = metric.cholesky_lower
    basis = np.linalg.inv(lower).T
    structure = np.empty((3, 3, 3))
    for i in range(3):
        for j in range(3):
            # [hat(u), hat(w)] = hat(u x w) on this algebra
            cross = np.cross(basis[:, i], basis[:, j])
            structure[:, i, j] = np.linalg.solve(basis, cross)
    # trace(ad) contraction: zero for every metric on an unimodular algebra
    coeff = np.einsum("iik->k", structure)
    v0 = basis @ coeff
    basis.setflags(write=False)
    structure.setflags(write=False)
    v0.setflags(write=False)
    return Frame(basis=basis, structure=structure, v0=v0)


def distance(x: np.ndarray, y: np.ndarray, metric: MetricTensor) -> float:
    """Metric length of group_log(x^-1 y).

    Exact geodesic distance for isotropic metrics; the documented surrogate
    otherwise. Raises CutLocusError when x^-1 y is a half-turn.
    """
    x = _require_rotation(x, "x")
    y = _require_rotation(y, "y")
    w = group_log(x.T @ y)
    return float(np.sqrt(w @ metric.a @ w))


def _check_radius(r: float) -> float:
    r = float(r)
    if not np.isfinite(r) or r < 0.0 or r >= 2.0 * np.pi:
        raise DomainError(f"radius {r!r} outside [0, 2*pi)")
    return r


def jacobian_theta(r: float) -> float:
    """Volume density of the exponential chart at radius r.

    theta(r) = 2(1 - cos r)/r^2 = (sin(r/2)/(r/2))^2, with theta(0) = 1 and
    the series 1 - r^2/12 below THETA_SERIES_R. Domain [0, 2*pi).
    """
    r = _check_radius(r)
    if r < THETA_SERIES_R:
        return 1.0 - r * r / 12.0
    half = np.sin(0.5 * r) / (0.5 * r)
    return float(half * half)


def dlog_theta(r: float) -> float:
    """Radial derivative of log theta.

    Closed form sin(r)/(1 - cos r) - 2/r, evaluated as the cancellation-free
    quotient (h cos h - sin h)/(h sin h) with h = r/2; series -r/6 - r^3/360
    below THETA_SERIES_R, value 0 at r = 0. Domain [0, 2*pi).
    """
    r = _check_radius(r)
    if r < THETA_SERIES_R:
        return -r / 6.0 - r ** 3 / 360.0
    h = 0.5 * r
    return float((h * np.cos(h) - np.sin(h)) / (h * np.sin(h)))
