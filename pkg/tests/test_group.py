"""Rotation primitives against independent series, SVD, and closed-form oracles."""

import numpy as np
import pytest

from liebridge import (
    ArgumentError,
    CutLocusError,
    DomainError,
    Frame,
    MetricTensor,
    NotSPDError,
    NumericalError,
    distance,
    dlog_theta,
    frame_from_metric,
    group_exp,
    group_log,
    hat,
    jacobian_theta,
    project_to_group,
    vee,
)

from helpers import hat_oracle, random_rotation, random_spd, svd_polar, taylor_expm


class TestHatVee:
    def test_zero_vector_gives_zero_matrix(self):
        assert np.array_equal(hat(np.zeros(3)), np.zeros((3, 3)))

    def test_unit_z_matrix(self):
        expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        assert np.array_equal(hat(np.array([0.0, 0.0, 1.0])), expected)

    def test_matches_cross_product_on_basis_pairs(self):
        basis = np.eye(3)
        for u in basis:
            for w in basis:
                assert np.allclose(hat(u) @ w, np.cross(u, w), atol=1e-15)

    def test_matches_cross_product_random(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            u, w = rng.normal(size=3), rng.normal(size=3)
            assert np.allclose(hat(u) @ w, np.cross(u, w), rtol=1e-13, atol=1e-14)

    def test_vee_inverts_hat(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            v = rng.normal(size=3) * rng.uniform(0.1, 10)
            assert np.array_equal(vee(hat(v)), v)

    def test_vee_rejects_non_antisymmetric(self):
        with pytest.raises(ArgumentError):
            vee(np.eye(3))

    def test_hat_rejects_bad_shape(self):
        with pytest.raises(ArgumentError):
            hat(np.zeros(4))


class TestGroupExp:
    def test_zero_gives_identity(self):
        assert np.array_equal(group_exp(np.zeros(3)), np.eye(3))

    def test_quarter_turn_about_z(self):
        expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        got = group_exp(np.array([0.0, 0.0, np.pi / 2]))
        assert np.abs(got - expected).max() < 1e-15
        assert np.abs(got - taylor_expm(hat_oracle([0.0, 0.0, np.pi / 2]))).max() < 1e-12

    def test_half_turn_about_x(self):
        got = group_exp(np.array([np.pi, 0.0, 0.0]))
        assert np.abs(got - np.diag([1.0, -1.0, -1.0])).max() < 1e-15

    def test_matches_power_series(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            v = rng.normal(size=3)
            v = v / np.linalg.norm(v) * rng.uniform(0.0, np.pi + 1.0)
            assert np.abs(group_exp(v) - taylor_expm(hat_oracle(v))).max() < 1e-12

    def test_small_angle_branch(self):
        for scale in (1e-9, 1e-12, 1e-15):
            v = np.array([0.3, -0.5, 0.8]) * scale
            got = group_exp(v)
            # first-order term dominates; quadratic remainder is below 1e-17
            assert np.abs(got - (np.eye(3) + hat_oracle(v))).max() < 1e-17
            assert np.abs(got.T @ got - np.eye(3)).max() < 1e-15

    def test_result_is_rotation(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            r = group_exp(rng.normal(size=3) * 2.0)
            assert np.abs(r.T @ r - np.eye(3)).max() < 1e-14
            assert abs(np.linalg.det(r) - 1.0) < 1e-14


class TestGroupLog:
    def test_identity_gives_zero(self):
        assert np.array_equal(group_log(np.eye(3)), np.zeros(3))

    def test_roundtrip_series_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            v = rng.normal(size=3)
            v = v / np.linalg.norm(v) * rng.uniform(0.0, np.pi - 0.1)
            w = group_log(taylor_expm(hat_oracle(v)))
            assert np.linalg.norm(w - v) < 1e-10

    def test_exp_log_roundtrip_near_pi(self):
        # angles close to pi but outside the guard stay accurate
        for theta in (np.pi - 1e-3, np.pi - 1e-5):
            v = np.array([0.0, theta, 0.0])
            r = group_exp(v)
            assert np.abs(group_exp(group_log(r)) - r).max() < 1e-10

    def test_norm_equals_angle(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            r = random_rotation(rng)
            theta = np.arccos(np.clip(0.5 * (np.trace(r) - 1.0), -1.0, 1.0))
            assert abs(np.linalg.norm(group_log(r)) - theta) < 1e-12

    def test_half_turn_raises_cut_locus(self):
        with pytest.raises(CutLocusError):
            group_log(group_exp(np.array([np.pi, 0.0, 0.0])))

    def test_just_inside_guard_raises(self):
        with pytest.raises(CutLocusError):
            group_log(group_exp(np.array([0.0, 0.0, np.pi - 1e-7])))

    def test_rejects_non_rotation(self):
        with pytest.raises(ArgumentError):
            group_log(np.eye(3) * 1.5)


class TestProjectToGroup:
    def test_fixed_point_on_rotations(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            r = random_rotation(rng)
            assert np.abs(project_to_group(r) - r).max() < 1e-13

    def test_matches_svd_polar_factor(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            m = random_rotation(rng) + rng.normal(size=(3, 3)) * 1e-3
            if np.linalg.det(m) <= 0:
                continue
            got = project_to_group(m)
            assert np.abs(got - svd_polar(m)).max() < 1e-10
            assert np.abs(got.T @ got - np.eye(3)).max() < 1e-13

    def test_rejects_negative_determinant(self):
        with pytest.raises(ArgumentError):
            project_to_group(np.diag([1.0, 1.0, -1.0]))

    def test_rejects_non_finite(self):
        m = np.eye(3)
        m = m.copy()
        m[0, 0] = np.nan
        with pytest.raises(ArgumentError):
            project_to_group(m)


class TestMetricTensor:
    def test_cholesky_matches_numpy(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            a = random_spd(rng)
            m = MetricTensor(a)
            assert np.abs(m.cholesky_lower - np.linalg.cholesky(0.5 * (a + a.T))).max() < 1e-12
            assert np.abs(m.cholesky_lower @ m.cholesky_lower.T - m.a).max() < 1e-12

    def test_det_matches_numpy(self):
        rng = np.random.default_rng(10)
        for _ in range(50):
            a = random_spd(rng)
            assert np.isclose(MetricTensor(a).det, np.linalg.det(a), rtol=1e-10)

    def test_constructors(self):
        assert np.array_equal(MetricTensor.identity().a, np.eye(3))
        assert np.array_equal(MetricTensor.from_diagonal([4.0, 1.0, 1.0]).a, np.diag([4.0, 1.0, 1.0]))

    def test_rejects_asymmetric(self):
        a = np.eye(3)
        a = a.copy()
        a[0, 1] = 1e-6
        with pytest.raises(NotSPDError):
            MetricTensor(a)

    def test_rejects_indefinite(self):
        with pytest.raises(NotSPDError):
            MetricTensor(np.diag([1.0, -1.0, 1.0]))

    def test_rejects_non_finite(self):
        with pytest.raises(NotSPDError):
            MetricTensor(np.diag([np.inf, 1.0, 1.0]))

    def test_stored_matrix_is_readonly(self):
        m = MetricTensor.identity()
        with pytest.raises(ValueError):
            m.a[0, 0] = 2.0


class TestFrame:
    def test_identity_metric_gives_canonical_basis(self):
        frame = frame_from_metric(MetricTensor.identity())
        assert np.abs(frame.basis - np.eye(3)).max() < 1e-15

    def test_identity_metric_structure_is_cyclic(self):
        frame = frame_from_metric(MetricTensor.identity())
        expected = np.zeros((3, 3, 3))
        for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            expected[k, i, j] = 1.0
            expected[k, j, i] = -1.0
        assert np.abs(frame.structure - expected).max() < 1e-14

    def test_diag_4_1_1_first_vector(self):
        frame = frame_from_metric(MetricTensor.from_diagonal([4.0, 1.0, 1.0]))
        assert np.allclose(frame.basis[:, 0], [0.5, 0.0, 0.0], atol=1e-15)

    def test_random_spd_frame_properties(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a = random_spd(rng)
            frame = frame_from_metric(MetricTensor(a))
            gram = frame.basis.T @ a @ frame.basis
            assert np.abs(gram - np.eye(3)).max() < 1e-12
            # bracket antisymmetry of the structure constants
            assert np.abs(frame.structure + frame.structure.transpose(0, 2, 1)).max() < 1e-12
            # unimodularity: the Stratonovich drift vanishes identically
            assert np.abs(frame.v0).max() < 1e-12

    def test_structure_reproduces_commutators(self):
        rng = np.random.default_rng(12)
        for _ in range(30):
            a = random_spd(rng)
            frame = frame_from_metric(MetricTensor(a))
            for i in range(3):
                for j in range(3):
                    x, y = hat_oracle(frame.basis[:, i]), hat_oracle(frame.basis[:, j])
                    bracket = x @ y - y @ x
                    rebuilt = hat_oracle(frame.basis @ frame.structure[:, i, j])
                    assert np.abs(bracket - rebuilt).max() < 1e-10

    def test_rejects_non_spd(self):
        with pytest.raises(NotSPDError):
            frame_from_metric(MetricTensor(np.diag([1.0, 0.0, 1.0])))


class TestDistance:
    def test_coincident_points(self):
        rng = np.random.default_rng(13)
        r = random_rotation(rng)
        assert distance(r, r, MetricTensor.identity()) == 0.0

    def test_angle_oracle_identity_metric(self):
        eye = MetricTensor.identity()
        for theta in (0.05, 0.3, 1.0, 2.0, np.pi - 0.1):
            d = distance(np.eye(3), group_exp(np.array([0.0, 0.0, theta])), eye)
            assert abs(d - theta) < 1e-12

    def test_polygonal_arc_length_oracle(self):
        # the one-parameter subgroup t -> exp(t w) has constant speed |w|,
        # so chaining distance over a fine subdivision recovers |w|
        eye = MetricTensor.identity()
        w = np.array([0.4, -1.1, 0.7])
        pieces = 64
        states = [group_exp(w * (i / pieces)) for i in range(pieces + 1)]
        arc = sum(distance(states[i], states[i + 1], eye) for i in range(pieces))
        assert abs(arc - np.linalg.norm(w)) < 1e-10
        assert abs(distance(states[0], states[-1], eye) - arc) < 1e-10

    def test_left_invariance(self):
        rng = np.random.default_rng(14)
        eye = MetricTensor.identity()
        for _ in range(20):
            x, y, g = (random_rotation(rng, 1.2) for _ in range(3))
            assert abs(distance(g @ x, g @ y, eye) - distance(x, y, eye)) < 1e-12

    def test_weighted_norm(self):
        a = MetricTensor.from_diagonal([0.2, 0.2, 0.8])
        d = distance(np.eye(3), group_exp(np.array([0.0, 0.0, 1.0])), a)
        assert abs(d - np.sqrt(0.8)) < 1e-12

    def test_cut_locus_propagates(self):
        with pytest.raises(CutLocusError):
            distance(np.eye(3), group_exp(np.array([np.pi, 0.0, 0.0])), MetricTensor.identity())


GRID = (0.1, 0.5, 1.0, 2.0, 3.0)


def _fd_exp_jacobian_det(w: np.ndarray, h: float = 1e-6) -> float:
    """Determinant of the left-trivialized differential of group_exp at w."""
    r = group_exp(w)
    cols = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        diff = r.T @ (group_exp(w + e) - group_exp(w - e)) / (2.0 * h)
        anti = 0.5 * (diff - diff.T)
        cols[:, j] = [anti[2, 1], anti[0, 2], anti[1, 0]]
    return float(np.linalg.det(cols))


class TestJacobianTheta:
    def test_limit_at_zero(self):
        assert jacobian_theta(0.0) == 1.0
        assert dlog_theta(0.0) == 0.0

    def test_value_at_pi(self):
        assert abs(jacobian_theta(np.pi) - 4.0 / np.pi ** 2) < 1e-15
        assert abs(jacobian_theta(np.pi) - 0.4052847345693511) < 1e-15

    def test_algebraic_identity(self):
        for r in GRID + (np.pi, 5.0):
            assert abs(jacobian_theta(r) * r * r - 2.0 * (1.0 - np.cos(r))) < 1e-12

    def test_matches_fd_jacobian_determinant(self):
        rng = np.random.default_rng(15)
        for r in GRID:
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            det = _fd_exp_jacobian_det(axis * r)
            assert abs(det - jacobian_theta(r)) < 1e-5

    def test_series_switch_continuity(self):
        below, above = jacobian_theta(1e-4 - 1e-12), jacobian_theta(1e-4 + 1e-12)
        assert abs(below - above) < 1e-12

    def test_domain_errors(self):
        for bad in (-1e-9, 2.0 * np.pi, 7.0, np.inf, np.nan):
            with pytest.raises(DomainError):
                jacobian_theta(bad)
            with pytest.raises(DomainError):
                dlog_theta(bad)


class TestDlogTheta:
    def test_frozen_value_at_one(self):
        assert abs(dlog_theta(1.0) - (-0.1695122782875481)) < 1e-14

    def test_matches_fd_of_log_theta(self):
        h = 1e-6
        for r in GRID:
            fd = (np.log(jacobian_theta(r + h)) - np.log(jacobian_theta(r - h))) / (2.0 * h)
            assert abs(dlog_theta(r) - fd) < 1e-5

    def test_closed_form_alternative(self):
        # sin r/(1 - cos r) - 2/r, stable away from 0
        for r in GRID + (np.pi, 4.0):
            alt = np.sin(r) / (1.0 - np.cos(r)) - 2.0 / r
            assert abs(dlog_theta(r) - alt) < 1e-12

    def test_series_switch_continuity(self):
        below, above = dlog_theta(1e-4 - 1e-12), dlog_theta(1e-4 + 1e-12)
        # the direct quotient carries a ~4e-12 rounding floor at the switch
        assert abs(below - above) < 1e-11
        assert abs(below - above) < 1e-6 * abs(below)
