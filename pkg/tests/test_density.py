"""Heat-kernel estimator: reference factor, weight folding, consistency."""

import numpy as np
import pytest

from liebridge.density import (
    EstimatorReport,
    estimate_heat_kernel,
    q_factor,
    weight_statistics,
)
from liebridge.errors import (
    ArgumentError,
    CutLocusError,
    DegenerateWeights,
    NumericalError,
)
from liebridge.group import MetricTensor, group_exp
from liebridge.sde import IntegratorConfig, sample_brownian_endpoints

from helpers import geodesic_ball_volume, rotation_angle

I3 = MetricTensor.identity()


class TestQFactor:
    @pytest.mark.parametrize("T", [0.05, 0.3, 1.0])
    def test_identity_target(self, T):
        want = (2.0 * np.pi * T) ** -1.5
        assert q_factor(T, np.eye(3), I3) == pytest.approx(want, rel=1e-13)

    def test_anisotropic_determinant(self):
        a = MetricTensor(np.diag([0.2, 0.2, 0.8]))
        want = np.sqrt(0.032) * (2.0 * np.pi * 0.1) ** -1.5
        assert q_factor(0.1, np.eye(3), a) == pytest.approx(want, rel=1e-13)

    def test_displaced_target(self):
        v = group_exp(np.array([0.3, 0.0, 0.0]))
        want = (2.0 * np.pi * 0.05) ** -1.5 * np.exp(-0.09 / 0.1)
        assert q_factor(0.05, v, I3) == pytest.approx(want, rel=1e-12)

    def test_weighted_exponent(self):
        a = MetricTensor(np.diag([4.0, 1.0, 1.0]))
        v = group_exp(np.array([0.3, 0.0, 0.0]))
        want = 2.0 * (2.0 * np.pi * 0.1) ** -1.5 * np.exp(-0.36 / 0.2)
        assert q_factor(0.1, v, a) == pytest.approx(want, rel=1e-12)

    def test_printed_power_variant(self):
        # the alternative convention raises det A to 3/2 instead of 1/2
        a = MetricTensor(np.diag([0.2, 0.2, 0.8]))
        ec = q_factor(0.1, np.eye(3), a)
        pv = q_factor(0.1, np.eye(3), a, convention="paper_verbatim")
        assert pv == pytest.approx(ec * 0.032, rel=1e-12)

    def test_invalid_arguments(self):
        with pytest.raises(ArgumentError):
            q_factor(0.0, np.eye(3), I3)
        with pytest.raises(ArgumentError):
            q_factor(-1.0, np.eye(3), I3)
        with pytest.raises(ArgumentError):
            q_factor(0.1, np.eye(3), I3, convention="gaussian")

    def test_cut_locus_target(self):
        v = group_exp(np.array([0.0, 0.0, np.pi - 1e-7]))
        with pytest.raises(CutLocusError):
            q_factor(0.1, v, I3)


class TestWeightStatistics:
    def test_small_known_ensemble(self):
        lw = np.log(np.array([1.0, 2.0, 3.0]))
        log_mean, m, mean_scaled, sd_scaled, ess = weight_statistics(lw)
        assert log_mean == pytest.approx(np.log(2.0), rel=1e-14)
        assert m == pytest.approx(np.log(3.0))
        assert ess == pytest.approx(36.0 / 14.0, rel=1e-14)
        # sd of the max-shifted weights times exp(m) recovers sd([1,2,3])
        assert np.exp(m) * sd_scaled == pytest.approx(1.0, rel=1e-13)

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        lw = rng.normal(size=100)
        base = weight_statistics(lw)
        shifted = weight_statistics(lw + 5.0)
        assert shifted[0] == pytest.approx(base[0] + 5.0, abs=1e-12)
        assert shifted[4] == pytest.approx(base[4], rel=1e-12)

    def test_permutation_invariant_bytes(self):
        rng = np.random.default_rng(1)
        lw = rng.normal(size=257)
        a = weight_statistics(lw)
        b = weight_statistics(lw[::-1].copy())
        assert a == b

    def test_equal_weights_full_ess(self):
        _, _, _, sd, ess = weight_statistics(np.full(64, -2.3))
        assert ess == pytest.approx(64.0, rel=1e-14)
        assert sd == 0.0

    def test_empty(self):
        with pytest.raises(ArgumentError):
            weight_statistics(np.array([]))

    def test_all_underflow(self):
        with pytest.raises(DegenerateWeights):
            weight_statistics(np.full(8, -np.inf))

    def test_partial_nonfinite(self):
        with pytest.raises(NumericalError):
            weight_statistics(np.array([0.0, -np.inf, 1.0]))
        with pytest.raises(NumericalError):
            weight_statistics(np.array([0.0, np.nan]))


class TestEstimateHeatKernel:
    def test_report_consistency(self):
        v = group_exp(np.array([0.2, 0.1, -0.3]))
        report = estimate_heat_kernel(v, I3, 0.3, 40, 512,
                                      IntegratorConfig(seed=3), workers=2)
        assert isinstance(report, EstimatorReport)
        assert report.p_hat == pytest.approx(np.exp(report.log_p_hat),
                                             rel=1e-12)
        assert 0.0 < report.ess <= report.n_bridges
        assert report.p_hat > 0.0 and np.isfinite(report.p_hat)
        assert report.formula == "derived"
        assert report.q_convention == "euclidean_consistent"
        assert report.q_value == pytest.approx(q_factor(0.3, v, I3), rel=1e-13)

    def test_needs_two_bridges(self):
        with pytest.raises(ArgumentError):
            estimate_heat_kernel(np.eye(3), I3, 0.1, 20, 1,
                                 IntegratorConfig())

    def test_flat_limit(self):
        # short horizon, target near the start: curvature corrections are
        # percent-level and the flat Gaussian is a valid oracle
        T, d = 0.02, 0.1
        v = group_exp(np.array([d, 0.0, 0.0]))
        report = estimate_heat_kernel(v, I3, T, 50, 4096,
                                      IntegratorConfig(seed=7), workers=4)
        flat = (2.0 * np.pi * T) ** -1.5 * np.exp(-d * d / (2.0 * T))
        assert report.p_hat == pytest.approx(flat, rel=0.10)

    def test_histogram_oracle_reduced(self):
        # brute-force check: bin unguided endpoints in a geodesic ball
        # around the target and compare densities
        T, k = 0.3, 60
        v = group_exp(np.array([0.0, 0.0, 0.8]))
        report = estimate_heat_kernel(v, I3, T, k, 4096,
                                      IntegratorConfig(seed=11), workers=4)
        n_paths, radius = 400_000, 0.15
        ends = sample_brownian_endpoints(np.eye(3), T, k, n_paths,
                                         IntegratorConfig(seed=13), workers=4)
        gaps = rotation_angle(np.einsum("nji,jk->nik", ends, v))
        count = int((gaps < radius).sum())
        vol = geodesic_ball_volume(radius)
        hist = count / (n_paths * vol)
        hist_se = np.sqrt(count) / (n_paths * vol)
        joint = np.hypot(hist_se, report.stderr)
        assert abs(report.p_hat - hist) < 3.0 * joint

    def test_stderr_scales_as_root_n(self):
        v = group_exp(np.array([0.0, 0.8, 0.0]))
        sizes = np.array([256, 1024, 4096])
        errs = []
        for n in sizes:
            report = estimate_heat_kernel(v, I3, 0.3, 40, int(n),
                                          IntegratorConfig(seed=17), workers=2)
            errs.append(report.stderr)
        slope = np.polyfit(np.log(sizes), np.log(errs), 1)[0]
        assert slope == pytest.approx(-0.5, abs=0.1)

    def test_inversion_symmetry(self):
        # bi-invariant kernel: antipodal displacements have equal density
        w = np.array([0.5, 0.3, -0.2])
        cfg = IntegratorConfig(seed=19)
        r1 = estimate_heat_kernel(group_exp(w), I3, 0.3, 40, 2048, cfg,
                                  workers=2)
        r2 = estimate_heat_kernel(group_exp(-w), I3, 0.3, 40, 2048, cfg,
                                  workers=2)
        joint = np.hypot(r1.stderr, r2.stderr)
        assert abs(r1.p_hat - r2.p_hat) < 3.0 * joint

    def test_log_weights_returned(self):
        v = group_exp(np.array([0.1, 0.2, 0.3]))
        report, lw = estimate_heat_kernel(v, I3, 0.2, 30, 128,
                                          IntegratorConfig(seed=23),
                                          return_log_weights=True)
        assert lw.shape == (128,)
        assert np.isfinite(lw).all()
        log_mean = weight_statistics(lw)[0]
        assert report.log_p_hat == pytest.approx(
            np.log(report.q_value) + log_mean, abs=1e-12)
