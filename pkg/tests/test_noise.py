"""Wiener forcing: basis construction, increments, covariance."""

import numpy as np
import pytest

from seltorus import spectral as sp
from seltorus.noise import (NoiseRng, available_mode_count, build_noise_model,
                            covariance_estimate, sample_increment)


class TestModelConstruction:
    def test_constant_mode_only(self, grid32):
        m = build_noise_model(1, 3.0, 0.7, grid32, 0)
        assert np.max(np.abs(m.basis_fields[0] - 0.7)) < 1e-15
        assert np.max(np.abs(m.f_psi + 0.49)) < 1e-15
        assert m.c_psi == 0.0

    def test_empty_model(self, grid32):
        m = build_noise_model(0, 3.0, 1.0, grid32, 0)
        assert np.max(np.abs(m.f_psi)) == 0.0
        assert m.c_psi == 0.0

    def test_first_pair_flat_decay(self, grid32):
        # modes 1 and 2 are sqrt(2) cos / sin of 2 pi x2 (k = (0,1) sorts first)
        m = build_noise_model(3, 0.0, 1.0, grid32, 0)
        x2 = grid32.x2
        assert np.max(np.abs(m.basis_fields[1] - np.sqrt(2) * np.cos(2 * np.pi * x2))) < 1e-12
        assert np.max(np.abs(m.basis_fields[2] - np.sqrt(2) * np.sin(2 * np.pi * x2))) < 1e-12
        # complete pair: f_psi = -(1 + 2cos^2 + 2sin^2) = -3
        assert np.max(np.abs(m.f_psi + 3.0)) < 1e-12
        assert m.c_psi == pytest.approx(8 * np.pi ** 2, rel=1e-12)

    def test_basis_orthonormal(self, grid32):
        m = build_noise_model(9, 0.0, 1.0, grid32, 0)
        gram = np.array([[sp.integral(m.basis_fields[i] * m.basis_fields[j])
                          for j in range(9)] for i in range(9)])
        assert np.max(np.abs(gram - np.eye(9))) < 1e-12

    def test_ordering_by_wavenumber(self, grid32):
        m = build_noise_model(25, 3.0, 1.0, grid32, 0)
        assert list(m.mode_ksq[:7]) == [0, 1, 1, 1, 1, 2, 2]
        assert all(a <= b for a, b in zip(m.mode_ksq, m.mode_ksq[1:]))

    def test_f_psi_nonpositive_and_order_invariant(self, grid32):
        m = build_noise_model(12, 2.0, 1.3, grid32, 0)
        assert float(np.max(m.f_psi)) <= 0.0
        # sum of squares is permutation invariant by construction
        resum = -np.sum(m.basis_fields[np.random.default_rng(0).permutation(12)] ** 2,
                        axis=0)
        assert np.max(np.abs(resum - m.f_psi)) < 1e-13

    def test_c_psi_matches_grid_quadrature(self, grid32):
        m = build_noise_model(9, 3.0, 2.0, grid32, 0)
        c = sum(sp.l2_norm_sq(m.basis_partials[l]) for l in range(9))
        assert abs(c - m.c_psi) < 1e-12 * (1 + m.c_psi)

    def test_too_many_modes_rejected(self, grid32):
        avail = available_mode_count(grid32)
        with pytest.raises(ValueError, match="modes"):
            build_noise_model(avail + 1, 3.0, 1.0, grid32, 0)

    def test_negative_parameters_rejected(self, grid32):
        with pytest.raises(ValueError):
            build_noise_model(-1, 3.0, 1.0, grid32, 0)
        with pytest.raises(ValueError):
            build_noise_model(4, -0.5, 1.0, grid32, 0)


class TestIncrements:
    def test_determinism(self, grid32):
        m = build_noise_model(5, 3.0, 1.0, grid32, 99)
        a = sample_increment(m, 1e-3, NoiseRng(99, 5), 7)
        b = sample_increment(m, 1e-3, NoiseRng(99, 5), 7)
        assert np.array_equal(a.d_beta, b.d_beta)
        assert np.array_equal(a.field, b.field)

    def test_zero_modes_gives_zero_field(self, grid32):
        m = build_noise_model(0, 3.0, 1.0, grid32, 0)
        inc = sample_increment(m, 1e-3, NoiseRng(0, 0), 0)
        assert inc.field.shape == (3, 32, 32)
        assert np.max(np.abs(inc.field)) == 0.0

    def test_rejects_nonpositive_dt(self, grid32):
        m = build_noise_model(1, 3.0, 1.0, grid32, 0)
        with pytest.raises(ValueError, match="positive"):
            sample_increment(m, 0.0, NoiseRng(0, 1), 0)

    def test_field_is_linear_combination(self, grid32):
        m = build_noise_model(7, 3.0, 1.0, grid32, 5)
        inc = sample_increment(m, 1e-3, NoiseRng(5, 7), 3)
        rebuilt = sum(inc.d_beta[l, :, None, None] * m.basis_fields[l]
                      for l in range(7))
        assert np.max(np.abs(rebuilt - inc.field)) < 1e-14

    def test_variance_scales_linearly(self, grid32):
        # second moment per mode component has slope 1 in dt within 3 sigma
        m = build_noise_model(3, 3.0, 1.0, grid32, 11)
        rng = NoiseRng(11, 3)
        draws = 4000
        for dt in (1e-3, 4e-3):
            samples = np.stack([sample_increment(m, dt, rng, j).d_beta
                                for j in range(draws)])
            second = np.mean(samples ** 2)
            se = np.std(samples ** 2) / np.sqrt(samples.size)
            assert abs(second - dt) < 3 * se

    def test_nested_truncations_share_modes(self, grid32):
        m4 = build_noise_model(4, 3.0, 1.0, grid32, 21)
        m9 = build_noise_model(9, 3.0, 1.0, grid32, 21)
        a = sample_increment(m4, 1e-3, NoiseRng(21, 4), 13)
        b = sample_increment(m9, 1e-3, NoiseRng(21, 9), 13)
        assert np.array_equal(a.d_beta, b.d_beta[:4])

    def test_paths_are_independent_streams(self, grid32):
        r0 = NoiseRng(3, 4, path=0).normals(0)
        r1 = NoiseRng(3, 4, path=1).normals(0)
        assert not np.array_equal(r0, r1)


class TestCovariance:
    def test_matched_constant_mode(self, grid32):
        m = build_noise_model(1, 3.0, 1.0, grid32, 1)
        a = np.zeros((3, 32, 32))
        a[0] = m.basis_fields[0]
        est, closed = covariance_estimate(m, a, a, 1.0, 1.0, paths=20000)
        assert closed == pytest.approx(1.0, rel=1e-12)
        se = 2.0 / np.sqrt(20000)   # var of product of N(0,1)^2 ~ 2
        assert abs(est - closed) < 4 * se * 2

    def test_orthogonal_test_function(self, grid32):
        # a built from a mode beyond the truncation: closed form is 0
        m = build_noise_model(3, 3.0, 1.0, grid32, 1)
        a = np.zeros((3, 32, 32))
        a[1] = np.cos(2 * np.pi * (2 * grid32.x1 + grid32.x2))
        b = np.zeros((3, 32, 32))
        b[1] = m.basis_fields[1]
        est, closed = covariance_estimate(m, a, b, 0.7, 0.5, paths=5000)
        assert abs(closed) < 1e-20
        assert abs(est) < 0.05

    def test_zero_time(self, grid32):
        m = build_noise_model(2, 3.0, 1.0, grid32, 1)
        a = np.ones((3, 32, 32))
        est, closed = covariance_estimate(m, a, a, 0.0, 1.0, paths=200)
        assert est == 0.0 and closed == 0.0

    def test_min_paths_enforced(self, grid32):
        m = build_noise_model(1, 3.0, 1.0, grid32, 1)
        a = np.ones((3, 32, 32))
        with pytest.raises(ValueError, match="paths"):
            covariance_estimate(m, a, a, 1.0, 1.0, paths=50)

    def test_cross_component_independence(self, grid32):
        # independent vector components: covariance pairs only matching ones
        m = build_noise_model(1, 3.0, 1.0, grid32, 1)
        a = np.zeros((3, 32, 32))
        a[0] = 1.0
        b = np.zeros((3, 32, 32))
        b[1] = 1.0
        est, closed = covariance_estimate(m, a, b, 1.0, 1.0, paths=20000)
        assert closed == 0.0
        assert abs(est) < 4 * 1.0 / np.sqrt(20000) * 2
