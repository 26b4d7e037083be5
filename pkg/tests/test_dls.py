import numpy as np
import pytest

from waamcell.dls import (DlsConfig, dls_inverse, filtered_dls_inverse,
                          filtered_gains)


def make_matrix(singular_values, seed=0):
    rng = np.random.default_rng(seed)
    k = len(singular_values)
    U, _ = np.linalg.qr(rng.normal(size=(k, k)))
    V, _ = np.linalg.qr(rng.normal(size=(k, k)))
    return U @ np.diag(singular_values) @ V.T


class TestConfig:
    def test_defaults(self):
        cfg = DlsConfig()
        assert cfg.kappa == 0.01
        assert cfg.sigma_threshold == 0.05
        assert cfg.mode == "filtered"

    def test_negative_kappa_rejected(self):
        with pytest.raises(ValueError):
            DlsConfig(kappa=-0.1)

    def test_bad_threshold_rejected(self):
        with pytest.raises(ValueError):
            DlsConfig(sigma_threshold=0.0)

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            DlsConfig(mode="tikhonov")


class TestConstantDamping:
    def test_gain_formula(self):
        # each direction inverts with sigma / (sigma^2 + kappa^2)
        s = np.array([2.0, 1.0, 0.02])
        J = make_matrix(s)
        kappa = 0.01
        inv = dls_inverse(J, kappa)
        U, sv, Vt = np.linalg.svd(J)
        expected = Vt.T @ np.diag(sv / (sv ** 2 + kappa ** 2)) @ U.T
        assert np.allclose(inv, expected, atol=1e-12)

    def test_peak_gain_at_sigma_equals_kappa(self):
        # the damped gain maxes out at 1/(2 kappa) when sigma == kappa
        kappa = 0.01
        sigmas = np.linspace(1e-5, 0.1, 2000)
        gains = sigmas / (sigmas ** 2 + kappa ** 2)
        peak = sigmas[np.argmax(gains)]
        assert peak == pytest.approx(kappa, rel=1e-2)
        assert gains.max() == pytest.approx(1.0 / (2 * kappa), rel=1e-4)

    def test_zero_kappa_is_pseudo_inverse(self):
        J = make_matrix([3.0, 1.0, 0.5], seed=1)
        assert np.allclose(dls_inverse(J, 0.0), np.linalg.pinv(J), atol=1e-9)


class TestFilteredGains:
    def test_exact_above_threshold(self):
        cfg = DlsConfig()
        s = np.array([2.0, 1.0, 0.5])
        assert np.allclose(filtered_gains(s, cfg), 1.0 / s, atol=1e-12)

    def test_only_smallest_direction_damped(self):
        cfg = DlsConfig()
        s = np.array([2.0, 1.0, 0.02])
        gains = filtered_gains(s, cfg)
        assert np.allclose(gains[:2], 1.0 / s[:2], atol=1e-12)
        assert gains[2] < 1.0 / s[2]

    def test_continuous_at_threshold(self):
        cfg = DlsConfig()
        eps = 1e-9
        below = filtered_gains(np.array([1.0, cfg.sigma_threshold - eps]), cfg)[-1]
        above = filtered_gains(np.array([1.0, cfg.sigma_threshold + eps]), cfg)[-1]
        assert below == pytest.approx(above, rel=1e-6)

    def test_quadratic_ramp(self):
        # kappa_eff^2 = kappa^2 (1 - (sigma/threshold)^2)
        cfg = DlsConfig()
        sk = 0.02
        expected_k2 = cfg.kappa ** 2 * (1.0 - (sk / cfg.sigma_threshold) ** 2)
        gain = filtered_gains(np.array([1.0, sk]), cfg)[-1]
        assert gain == pytest.approx(sk / (sk ** 2 + expected_k2), rel=1e-12)

    def test_zero_sigma_bounded(self):
        cfg = DlsConfig()
        gain = filtered_gains(np.array([1.0, 0.0]), cfg)[-1]
        assert gain == 0.0

    def test_gain_bounded_over_sweep(self):
        cfg = DlsConfig()
        bound = 1.0 / (2.0 * cfg.kappa) * 1.3   # ramped kappa raises the peak a bit
        for sk in np.linspace(0.0, 0.05, 500):
            assert filtered_gains(np.array([1.0, sk]), cfg)[-1] <= bound


class TestFilteredInverse:
    def test_well_conditioned_matches_pinv(self):
        J = make_matrix([5.0, 2.0, 0.9], seed=2)
        inv = filtered_dls_inverse(J, DlsConfig())
        assert np.allclose(inv, np.linalg.pinv(J), atol=1e-10)

    def test_modes(self):
        J = make_matrix([5.0, 2.0, 0.01], seed=3)
        exact = filtered_dls_inverse(J, DlsConfig(mode="exact"))
        const = filtered_dls_inverse(J, DlsConfig(mode="constant"))
        filt = filtered_dls_inverse(J, DlsConfig(mode="filtered"))
        assert np.allclose(exact, np.linalg.pinv(J), atol=1e-9)
        assert np.allclose(const, dls_inverse(J, 0.01), atol=1e-12)
        assert not np.allclose(filt, exact)

    def test_accepts_cached_svd(self):
        J = make_matrix([4.0, 1.0, 0.03], seed=4)
        svd = np.linalg.svd(J)
        a = filtered_dls_inverse(J, DlsConfig())
        b = filtered_dls_inverse(J, DlsConfig(), svd=svd)
        assert np.array_equal(a, b)

    def test_rectangular_matrix(self):
        rng = np.random.default_rng(5)
        J = rng.normal(size=(8, 6))
        inv = filtered_dls_inverse(J, DlsConfig())
        assert inv.shape == (6, 8)
        assert np.allclose(inv, np.linalg.pinv(J), atol=1e-8)

    def test_singular_inverse_bounded(self):
        for sk in (1e-3, 1e-6, 1e-12, 0.0):
            J = make_matrix([5.0, 2.0, sk], seed=6)
            inv = filtered_dls_inverse(J, DlsConfig())
            assert np.max(np.abs(inv)) < 1.0 / DlsConfig().kappa
