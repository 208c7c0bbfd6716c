"""Gaussian value types: KL, entropy, conversions, block log-determinants."""

import numpy as np
import pytest

from gvplan import (
    BlockTridiagonalMatrix,
    GaussianCanonical,
    GaussianMoment,
    NotPositiveDefiniteError,
    entropy,
    kl_divergence,
    logdet_block_tridiag,
    to_canonical,
    to_moment,
)
from helpers import random_spd, random_spd_block_tridiag, rel_err


class TestKLDivergence:
    def test_identical_distributions_zero(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            g = GaussianMoment(rng.normal(size=3), random_spd(rng, 3))
            assert kl_divergence(g, g) == pytest.approx(0.0, abs=1e-10)

    def test_scalar_mean_shift(self):
        # d=1 closed form: KL = (mu_q - mu_p)^2 / 2 for unit variances
        p = GaussianMoment([0.0], [[1.0]])
        q = GaussianMoment([1.0], [[1.0]])
        assert kl_divergence(p, q) == pytest.approx(0.5, rel=1e-12)

    def test_scalar_variance_ratio(self):
        # d=1 closed form: 0.5 (s_p/s_q - 1 - ln(s_p/s_q)) = 0.5 (2 - 1 - ln 2)
        p = GaussianMoment([0.0], [[2.0]])
        q = GaussianMoment([0.0], [[1.0]])
        expected = 0.5 * (2.0 - 1.0 - np.log(2.0))
        assert expected == pytest.approx(0.15342640972, rel=1e-9)
        assert kl_divergence(p, q) == pytest.approx(expected, rel=1e-12)

    def test_nonnegative_and_zero_iff_equal(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            p = GaussianMoment(rng.normal(size=4), random_spd(rng, 4))
            q = GaussianMoment(rng.normal(size=4), random_spd(rng, 4))
            kl = kl_divergence(p, q)
            assert kl >= 0.0
            if kl < 1e-10:
                assert np.allclose(p.mean, q.mean, atol=1e-8)
                assert np.allclose(p.cov, q.cov, atol=1e-8)

    def test_dimension_mismatch_rejected(self):
        p = GaussianMoment([0.0], [[1.0]])
        q = GaussianMoment([0.0, 0.0], np.eye(2))
        with pytest.raises(ValueError):
            kl_divergence(p, q)

    def test_non_spd_rejected(self):
        with pytest.raises((ValueError, NotPositiveDefiniteError)):
            GaussianMoment([0.0, 0.0], [[1.0, 0.0], [0.0, -1.0]])


class TestEntropy:
    def test_standard_normal_2d(self):
        g = GaussianMoment(np.zeros(2), np.eye(2))
        assert entropy(g) == pytest.approx(np.log(2 * np.pi * np.e), rel=1e-12)
        assert entropy(g) == pytest.approx(2.83788, abs=1e-5)

    def test_mean_shift_invariance(self):
        rng = np.random.default_rng(3)
        cov = random_spd(rng, 3)
        a = GaussianMoment(rng.normal(size=3), cov)
        b = GaussianMoment(np.zeros(3), cov)
        assert entropy(a) == pytest.approx(entropy(b), rel=1e-14)

    def test_covariance_scaling_1d(self):
        a = GaussianMoment([0.0], [[1.0]])
        b = GaussianMoment([0.0], [[4.0]])
        assert entropy(b) - entropy(a) == pytest.approx(np.log(2.0), rel=1e-12)


class TestConversions:
    def test_identity(self):
        c = to_canonical(GaussianMoment(np.zeros(3), np.eye(3)))
        assert np.allclose(c.info, 0.0)
        assert np.allclose(c.prec, np.eye(3))

    def test_scalar_example(self):
        g = to_moment(GaussianCanonical([2.0], [[2.0]]))
        assert g.mean[0] == pytest.approx(1.0, rel=1e-14)
        assert g.cov[0, 0] == pytest.approx(0.5, rel=1e-14)

    def test_round_trip_random_spd(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            g = GaussianMoment(rng.normal(size=6), random_spd(rng, 6))
            back = to_moment(to_canonical(g))
            assert rel_err(back.mean, g.mean) <= 1e-10
            assert rel_err(back.cov, g.cov) <= 1e-10

    def test_singular_matrix_rejected(self):
        with pytest.raises(Exception):
            to_moment(GaussianCanonical([0.0, 0.0], np.zeros((2, 2))))


class TestLogdetBlockTridiag:
    def test_identity_blocks(self):
        m = BlockTridiagonalMatrix(
            diag=[np.eye(2) for _ in range(5)], off=[np.zeros((2, 2))] * 4
        )
        assert logdet_block_tridiag(m) == pytest.approx(0.0, abs=1e-14)

    def test_scalar_chain(self):
        # dense [[2, -1], [-1, 2]] has determinant 3
        m = BlockTridiagonalMatrix(
            diag=[np.array([[2.0]]), np.array([[2.0]])],
            off=[np.array([[-1.0]])],
        )
        assert logdet_block_tridiag(m) == pytest.approx(np.log(3.0), rel=1e-14)

    def test_matches_dense_random(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            m = random_spd_block_tridiag(rng, 21, 3)
            dense_logdet = np.linalg.slogdet(m.dense())[1]
            assert rel_err(logdet_block_tridiag(m), dense_logdet) <= 1e-8

    def test_non_spd_raises(self):
        m = BlockTridiagonalMatrix(
            diag=[np.array([[1.0]]), np.array([[-1.0]])],
            off=[np.array([[0.0]])],
        )
        with pytest.raises(NotPositiveDefiniteError):
            logdet_block_tridiag(m)
