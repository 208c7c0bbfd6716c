"""Belief propagation: marginal blocks vs dense inverse, block solves."""

import time

import numpy as np
import pytest

from gvplan import BlockTridiagonalMatrix, gbp_marginals, gbp_mean_solve
from gvplan.blocktri import NotPositiveDefiniteError
from helpers import random_spd, random_spd_block_tridiag, rel_err


class TestMarginals:
    def test_diagonal_precision(self):
        rng = np.random.default_rng(4)
        blocks = [random_spd(rng, 3) for _ in range(5)]
        prec = BlockTridiagonalMatrix(
            diag=blocks, off=[np.zeros((3, 3))] * 4
        )
        marg = gbp_marginals(prec)
        for blk, cov in zip(blocks, marg.covs):
            assert rel_err(cov, np.linalg.inv(blk)) <= 1e-10
        for cross in marg.crosses:
            assert np.allclose(cross, 0.0, atol=1e-14)

    def test_scalar_chain_closed_form(self):
        prec = BlockTridiagonalMatrix(
            diag=[np.array([[2.0]]), np.array([[2.0]])],
            off=[np.array([[-1.0]])],
        )
        marg = gbp_marginals(prec)
        assert marg.covs[0][0, 0] == pytest.approx(2 / 3, rel=1e-14)
        assert marg.covs[1][0, 0] == pytest.approx(2 / 3, rel=1e-14)
        assert marg.crosses[0][0, 0] == pytest.approx(1 / 3, rel=1e-14)

    def test_matches_dense_inverse(self):
        rng = np.random.default_rng(17)
        prec = random_spd_block_tridiag(rng, 51, 4)
        marg = gbp_marginals(prec)
        dense_cov = np.linalg.inv(prec.dense())
        n = 4
        for i in range(51):
            sl = slice(i * n, (i + 1) * n)
            assert rel_err(marg.covs[i], dense_cov[sl, sl]) <= 1e-8
        for i in range(50):
            sl = slice(i * n, (i + 1) * n)
            sr = slice((i + 1) * n, (i + 2) * n)
            assert rel_err(marg.crosses[i], dense_cov[sl, sr]) <= 1e-8

    def test_marginals_symmetric_spd(self):
        rng = np.random.default_rng(23)
        prec = random_spd_block_tridiag(rng, 20, 3)
        marg = gbp_marginals(prec)
        for cov in marg.covs:
            assert np.max(np.abs(cov - cov.T)) <= 1e-10
            assert np.all(np.linalg.eigvalsh(cov) > 0)

    def test_invalid_joint_raises(self):
        prec = BlockTridiagonalMatrix(
            diag=[np.array([[1.0]]), np.array([[1.0]])],
            off=[np.array([[2.0]])],  # dense matrix indefinite
        )
        with pytest.raises(NotPositiveDefiniteError):
            gbp_marginals(prec)


class TestMeanSolve:
    def test_identity(self):
        prec = BlockTridiagonalMatrix(
            diag=[np.eye(2)] * 3, off=[np.zeros((2, 2))] * 2
        )
        eta = np.arange(6.0)
        assert np.allclose(gbp_mean_solve(prec, eta), eta)

    def test_scalar_chain_symmetric_rhs(self):
        prec = BlockTridiagonalMatrix(
            diag=[np.array([[2.0]]), np.array([[2.0]])],
            off=[np.array([[-1.0]])],
        )
        mu = gbp_mean_solve(prec, np.array([1.0, 1.0]))
        assert np.allclose(mu, [1.0, 1.0], atol=1e-14)

    def test_matches_dense_solve(self):
        rng = np.random.default_rng(31)
        prec = random_spd_block_tridiag(rng, 50, 4)
        eta = rng.normal(size=200)
        got = gbp_mean_solve(prec, eta)
        want = np.linalg.solve(prec.dense(), eta)
        assert rel_err(got, want) <= 1e-8


class TestScaling:
    def test_linear_growth_vs_dense_cubic(self):
        # GBP time should grow roughly linearly in N; allow wide margin
        rng = np.random.default_rng(8)
        prec_small = random_spd_block_tridiag(rng, 200, 4)
        prec_big = random_spd_block_tridiag(rng, 800, 4)

        def best_of(fn, reps=3):
            times = []
            for _ in range(reps):
                t0 = time.perf_counter()
                fn()
                times.append(time.perf_counter() - t0)
            return min(times)

        t_small = best_of(lambda: gbp_marginals(prec_small))
        t_big = best_of(lambda: gbp_marginals(prec_big))
        # 4x the blocks; linear predicts 4x, cubic would predict 64x
        assert t_big / t_small < 12.0
