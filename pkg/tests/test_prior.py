"""Discrete prior: transition kernels, Grammians, lifted assembly."""

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from gvplan import assemble_prior, grammian, point_robot_lti, transition_kernel
from gvplan.dynamics import LTVStep, LTVSystem
from helpers import rel_err


def scalar_double_integrator(N, dt):
    a_mat = np.array([[0.0, 1.0], [0.0, 0.0]])
    b_mat = np.array([[0.0], [1.0]])
    step = LTVStep(A=a_mat, a=np.zeros(2), B=b_mat)
    return LTVSystem(steps=tuple([step] * (N + 1)), dt=dt, n=2, m=1)


class TestTransitionKernel:
    def test_double_integrator_closed_form(self):
        sys_ltv = scalar_double_integrator(3, 0.25)
        phi, off = transition_kernel(sys_ltv, 0)
        assert np.allclose(phi, [[1.0, 0.25], [0.0, 1.0]], atol=1e-14)
        assert np.allclose(off, 0.0, atol=1e-15)

    def test_no_dynamics(self):
        step = LTVStep(A=np.zeros((2, 2)), a=np.zeros(2), B=np.eye(2))
        sys_ltv = LTVSystem(steps=(step, step), dt=0.5, n=2, m=2)
        phi, off = transition_kernel(sys_ltv, 0)
        assert np.allclose(phi, np.eye(2))
        assert np.allclose(off, 0.0)

    def test_pure_drift(self):
        c = np.array([0.7, -1.2])
        step = LTVStep(A=np.zeros((2, 2)), a=c, B=np.eye(2))
        sys_ltv = LTVSystem(steps=(step, step), dt=0.5, n=2, m=2)
        _, off = transition_kernel(sys_ltv, 0)
        assert np.allclose(off, c * 0.5, atol=1e-14)

    def test_against_ode_integration_oracle(self):
        rng = np.random.default_rng(12)
        a_mat = rng.normal(size=(4, 4)) * 0.8
        a_vec = rng.normal(size=4)
        step = LTVStep(A=a_mat, a=a_vec, B=np.eye(4))
        sys_ltv = LTVSystem(steps=(step, step), dt=0.3, n=4, m=4)
        phi, off = transition_kernel(sys_ltv, 0)

        def flow(x0):
            sol = solve_ivp(
                lambda t, x: a_mat @ x + a_vec, (0.0, 0.3), x0,
                rtol=1e-12, atol=1e-14, dense_output=False,
            )
            return sol.y[:, -1]

        for basis in np.eye(4):
            assert rel_err(phi @ basis + off, flow(basis)) <= 1e-10
        assert rel_err(off, flow(np.zeros(4))) <= 1e-10

    def test_index_bounds(self):
        sys_ltv = scalar_double_integrator(2, 0.1)
        with pytest.raises(IndexError):
            transition_kernel(sys_ltv, 2)


class TestGrammian:
    def test_double_integrator_analytic(self):
        dt = 0.4
        sys_ltv = scalar_double_integrator(2, dt)
        q_mat = grammian(sys_ltv, 0, q_c=1.0)
        expected = np.array([[dt**3 / 3, dt**2 / 2], [dt**2 / 2, dt]])
        assert rel_err(q_mat, expected) <= 1e-12

    def test_linear_in_intensity(self):
        sys_ltv = scalar_double_integrator(2, 0.2)
        q1 = grammian(sys_ltv, 0, q_c=1.0)
        q2 = grammian(sys_ltv, 0, q_c=2.0)
        assert np.allclose(q2, 2.0 * q1, rtol=1e-12)

    def test_vanishing_interval(self):
        norms = []
        for dt in (0.1, 0.01, 0.001):
            sys_ltv = scalar_double_integrator(2, dt)
            norms.append(np.linalg.norm(grammian(sys_ltv, 0, 1.0)))
        assert norms[0] > norms[1] > norms[2]
        assert norms[2] < 2e-3

    def test_invalid_intensity(self):
        sys_ltv = scalar_double_integrator(2, 0.2)
        with pytest.raises(ValueError):
            grammian(sys_ltv, 0, q_c=0.0)


class TestAssemblePrior:
    def setup_method(self):
        self.sys = scalar_double_integrator(4, 0.5)
        self.x0 = np.array([0.0, 1.0])
        self.goal = np.array([2.0, 0.0])
        self.prior = assemble_prior(self.sys, self.x0, self.goal, 1.0, 1e-3)

    def test_flow_recursion_exact(self):
        flow = self.prior.flow_mean.reshape(-1, 2)
        for i in range(4):
            step = self.prior.phis[i] @ flow[i] + self.prior.offsets[i]
            assert np.array_equal(step, flow[i + 1])

    def test_precision_is_block_tridiagonal(self):
        dense = self.prior.prec.dense()
        n = 2
        for i in range(5):
            for j in range(5):
                if abs(i - j) > 1:
                    blk = dense[i * n:(i + 1) * n, j * n:(j + 1) * n]
                    assert np.count_nonzero(blk) == 0

    def test_dense_assembly_oracle(self):
        # lifted form G' Qt^{-1} G with anchor rows
        n, num = 2, 4
        rows = []
        covs = []
        g_row = np.zeros((n, (num + 1) * n))
        g_row[:, :n] = np.eye(n)
        rows.append(g_row)
        covs.append(1e-6 * np.eye(n))
        for i in range(num):
            g_row = np.zeros((n, (num + 1) * n))
            g_row[:, i * n:(i + 1) * n] = -self.prior.phis[i]
            g_row[:, (i + 1) * n:(i + 2) * n] = np.eye(n)
            rows.append(g_row)
            covs.append(self.prior.grammians[i])
        g_row = np.zeros((n, (num + 1) * n))
        g_row[:, num * n:] = np.eye(n)
        rows.append(g_row)
        covs.append(1e-6 * np.eye(n))
        k_inv = sum(
            row.T @ np.linalg.inv(cov) @ row for row, cov in zip(rows, covs)
        )
        assert rel_err(self.prior.prec.dense(), k_inv) <= 1e-9

    def test_anchored_mean_hits_endpoints(self):
        mean = self.prior.mean.reshape(-1, 2)
        assert np.linalg.norm(mean[0] - self.x0) <= 1e-4
        assert np.linalg.norm(mean[-1] - self.goal) <= 1e-4

    def test_start_block_variance_at_anchor_scale(self):
        cov = np.linalg.inv(self.prior.prec.dense())
        sigma_b2 = 1e-6
        assert cov[0, 0] <= 1.01 * sigma_b2

    def test_zero_dynamics_flow_constant(self):
        step = LTVStep(A=np.zeros((2, 2)), a=np.zeros(2), B=np.eye(2))
        sys_ltv = LTVSystem(steps=tuple([step] * 4), dt=0.5, n=2, m=2)
        prior = assemble_prior(sys_ltv, self.x0, self.goal, 1.0, 1e-3)
        flow = prior.flow_mean.reshape(-1, 2)
        assert np.allclose(flow, self.x0, atol=1e-15)

    def test_spd_and_symmetric(self):
        dense = self.prior.prec.dense()
        assert np.allclose(dense, dense.T, atol=1e-12)
        assert np.all(np.linalg.eigvalsh(dense) > 0)

    def test_point_robot_prior_spd(self):
        sys_ltv = point_robot_lti(2)(10, 0.2)
        prior = assemble_prior(
            sys_ltv, np.zeros(4), np.array([1.0, 1.0, 0, 0]), 0.5, 1e-3
        )
        assert np.all(np.linalg.eigvalsh(prior.prec.dense()) > 0)

    def test_goal_matching_flow_makes_means_agree(self):
        prior = assemble_prior(
            self.sys, self.x0, self.prior.flow_mean.reshape(-1, 2)[-1], 1.0, 1e-3
        )
        assert rel_err(prior.mean, prior.flow_mean) <= 1e-8
