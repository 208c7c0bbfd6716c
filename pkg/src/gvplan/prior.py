"""Discrete-time Gaussian prior of the zero-input linear process.

Per interval [t_i, t_{i+1}] the deterministic flow gives a transition pair
(Phi_i, phi_i) and the driven noise accumulates the Grammian
Q_i = int_0^dt Phi(dt, s) B q_c B' Phi(dt, s)' ds. Lifting the step
residuals x_{i+1} - Phi_i x_i - phi_i together with soft start/goal anchor
factors yields a block-tridiagonal joint precision K^{-1} and an
information vector eta; the anchored prior is N(K eta, K).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from .blocktri import (
    BlockTridiagonalMatrix,
    NotPositiveDefiniteError,
    chol_spd,
    symmetrize,
)
from .dynamics import LTVSystem
from .gbp import gbp_mean_solve

_GRAMMIAN_NODES = 10
_GRAMMIAN_JITTER = 1e-10


@dataclass(frozen=True)
class DiscretePrior:
    """Transition kernels, Grammians, and the assembled joint prior."""

    phis: tuple[np.ndarray, ...]        # Phi_{i,i+1}, length N
    offsets: tuple[np.ndarray, ...]     # affine flow offsets phi_i, length N
    grammians: tuple[np.ndarray, ...]   # Q_{i,i+1}, length N
    flow_mean: np.ndarray               # zero-input flow from x0, (N+1)*n
    mean: np.ndarray                    # mean of the anchored prior, K eta
    info: np.ndarray                    # eta of the anchored prior
    prec: BlockTridiagonalMatrix        # K^{-1}, SPD
    x0: np.ndarray
    goal: np.ndarray
    sigma_b: float

    @property
    def n(self) -> int:
        return self.x0.shape[0]

    @property
    def nsteps(self) -> int:
        return len(self.phis)


def transition_kernel(sys: LTVSystem, i: int) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrix and affine offset of the flow over step i.

    Zero-order hold on (A, a) at the step's left endpoint: both come out of
    one matrix exponential of the augmented system [[A, a], [0, 0]].
    """
    if not 0 <= i < sys.nsteps:
        raise IndexError(f"step index {i} outside [0, {sys.nsteps})")
    step = sys.steps[i]
    n = sys.n
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = step.A
    aug[:n, n] = step.a
    big = expm(aug * sys.dt)
    return big[:n, :n], big[:n, n]


def grammian(sys: LTVSystem, i: int, q_c: float) -> np.ndarray:
    """Process-noise covariance accumulated over step i.

    Gauss-Legendre panel on [0, dt]; exact for the polynomial integrands of
    the LTI systems in the catalog. Noise intensity q_c scales B B'.
    """
    if q_c <= 0:
        raise ValueError("q_c must be positive")
    step = sys.steps[i]
    dt = sys.dt
    nodes, weights = leggauss(_GRAMMIAN_NODES)
    # map [-1, 1] -> [0, dt]
    s_vals = 0.5 * dt * (nodes + 1.0)
    w_vals = 0.5 * dt * weights
    bqb = q_c * (step.B @ step.B.T)
    out = np.zeros((sys.n, sys.n))
    for s, w in zip(s_vals, w_vals):
        trans = expm(step.A * (dt - s))
        out += w * (trans @ bqb @ trans.T)
    out = symmetrize(out)
    try:
        chol_spd(out, "grammian")
        return out
    except NotPositiveDefiniteError:
        out = out + _GRAMMIAN_JITTER * np.eye(sys.n)
    chol_spd(out, f"grammian at step {i} (after jitter)")
    return out


def assemble_prior(
    sys: LTVSystem,
    x0: np.ndarray,
    goal: np.ndarray,
    q_c: float,
    sigma_b: float,
) -> DiscretePrior:
    """Build the anchored discrete prior over N+1 knots.

    K^{-1} = G' Qtilde^{-1} G with G the block difference operator with rows
    (-Phi_i, I) and Qtilde = blockdiag(sigma_b^2 I, Q_0, ..., Q_{N-1},
    sigma_b^2 I); the two outer blocks are the start/goal anchors with
    anchor means x0 and goal.
    """
    if sigma_b <= 0:
        raise ValueError("sigma_b must be positive")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    goal = np.asarray(goal, dtype=float).reshape(-1)
    n, num_steps = sys.n, sys.nsteps
    if x0.shape[0] != n or goal.shape[0] != n:
        raise ValueError(f"boundary states must have dim {n}")

    phis, offsets, grams = [], [], []
    for i in range(num_steps):
        phi_mat, phi_off = transition_kernel(sys, i)
        phis.append(phi_mat)
        offsets.append(phi_off)
        grams.append(grammian(sys, i, q_c))

    flow = np.zeros((num_steps + 1, n))
    flow[0] = x0
    for i in range(num_steps):
        flow[i + 1] = phis[i] @ flow[i] + offsets[i]

    prec = BlockTridiagonalMatrix.zeros(num_steps + 1, n)
    info = np.zeros((num_steps + 1, n))
    anchor_prec = np.eye(n) / sigma_b**2
    prec.add_to_diag_block(0, anchor_prec)
    info[0] += anchor_prec @ x0
    prec.add_to_diag_block(num_steps, anchor_prec)
    info[num_steps] += anchor_prec @ goal

    for i in range(num_steps):
        q_low = chol_spd(grams[i], f"grammian {i}")
        q_inv = np.linalg.solve(q_low.T, np.linalg.solve(q_low, np.eye(n)))
        q_inv = symmetrize(q_inv)
        phi_mat, phi_off = phis[i], offsets[i]
        prec.add_to_diag_block(i, phi_mat.T @ q_inv @ phi_mat)
        prec.add_to_diag_block(i + 1, q_inv)
        prec.add_to_off_block(i, -phi_mat.T @ q_inv)
        info[i] += -phi_mat.T @ (q_inv @ phi_off)
        info[i + 1] += q_inv @ phi_off

    prec = prec.symmetrized()
    info_flat = info.reshape(-1)
    anchored_mean = gbp_mean_solve(prec, info_flat)

    return DiscretePrior(
        phis=tuple(phis),
        offsets=tuple(offsets),
        grammians=tuple(grams),
        flow_mean=flow.reshape(-1),
        mean=anchored_mean,
        info=info_flat,
        prec=prec,
        x0=x0,
        goal=goal,
        sigma_b=float(sigma_b),
    )
