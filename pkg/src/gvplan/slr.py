"""Statistical linearization outer loop for nonlinear stochastic dynamics.

Per step, the one-step closed-loop map (forward Euler of the zero-input
drift) is propagated through the sigma points of the nominal Gaussian
N(xbar_i, Sbar_i); the least-squares affine fit

    A_d = P_yx P_xx^{-1},   a_d = E[f(X)] - A_d E[X]

is converted to continuous-time triples A = (A_d - I)/dt, a = a_d/dt so
the linear-prior machinery applies unchanged. The outer loop alternates
linearization and inner proximal runs until consecutive mean trajectories
stop moving.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dynamics import LTVStep, LTVSystem, NonlinearSystem, euler_step
from .optimizer import Environment, OptimizerConfig, RunResult, run_pgvimp
from .quadrature import QuadratureRule, gaussian_sqrt, smolyak_rule

_PXX_JITTER_REL = 1e-9


@dataclass(frozen=True)
class NominalTrajectory:
    means: np.ndarray  # (N+1, n)
    covs: np.ndarray   # (N+1, n, n), SPD

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        covs = np.asarray(self.covs, dtype=float)
        if means.ndim != 2 or covs.ndim != 3 or len(means) != len(covs):
            raise ValueError("means (N+1, n) and covs (N+1, n, n) must align")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)


@dataclass
class OuterConfig:
    max_outer: int = 10
    norm_tol: float = 1e-2
    init_cov: float = 0.05  # Sbar_0 = init_cov * I


def _fit_affine(x_pts, y_pts, weights, n):
    """Weighted least-squares affine fit of propagated sigma points."""
    x_mean = weights @ x_pts
    y_mean = weights @ y_pts
    dx = x_pts - x_mean
    dy = y_pts - y_mean
    p_xx = dx.T @ (dx * weights[:, None])
    p_yx = dy.T @ (dx * weights[:, None])
    try:
        low = np.linalg.cholesky(p_xx)
    except np.linalg.LinAlgError:
        # shrinking nominal covariances can make P_xx numerically singular;
        # jitter relative to its own scale so well-conditioned fits stay exact
        scale = max(float(np.trace(p_xx)) / n, np.finfo(float).tiny)
        low = np.linalg.cholesky(p_xx + _PXX_JITTER_REL * scale * np.eye(n))
    a_mat = np.linalg.solve(low.T, np.linalg.solve(low, p_yx.T)).T
    a_vec = y_mean - a_mat @ x_mean
    return a_mat, a_vec


def slr_linearize(
    sys_nl: NonlinearSystem,
    nominal: NominalTrajectory,
    dt: float,
    rule: QuadratureRule,
) -> LTVSystem:
    """LTV system fitted to the Euler closed-loop map around the nominal."""
    n = sys_nl.n
    if rule.dim != n:
        raise ValueError(f"rule dim {rule.dim} != state dim {n}")
    steps = []
    for x_bar, s_bar in zip(nominal.means, nominal.covs):
        low = gaussian_sqrt(s_bar)
        x_pts = x_bar + rule.points @ low.T
        y_pts = np.stack([euler_step(sys_nl, x, dt) for x in x_pts])
        a_d, a_vec_d = _fit_affine(x_pts, y_pts, rule.weights, n)
        steps.append(
            LTVStep(
                A=(a_d - np.eye(n)) / dt,
                a=a_vec_d / dt,
                B=sys_nl.diffusion(x_bar),
            )
        )
    return LTVSystem(steps=tuple(steps), dt=dt, n=n, m=sys_nl.m)


def run_ipgvimp(
    sys_nl: NonlinearSystem,
    env: Environment | None,
    cfg: OptimizerConfig,
    outer_cfg: OuterConfig,
    x0: np.ndarray,
    goal: np.ndarray,
    dt: float,
    num_steps: int,
    q_c: float,
    sigma_b: float,
) -> tuple[RunResult, list[dict]]:
    """Alternate statistical linearization and inner proximal runs.

    The initial nominal is the straight-line interpolation from x0 to the
    goal with covariance init_cov * I. After each inner run the solution's
    mean trajectory and marginal covariances become the next nominal; the
    loop stops when the norm difference of consecutive mean trajectories
    drops below norm_tol (or at max_outer). Returns the last inner result
    and the outer iteration log.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    goal = np.asarray(goal, dtype=float).reshape(-1)
    n = sys_nl.n
    alphas = np.linspace(0.0, 1.0, num_steps + 1).reshape(-1, 1)
    nominal = NominalTrajectory(
        means=(1.0 - alphas) * x0 + alphas * goal,
        covs=np.repeat(outer_cfg.init_cov * np.eye(n)[None], num_steps + 1, axis=0),
    )
    rule = smolyak_rule(cfg.k_q, n)

    result: RunResult | None = None
    outer_log: list[dict] = []
    inner_cfg = cfg
    for outer_it in range(1, outer_cfg.max_outer + 1):
        sys_ltv = slr_linearize(sys_nl, nominal, dt, rule)
        try:
            result = run_pgvimp(
                sys_ltv, env, inner_cfg, x0, goal, q_c, sigma_b
            )
        except Exception as exc:
            raise RuntimeError(f"inner run failed at outer iteration {outer_it}") from exc
        means = result.final.mean.reshape(num_steps + 1, n)
        norm_diff = float(np.linalg.norm(means - nominal.means))
        outer_log.append(
            {"type": "outer", "outer_iter": outer_it, "norm_diff": norm_diff}
        )
        nominal = NominalTrajectory(
            means=means, covs=np.stack(result.marginals.covs)
        )
        # warm-start subsequent inner runs from the latest solution
        inner_cfg = replace(cfg, init_mean=result.final.mean)
        if norm_diff < outer_cfg.norm_tol:
            break
    return result, outer_log
