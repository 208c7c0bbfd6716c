"""KL-proximal update loop for linear time-varying systems.

Each iteration: GBP marginals -> factor-parallel collision gradients ->
joint gradient assembly -> bisection step-size selection under a KL trust
bound -> closed-form proximal update of (mu, Lambda). The temperature
enters by scaling the potential and prior terms by 1/T (minimizing
E[psi]/T - H, whose argmin matches E[psi] - T*H); a low-to-high temperature
schedule first finds a feasible trajectory, then widens it for robustness.

Every linear solve and log-determinant goes through block-tridiagonal
routines; nothing here densifies the joint.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .blocktri import (
    BlockTridiagonalMatrix,
    NotPositiveDefiniteError,
    logdet_block_tridiag,
)
from .dynamics import LTVSystem
from .factors import (
    FactorGradient,
    assemble_joint_gradients,
    evaluate_all_factors,
    interior_collision_maps,
)
from .gbp import ChainMarginals, gbp_marginals, gbp_mean_solve, trace_product
from .prior import DiscretePrior, assemble_prior
from .quadrature import QuadratureRule, smolyak_rule
from .sdf import CollisionModel, SignedDistanceField

_LOG_2PI = float(np.log(2.0 * np.pi))
_BISECTION_RTOL = 1e-3


@dataclass(frozen=True)
class JointGaussian:
    """Trajectory distribution: joint mean and block-tridiagonal precision."""

    mean: np.ndarray
    prec: BlockTridiagonalMatrix

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if mean.shape[0] != self.prec.dim:
            raise ValueError(
                f"mean dim {mean.shape[0]} != precision dim {self.prec.dim}"
            )
        object.__setattr__(self, "mean", mean)

    @property
    def nblocks(self) -> int:
        return self.prec.nblocks

    @property
    def block_size(self) -> int:
        return self.prec.block_size


@dataclass
class Environment:
    sdf: SignedDistanceField
    model: CollisionModel


@dataclass
class OptimizerConfig:
    kl_bound: float = 0.1
    beta_min: float = 1e-4
    beta_max: float = 0.9
    temp_low: float = 1.0
    temp_high: float = 10.0
    collision_tol: float | None = None  # default 1e-4 * N at run time
    max_iters: int = 200
    tol_mean: float = 1e-5
    tol_cost: float = 1e-6
    k_q: int = 3
    init: str = "interp"  # "interp", "flow", or "prior" (anchored mean)
    init_cov_scale: float = 0.1
    init_mean: np.ndarray | None = None
    threads: int = 1

    def validate(self) -> None:
        if self.kl_bound <= 0:
            raise ValueError("kl_bound must be positive")
        if not 0 < self.beta_min < self.beta_max:
            raise ValueError("need 0 < beta_min < beta_max")
        if self.temp_low <= 0 or self.temp_high <= 0:
            raise ValueError("temperatures must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.init not in ("interp", "flow", "prior"):
            raise ValueError("init must be 'interp', 'flow', or 'prior'")


@dataclass(frozen=True)
class CostBreakdown:
    prior_cost: float
    collision_cost: float
    entropy_cost: float  # -T * H(q)

    @property
    def mp_cost(self) -> float:
        """Prior plus collision (the motion-plan part of the objective)."""
        return self.prior_cost + self.collision_cost

    @property
    def total(self) -> float:
        return self.prior_cost + self.collision_cost + self.entropy_cost


@dataclass
class RunResult:
    final: JointGaussian
    marginals: ChainMarginals
    records: list[dict] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    switch_iteration: int | None = None
    wall_time_ms: float = 0.0


def proximal_update(
    cur: JointGaussian,
    prior: DiscretePrior,
    g_mu: np.ndarray,
    g_sigma: BlockTridiagonalMatrix,
    beta: float,
    temp: float,
) -> JointGaussian:
    """One closed-form KL-proximal step at step size beta.

    With temperature-scaled terms (potential gradients and prior precision
    divided by T):

        Lambda_{k+1} = beta/(beta+1) (2 grad_Sigma + K^{-1} + Lambda_k/beta)
        (K^{-1} + Lambda_k/beta) mu_{k+1}
            = -grad_mu + eta + Lambda_k mu_k / beta

    The returned precision is symmetrized but not SPD-checked; step-size
    selection owns that test.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    k_inv = prior.prec.scaled(1.0 / temp)
    lam_over_beta = cur.prec.scaled(1.0 / beta)

    lam_next = (g_sigma.scaled(2.0 / temp) + k_inv + lam_over_beta).scaled(
        beta / (beta + 1.0)
    ).symmetrized()

    sys_mat = k_inv + lam_over_beta
    rhs = -g_mu / temp + prior.info / temp + lam_over_beta.matvec(cur.mean)
    mean_next = gbp_mean_solve(sys_mat, rhs)
    return JointGaussian(mean=mean_next, prec=lam_next)


def kl_joint(
    nxt: JointGaussian,
    cur: JointGaussian,
    nxt_marginals: ChainMarginals | None = None,
) -> float:
    """KL(next || cur) via block-tridiagonal solves and log-determinants."""
    if nxt_marginals is None:
        nxt_marginals = gbp_marginals(nxt.prec)
    trace = trace_product(cur.prec, nxt_marginals)
    delta = cur.mean - nxt.mean
    mahal = cur.prec.quad_form(delta)
    logdet_nxt = logdet_block_tridiag(nxt.prec)
    logdet_cur = logdet_block_tridiag(cur.prec)
    return max(0.5 * (trace + mahal - cur.prec.dim + logdet_nxt - logdet_cur), 0.0)


@dataclass
class StepSelection:
    beta: float
    next_state: JointGaussian
    kl: float
    marginals: ChainMarginals


def select_step_size(
    cur: JointGaussian,
    prior: DiscretePrior,
    g_mu: np.ndarray,
    g_sigma: BlockTridiagonalMatrix,
    cfg: OptimizerConfig,
    temp: float,
) -> StepSelection:
    """Largest feasible beta in [beta_min, beta_max] by bisection.

    Feasible means the updated precision is SPD and KL(next || cur) <= the
    configured bound; bisection stops at 1e-3 relative width.
    """

    def probe(beta: float) -> StepSelection | None:
        candidate = proximal_update(cur, prior, g_mu, g_sigma, beta, temp)
        try:
            marg = gbp_marginals(candidate.prec)
        except NotPositiveDefiniteError:
            return None
        kl = kl_joint(candidate, cur, marg)
        if kl > cfg.kl_bound:
            return None
        return StepSelection(beta=beta, next_state=candidate, kl=kl, marginals=marg)

    best = probe(cfg.beta_max)
    if best is not None:
        return best
    best = probe(cfg.beta_min)
    if best is None:
        raise RuntimeError(
            f"no feasible step size at beta_min={cfg.beta_min} "
            f"(KL bound {cfg.kl_bound})"
        )
    lo, hi = cfg.beta_min, cfg.beta_max
    while (hi - lo) > _BISECTION_RTOL * hi:
        mid = 0.5 * (lo + hi)
        cand = probe(mid)
        if cand is None:
            hi = mid
        else:
            lo = mid
            best = cand
    return best


def entropy_of(prec: BlockTridiagonalMatrix) -> float:
    return 0.5 * (prec.dim * (_LOG_2PI + 1.0) - logdet_block_tridiag(prec))


def cost_breakdown(
    cur: JointGaussian,
    prior: DiscretePrior,
    temp: float,
    marginals: ChainMarginals | None = None,
    factor_values: list[FactorGradient] | None = None,
    env: Environment | None = None,
    rule: QuadratureRule | None = None,
    threads: int = 1,
) -> CostBreakdown:
    """Diagnostic costs of the current iterate (unscaled by temperature).

    prior_cost = 1/2 (mu - mu_prior)' K^{-1} (mu - mu_prior)
                 + 1/2 tr(K^{-1} Sigma), with the trace taken over the
    tridiagonal blocks only (K^{-1} is block-tridiagonal). The entropy term
    is reported as the cost -T * H(q).
    """
    if marginals is None:
        marginals = gbp_marginals(cur.prec)
    delta = cur.mean - prior.mean
    prior_cost = 0.5 * prior.prec.quad_form(delta) + 0.5 * trace_product(
        prior.prec, marginals
    )
    if factor_values is None:
        if env is None:
            factor_values = []
        else:
            if rule is None:
                raise ValueError("rule required to evaluate collision cost")
            factor_values = evaluate_all_factors(
                cur.mean, cur.prec, env.sdf, env.model, rule,
                threads=threads, marginals=marginals,
            )
    collision_cost = float(sum(f.e_psi for f in factor_values))
    entropy_cost = -temp * entropy_of(cur.prec)
    return CostBreakdown(
        prior_cost=prior_cost,
        collision_cost=collision_cost,
        entropy_cost=entropy_cost,
    )


def initial_state(prior: DiscretePrior, cfg: OptimizerConfig) -> JointGaussian:
    nblocks = prior.nsteps + 1
    n = prior.n
    if cfg.init_mean is not None:
        mean = np.asarray(cfg.init_mean, dtype=float).reshape(-1)
        if mean.shape[0] != nblocks * n:
            raise ValueError("init_mean has wrong dimension")
    elif cfg.init == "flow":
        mean = prior.flow_mean.copy()
    elif cfg.init == "prior":
        mean = prior.mean.copy()
    else:
        alphas = np.linspace(0.0, 1.0, nblocks).reshape(-1, 1)
        mean = ((1.0 - alphas) * prior.x0 + alphas * prior.goal).reshape(-1)
    # Sigma_0 = init_cov_scale * K  <=>  Lambda_0 = K^{-1} / init_cov_scale
    prec = prior.prec.scaled(1.0 / cfg.init_cov_scale)
    return JointGaussian(mean=mean, prec=prec)


def run_pgvimp(
    sys_ltv: LTVSystem,
    env: Environment | None,
    cfg: OptimizerConfig,
    x0: np.ndarray,
    goal: np.ndarray,
    q_c: float,
    sigma_b: float,
    prior: DiscretePrior | None = None,
) -> RunResult:
    """Full proximal optimization of the trajectory distribution.

    Runs at temp_low until the collision cost drops under collision_tol,
    then switches to temp_high; stops on max_iters or when, at unchanged
    temperature, both the mean displacement and the total-cost change fall
    under their tolerances.
    """
    cfg.validate()
    t_start = time.perf_counter()
    if prior is None:
        prior = assemble_prior(sys_ltv, x0, goal, q_c, sigma_b)
    nblocks, n = prior.nsteps + 1, prior.n
    collision_tol = (
        cfg.collision_tol if cfg.collision_tol is not None else 1e-4 * prior.nsteps
    )
    rule = smolyak_rule(cfg.k_q, n) if env is not None else None
    maps = interior_collision_maps(nblocks)

    cur = initial_state(prior, cfg)
    temp = cfg.temp_low
    result = RunResult(final=cur, marginals=gbp_marginals(cur.prec))
    prev_total: float | None = None
    prev_temp: float | None = None
    switched = False
    cached_factors: list[FactorGradient] | None = None

    for it in range(1, cfg.max_iters + 1):
        t_iter = time.perf_counter()
        marginals = result.marginals
        if env is not None:
            factor_vals = cached_factors
            if factor_vals is None:
                factor_vals = evaluate_all_factors(
                    cur.mean, cur.prec, env.sdf, env.model, rule,
                    threads=cfg.threads, marginals=marginals,
                )
            g_mu, g_sigma = assemble_joint_gradients(factor_vals, maps, nblocks, n)
        else:
            g_mu = np.zeros(nblocks * n)
            g_sigma = BlockTridiagonalMatrix.zeros(nblocks, n)

        step = select_step_size(cur, prior, g_mu, g_sigma, cfg, temp)
        nxt = step.next_state

        if env is not None:
            nxt_factors = evaluate_all_factors(
                nxt.mean, nxt.prec, env.sdf, env.model, rule,
                threads=cfg.threads, marginals=step.marginals,
            )
        else:
            nxt_factors = []
        cached_factors = nxt_factors if env is not None else None
        costs = cost_breakdown(
            nxt, prior, temp, marginals=step.marginals, factor_values=nxt_factors
        )

        mean_shift = float(np.linalg.norm(nxt.mean - cur.mean))
        record = {
            "type": "iter",
            "iter": it,
            "beta": step.beta,
            "temperature": temp,
            "prior_cost": costs.prior_cost,
            "collision_cost": costs.collision_cost,
            "entropy_cost": costs.entropy_cost,
            "total_cost": costs.total,
            "kl_step": step.kl,
            "mean_shift": mean_shift,
            "wall_time_ms": (time.perf_counter() - t_iter) * 1e3,
        }
        result.records.append(record)

        cur = nxt
        result.final = cur
        result.marginals = step.marginals
        result.iterations = it

        same_temp = prev_temp is not None and prev_temp == temp
        total_change = abs(costs.total - prev_total) if prev_total is not None else np.inf
        if same_temp and mean_shift < cfg.tol_mean and total_change < cfg.tol_cost:
            result.converged = True
            break
        prev_total = costs.total if same_temp or prev_temp is None else None
        prev_temp = temp

        if not switched and costs.collision_cost < collision_tol and temp != cfg.temp_high:
            temp = cfg.temp_high
            switched = True
            result.switch_iteration = it
            prev_total = None

    result.wall_time_ms = (time.perf_counter() - t_start) * 1e3
    return result
