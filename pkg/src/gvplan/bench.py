"""Timing harness: factor-evaluation, GBP-vs-dense, and full-run benches.

Emits CSV rows (mode, N, n, k_q, serial_ms, parallel_ms, improvement_pct);
medians over repetitions. The "factors" row times the selected kernel
backend at one thread vs the requested lanes; the "factors-pure" row times
the numpy fallback (its "parallel" equals its serial path), so comparing
the two rows compares the compiled and pure backends.
"""

from __future__ import annotations

import time
from statistics import median

import numpy as np

from . import _kernels_py
from .backend import kernels, resolve_threads
from .config import ExperimentConfig
from .factors import evaluate_all_factors
from .gbp import gbp_marginals
from .optimizer import initial_state, run_pgvimp
from .prior import assemble_prior
from .quadrature import smolyak_rule

BENCH_HEADER = "mode,N,n,k_q,serial_ms,parallel_ms,improvement_pct"


def _row(mode, n_intervals, n, k_q, serial_ms, parallel_ms):
    impr = 100.0 * (serial_ms - parallel_ms) / serial_ms if serial_ms > 0 else 0.0
    return {
        "mode": mode,
        "N": n_intervals,
        "n": n,
        "k_q": k_q,
        "serial_ms": serial_ms,
        "parallel_ms": parallel_ms,
        "improvement_pct": impr,
    }


def _time_ms(fn, repeats: int) -> float:
    fn()  # warm-up outside the timed reps
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return float(median(times))


def _factor_inputs(cfg: ExperimentConfig, n_intervals: int):
    sys_ltv = cfg.build_linear_system()
    if n_intervals != cfg.N:
        factory_cfg = cfg
        sys_ltv = type(sys_ltv)(
            steps=tuple([sys_ltv.steps[0]] * (n_intervals + 1)),
            dt=factory_cfg.total_time / n_intervals,
            n=sys_ltv.n,
            m=sys_ltv.m,
        )
    prior = assemble_prior(sys_ltv, cfg.start, cfg.goal, cfg.q_c, cfg.sigma_b)
    opt = cfg.optimizer_config()
    state = initial_state(prior, opt)
    marginals = gbp_marginals(state.prec)
    env = cfg.build_environment()
    if env is None:
        raise ValueError("factor bench needs an environment")
    rule = smolyak_rule(opt.k_q, sys_ltv.n)
    return state, marginals, env, rule, opt.k_q, sys_ltv.n


def bench_factors(
    cfg: ExperimentConfig, threads: int, repeats: int = 10,
    sweep: list[int] | None = None,
) -> list[dict]:
    lanes = resolve_threads(threads)
    rows = []
    for n_intervals in sweep or [cfg.N]:
        state, marg, env, rule, k_q, n = _factor_inputs(cfg, n_intervals)

        def run(backend, nthreads):
            return evaluate_all_factors(
                state.mean, state.prec, env.sdf, env.model, rule,
                threads=nthreads, marginals=marg, backend=backend,
            )

        serial = _time_ms(lambda: run(kernels, 1), repeats)
        parallel = _time_ms(lambda: run(kernels, lanes), repeats)
        rows.append(_row("factors", n_intervals, n, k_q, serial, parallel))

        pure = _time_ms(lambda: run(_kernels_py, 1), repeats)
        rows.append(_row("factors-pure", n_intervals, n, k_q, pure, pure))
    return rows


def bench_gbp(cfg: ExperimentConfig, repeats: int = 3) -> list[dict]:
    sys_ltv = cfg.build_linear_system()
    prior = assemble_prior(sys_ltv, cfg.start, cfg.goal, cfg.q_c, cfg.sigma_b)
    prec = prior.prec

    gbp_ms = _time_ms(lambda: gbp_marginals(prec), repeats)
    dense = prec.dense()
    dense_ms = _time_ms(lambda: np.linalg.inv(dense), repeats)
    return [_row("gbp", cfg.N, sys_ltv.n, 0, dense_ms, gbp_ms)]


def bench_full(cfg: ExperimentConfig, threads: int) -> list[dict]:
    lanes = resolve_threads(threads)
    sys_ltv = cfg.build_linear_system()
    env = cfg.build_environment()

    def run(nthreads):
        opt = cfg.optimizer_config()
        opt.threads = nthreads
        return run_pgvimp(
            sys_ltv, env, opt, cfg.start, cfg.goal, cfg.q_c, cfg.sigma_b
        )

    t0 = time.perf_counter()
    run(1)
    serial = (time.perf_counter() - t0) * 1e3
    t0 = time.perf_counter()
    run(lanes)
    parallel = (time.perf_counter() - t0) * 1e3
    opt = cfg.optimizer_config()
    return [_row("full", cfg.N, sys_ltv.n, opt.k_q, serial, parallel)]


def rows_to_csv(rows: list[dict]) -> str:
    lines = [BENCH_HEADER]
    for row in rows:
        lines.append(
            f"{row['mode']},{row['N']},{row['n']},{row['k_q']},"
            f"{row['serial_ms']:.3f},{row['parallel_ms']:.3f},"
            f"{row['improvement_pct']:.2f}"
        )
    return "\n".join(lines) + "\n"
