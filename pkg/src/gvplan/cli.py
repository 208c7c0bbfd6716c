"""Command-line front end: plan, bench, compare-modes."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .bench import bench_factors, bench_full, bench_gbp, rows_to_csv
from .blocktri import NotPositiveDefiniteError
from .config import ConfigError, ExperimentConfig
from .optimizer import run_pgvimp
from .runio import result_payload, write_costs_jsonl, write_result
from .sdf import min_clearance
from .slr import run_ipgvimp

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

_NUMERIC_ERRORS = (
    NotPositiveDefiniteError,
    FloatingPointError,
    RuntimeError,
    np.linalg.LinAlgError,
)


def _summary_table(rows: list[tuple[str, dict]]) -> str:
    header = f"{'plan':<12}{'Prior':>12}{'Collision':>12}{'MP':>12}{'Entropy':>14}{'Total':>14}"
    lines = [header, "-" * len(header)]
    for name, costs in rows:
        prior = costs["prior_cost"]
        coll = costs["collision_cost"]
        lines.append(
            f"{name:<12}{prior:>12.4f}{coll:>12.4f}{prior + coll:>12.4f}"
            f"{costs['entropy_cost']:>14.4f}{costs['total_cost']:>14.4f}"
        )
    return "\n".join(lines)


def _run_experiment(cfg: ExperimentConfig, init_mean=None):
    env = cfg.build_environment()
    opt = cfg.optimizer_config()
    if init_mean is not None:
        opt.init_mean = init_mean
    if cfg.system_kind() == "linear":
        sys_ltv = cfg.build_linear_system()
        result = run_pgvimp(
            sys_ltv, env, opt, cfg.start, cfg.goal, cfg.q_c, cfg.sigma_b
        )
        outer_log = []
    else:
        sys_nl = cfg.build_nonlinear_system()
        result, outer_log = run_ipgvimp(
            sys_nl, env, opt, cfg.outer_config(), cfg.start, cfg.goal,
            cfg.dt, cfg.N, cfg.q_c, cfg.sigma_b,
        )
    clearance = None
    if env is not None:
        states = result.final.mean.reshape(-1, result.final.block_size)
        clearance = min_clearance(states, env.sdf, env.model)
    return result, outer_log, clearance


def cmd_plan(cfg: ExperimentConfig, out_dir: str) -> int:
    result, outer_log, clearance = _run_experiment(cfg)
    payload = result_payload(
        result, cfg.system, cfg.position_dim(), cfg.seed, min_clear=clearance
    )
    write_result(os.path.join(out_dir, "result.json"), payload)
    write_costs_jsonl(
        os.path.join(out_dir, "costs.jsonl"),
        result.records + outer_log,
        meta={"system": cfg.system, "N": cfg.N, "seed": cfg.seed},
    )
    if result.records:
        print(_summary_table([("final", result.records[-1])]))
    print(f"converged: {result.converged} after {result.iterations} iterations")
    if clearance is not None:
        print(f"min_clearance: {clearance:.4f}")
    return EXIT_OK


def cmd_bench(cfg: ExperimentConfig, out_dir: str, mode: str, threads: int,
              sweep: list[int] | None) -> int:
    if mode == "factors":
        rows = bench_factors(cfg, threads, sweep=sweep)
    elif mode == "gbp":
        rows = bench_gbp(cfg)
    elif mode == "full":
        rows = bench_full(cfg, threads)
    else:
        raise ConfigError(f"unknown bench mode '{mode}'")
    csv_text = rows_to_csv(rows)
    with open(os.path.join(out_dir, "bench.csv"), "w") as handle:
        handle.write(csv_text)
    print(csv_text, end="")
    return EXIT_OK


def cmd_compare_modes(cfg: ExperimentConfig, out_dir: str) -> int:
    for mode in ("through", "around"):
        if mode not in cfg.modes:
            raise ConfigError(f"modes.{mode}: required for compare-modes")
    jitter = float(cfg.modes.get("init_jitter", 0.0))
    rng = np.random.default_rng(cfg.seed)  # PCG64; documented generator
    rows = []
    totals = {}
    for mode in ("through", "around"):
        init = cfg.mode_init_mean(mode)
        if jitter > 0:
            init = init + rng.normal(0.0, jitter, size=init.shape)
        result, outer_log, clearance = _run_experiment(cfg, init_mean=init)
        payload = result_payload(
            result, cfg.system, cfg.position_dim(), cfg.seed,
            min_clear=clearance, mode=mode,
        )
        write_result(os.path.join(out_dir, f"result_{mode}.json"), payload)
        write_costs_jsonl(
            os.path.join(out_dir, f"costs_{mode}.jsonl"),
            result.records + outer_log,
            meta={"system": cfg.system, "N": cfg.N, "seed": cfg.seed, "mode": mode},
        )
        rows.append((mode, result.records[-1]))
        totals[mode] = result.records[-1]["total_cost"]
    print(_summary_table(rows))
    best = min(totals, key=totals.get)
    print(f"lower total cost: {best}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gvplan",
        description="Gaussian-variational trajectory planning under uncertainty",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="optimize a trajectory distribution")
    p_plan.add_argument("config")

    p_bench = sub.add_parser("bench", help="timing harness")
    p_bench.add_argument("config")
    p_bench.add_argument("--mode", choices=["factors", "gbp", "full"],
                         default="factors")
    p_bench.add_argument("--sweep", default=None,
                         help="comma-separated N values for factor sweeps")

    p_cmp = sub.add_parser("compare-modes", help="run through/around inits")
    p_cmp.add_argument("config")

    for p in (p_plan, p_bench, p_cmp):
        p.add_argument("--threads", type=int, default=None,
                       help="parallel lanes (0 = all available)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=".", help="output directory")

    args = parser.parse_args(argv)
    try:
        cfg = ExperimentConfig.from_file(args.config)
        if args.threads is not None:
            cfg.threads = args.threads
        if args.seed is not None:
            cfg.seed = args.seed
        os.makedirs(args.out, exist_ok=True)
        if args.command == "plan":
            return cmd_plan(cfg, args.out)
        if args.command == "bench":
            sweep = None
            if args.sweep:
                sweep = [int(v) for v in args.sweep.split(",")]
            return cmd_bench(cfg, args.out, args.mode, cfg.threads, sweep)
        return cmd_compare_modes(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
