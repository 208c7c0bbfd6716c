"""Result and log serialization.

result.json stores the trajectory and per-knot marginal covariances
(lower-triangular row-major packing to halve the file size); costs.jsonl is
one JSON record per line (iteration records, outer records, one leading
meta record with the schema version). Nothing time-dependent goes into
result.json so identical config + seed reproduce it byte for byte.
"""

from __future__ import annotations

import json

import numpy as np

from .gbp import ChainMarginals
from .optimizer import RunResult

RESULT_SCHEMA = "gvplan-result-v1"
COSTS_SCHEMA = "gvplan-costs-v1"


def pack_lower(mat: np.ndarray) -> list[float]:
    n = mat.shape[0]
    return [float(mat[i, j]) for i in range(n) for j in range(i + 1)]


def unpack_lower(packed, n: int) -> np.ndarray:
    out = np.zeros((n, n))
    idx = 0
    for i in range(n):
        for j in range(i + 1):
            out[i, j] = packed[idx]
            out[j, i] = packed[idx]
            idx += 1
    return out


def result_payload(
    result: RunResult,
    system: str,
    position_dim: int,
    seed: int,
    min_clear: float | None = None,
    mode: str | None = None,
) -> dict:
    n = result.final.block_size
    states = result.final.mean.reshape(-1, n)
    final_costs = result.records[-1] if result.records else {}
    payload = {
        "schema": RESULT_SCHEMA,
        "system": system,
        "n": n,
        "num_knots": len(states),
        "position_dim": position_dim,
        "seed": seed,
        "states": [[float(v) for v in row] for row in states],
        "cov_packing": "lower-row-major",
        "marginal_covs_packed": [pack_lower(c) for c in result.marginals.covs],
        "converged": result.converged,
        "iterations": result.iterations,
        "switch_iteration": result.switch_iteration,
        "final_costs": {
            key: final_costs.get(key)
            for key in ("prior_cost", "collision_cost", "entropy_cost", "total_cost")
        },
        "min_clearance": min_clear,
    }
    if mode is not None:
        payload["mode"] = mode
    return payload


def write_result(path: str, payload: dict) -> None:
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=1, sort_keys=True)
        handle.write("\n")


def load_result(path: str) -> dict:
    with open(path) as handle:
        payload = json.load(handle)
    if payload.get("schema") != RESULT_SCHEMA:
        raise ValueError(f"{path}: unexpected schema {payload.get('schema')!r}")
    return payload


def result_marginals(payload: dict) -> list[np.ndarray]:
    n = payload["n"]
    return [unpack_lower(p, n) for p in payload["marginal_covs_packed"]]


def write_costs_jsonl(path: str, records: list[dict], meta: dict | None = None) -> None:
    with open(path, "w") as handle:
        head = {"type": "meta", "schema": COSTS_SCHEMA}
        head.update(meta or {})
        handle.write(json.dumps(head) + "\n")
        for rec in records:
            handle.write(json.dumps(rec) + "\n")


def read_costs_jsonl(path: str) -> list[dict]:
    records = []
    with open(path) as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON ({exc})")
    return records
