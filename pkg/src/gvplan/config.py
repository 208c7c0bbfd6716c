"""Experiment configuration: one JSON file describes one experiment.

Schema (see README for the full field list):

    system        "point2d" | "point3d" | "planar_quadrotor"
    N             number of intervals (>= 2); the trajectory has N+1 knots
    total_time    horizon T in seconds
    q_c, sigma_b  process-noise intensity and boundary anchor scale
    start, goal   full boundary states, length n
    environment   {"primitives": [...], "bounds": [...], "cell_size": h}
                  or {"sdf_file": path} or null (obstacle-free)
    collision     {"radius_eps": r, "sigma_obs": s}
    optimizer     optional overrides of OptimizerConfig fields
    outer         optional overrides of OuterConfig fields (nonlinear runs)
    modes         optional {"<name>": {"waypoints": [[x, y], ...]}} inits
    seed          64-bit seed; all randomness flows from numpy PCG64(seed)
    threads       parallel lanes for factor evaluation (0 = all)
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields

import numpy as np

from .dynamics import system_by_name
from .optimizer import Environment, OptimizerConfig
from .sdf import Box, CollisionModel, Disc, load_sdf, rasterize
from .slr import OuterConfig


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries the field path."""


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {msg}")


@dataclass
class ExperimentConfig:
    system: str
    N: int
    total_time: float
    start: np.ndarray
    goal: np.ndarray
    q_c: float = 1.0
    sigma_b: float = 1e-3
    environment: dict | None = None
    collision: dict | None = None
    optimizer: dict = field(default_factory=dict)
    outer: dict = field(default_factory=dict)
    modes: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    base_dir: str = "."

    @property
    def dt(self) -> float:
        return self.total_time / self.N

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as handle:
                raw = json.load(handle)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})")
        return cls.from_dict(raw, base_dir=os.path.dirname(os.path.abspath(path)))

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str = ".") -> "ExperimentConfig":
        for key in ("system", "N", "total_time", "start", "goal"):
            _require(key in raw, key, "missing required field")
        system = raw["system"]
        factory, kind = system_by_name(system)  # raises on unknown name
        n_intervals = int(raw["N"])
        _require(n_intervals >= 2, "N", "must be >= 2")
        total_time = float(raw["total_time"])
        _require(total_time > 0, "total_time", "must be positive")

        n = factory.n if kind == "nonlinear" else factory(2, 1.0).n
        start = np.asarray(raw["start"], dtype=float).reshape(-1)
        goal = np.asarray(raw["goal"], dtype=float).reshape(-1)
        _require(start.shape[0] == n, "start", f"must have length {n}")
        _require(goal.shape[0] == n, "goal", f"must have length {n}")

        env = raw.get("environment")
        if env is not None:
            has_prims = "primitives" in env
            has_file = "sdf_file" in env
            _require(
                has_prims != has_file,
                "environment",
                "give either primitives or sdf_file",
            )
            if has_file:
                sdf_path = os.path.join(base_dir, env["sdf_file"])
                _require(
                    os.path.exists(sdf_path), "environment.sdf_file",
                    f"file not found: {sdf_path}",
                )
            if has_prims:
                _require(
                    "bounds" in env and "cell_size" in env,
                    "environment",
                    "primitives need bounds and cell_size",
                )
            _require("collision" in raw, "collision", "required with an environment")
        coll = raw.get("collision")
        if coll is not None:
            _require("radius_eps" in coll and "sigma_obs" in coll, "collision",
                     "needs radius_eps and sigma_obs")
            _require(float(coll["radius_eps"]) >= 0, "collision.radius_eps",
                     "must be >= 0")
            _require(float(coll["sigma_obs"]) > 0, "collision.sigma_obs",
                     "must be > 0")

        cfg = cls(
            system=system,
            N=n_intervals,
            total_time=total_time,
            start=start,
            goal=goal,
            q_c=float(raw.get("q_c", 1.0)),
            sigma_b=float(raw.get("sigma_b", 1e-3)),
            environment=env,
            collision=coll,
            optimizer=dict(raw.get("optimizer", {})),
            outer=dict(raw.get("outer", {})),
            modes=dict(raw.get("modes", {})),
            seed=int(raw.get("seed", 0)),
            threads=int(raw.get("threads", 1)),
            base_dir=base_dir,
        )
        _require(cfg.q_c > 0, "q_c", "must be positive")
        _require(cfg.sigma_b > 0, "sigma_b", "must be positive")
        cfg.optimizer_config()  # validate overrides early
        return cfg

    def system_kind(self) -> str:
        return system_by_name(self.system)[1]

    def build_linear_system(self):
        factory, kind = system_by_name(self.system)
        if kind != "linear":
            raise ConfigError("system: not a linear system")
        return factory(self.N, self.dt)

    def build_nonlinear_system(self):
        factory, kind = system_by_name(self.system)
        if kind != "nonlinear":
            raise ConfigError("system: not a nonlinear system")
        return factory

    def build_environment(self) -> Environment | None:
        if self.environment is None:
            return None
        env = self.environment
        if "sdf_file" in env:
            sdf = load_sdf(os.path.join(self.base_dir, env["sdf_file"]))
        else:
            prims = []
            for k, spec in enumerate(env["primitives"]):
                kind = spec.get("type")
                if kind == "disc":
                    prims.append(Disc(center=np.asarray(spec["center"], dtype=float),
                                      radius=float(spec["radius"])))
                elif kind == "box":
                    prims.append(Box(center=np.asarray(spec["center"], dtype=float),
                                     halfextents=np.asarray(spec["halfextents"],
                                                            dtype=float)))
                else:
                    raise ConfigError(
                        f"environment.primitives[{k}].type: unknown '{kind}'"
                    )
            sdf = rasterize(prims, env["bounds"], float(env["cell_size"]))
        model = CollisionModel(
            radius_eps=float(self.collision["radius_eps"]),
            sigma_obs=float(self.collision["sigma_obs"]),
        )
        return Environment(sdf=sdf, model=model)

    def optimizer_config(self) -> OptimizerConfig:
        known = {f.name for f in fields(OptimizerConfig)}
        for key in self.optimizer:
            _require(key in known, f"optimizer.{key}", "unknown field")
        cfg = OptimizerConfig(**self.optimizer)
        cfg.threads = self.threads
        cfg.validate()
        return cfg

    def outer_config(self) -> OuterConfig:
        known = {f.name for f in fields(OuterConfig)}
        for key in self.outer:
            _require(key in known, f"outer.{key}", "unknown field")
        return OuterConfig(**self.outer)

    def position_dim(self) -> int:
        return 3 if self.system == "point3d" else 2

    def mode_init_mean(self, mode: str) -> np.ndarray:
        """Initial mean trajectory routed through a mode's waypoints."""
        _require(mode in self.modes, f"modes.{mode}", "mode not defined")
        waypoints = np.asarray(self.modes[mode].get("waypoints", []), dtype=float)
        return waypoint_trajectory(
            self.start, self.goal, waypoints, self.N, self.dt, self.position_dim(),
            self.start.shape[0],
        )


def waypoint_trajectory(start, goal, waypoints, n_intervals, dt, pos_dim, n):
    """Piecewise-linear position path through waypoints, arc-length sampled.

    Velocities are central finite differences of the sampled positions;
    non-position coordinates other than the matching velocities stay zero
    (the planar-quadrotor attitude starts level).
    """
    knots = [np.asarray(start[:pos_dim], dtype=float)]
    for way in np.atleast_2d(waypoints):
        if way.size:
            knots.append(np.asarray(way, dtype=float))
    knots.append(np.asarray(goal[:pos_dim], dtype=float))
    knots = np.stack(knots)
    seg_lens = np.linalg.norm(np.diff(knots, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg_lens)])
    samples = np.linspace(0.0, cum[-1], n_intervals + 1)
    pos = np.stack([
        np.interp(samples, cum, knots[:, k]) for k in range(pos_dim)
    ], axis=1)

    vel = np.zeros_like(pos)
    vel[1:-1] = (pos[2:] - pos[:-2]) / (2.0 * dt)
    vel[0] = (pos[1] - pos[0]) / dt
    vel[-1] = (pos[-1] - pos[-2]) / dt

    states = np.zeros((n_intervals + 1, n))
    states[:, :pos_dim] = pos
    if n == 2 * pos_dim:
        states[:, pos_dim:] = vel
    else:
        # planar quadrotor: (x, z, phi, v_x, v_z, phi_dot), level attitude
        states[:, 3:5] = vel
    states[0] = start
    states[-1] = goal
    return states.reshape(-1)
