"""Dynamical system catalog: LTI point robots and the planar quadrotor.

Linear systems are stored as per-step triples (A_i, a_i, B_i) of the
continuous-time SDE dX = (A x + a) dt + B dW. Nonlinear systems carry the
zero-input drift and state-dependent diffusion; the discrete closed-loop
map used for statistical linearization is a forward-Euler step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

GRAVITY = 9.81

# planar quadrotor parameters (mass, body length, inertia)
QUAD_MASS = 1.0 / np.sqrt(2.0)
QUAD_LENGTH = np.sqrt(2.0)
QUAD_INERTIA = 1.0


@dataclass(frozen=True)
class LTVStep:
    A: np.ndarray
    a: np.ndarray
    B: np.ndarray


@dataclass(frozen=True)
class LTVSystem:
    """Linear time-varying triples at each knot, plus the step length dt."""

    steps: tuple[LTVStep, ...]
    dt: float
    n: int
    m: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        for step in self.steps:
            if step.A.shape != (self.n, self.n):
                raise ValueError(f"A shape {step.A.shape} != ({self.n}, {self.n})")
            if step.a.shape != (self.n,):
                raise ValueError(f"a shape {step.a.shape} != ({self.n},)")
            if step.B.shape != (self.n, self.m):
                raise ValueError(f"B shape {step.B.shape} != ({self.n}, {self.m})")

    @property
    def nsteps(self) -> int:
        return len(self.steps) - 1


@dataclass(frozen=True)
class NonlinearSystem:
    """Zero-input drift f0(x) and diffusion matrix g(x) of an SDE."""

    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    n: int
    m: int


def point_robot_lti(dim: int) -> Callable[[int, float], LTVSystem]:
    """Factory for 2D/3D double-integrator point robots.

    State is (position, velocity), n = 2*dim, and noise drives the velocity:
    A = [[0, I], [0, 0]], a = 0, B = [0; I].
    """
    if dim not in (2, 3):
        raise ValueError(f"unsupported point robot dimension {dim}")
    n = 2 * dim
    A = np.zeros((n, n))
    A[:dim, dim:] = np.eye(dim)
    a = np.zeros(n)
    B = np.zeros((n, dim))
    B[dim:, :] = np.eye(dim)

    def make(N: int, dt: float) -> LTVSystem:
        step = LTVStep(A=A, a=a, B=B)
        return LTVSystem(steps=tuple([step] * (N + 1)), dt=dt, n=n, m=dim)

    return make


def planar_quadrotor() -> NonlinearSystem:
    """Planar quadrotor with state (x, z, phi, v_x, v_z, phi_dot).

    v_x, v_z are body-frame velocities; thrust inputs are zero for the prior
    process and noise enters through the thrust channels.
    """
    b_mat = np.zeros((6, 2))
    b_mat[4, :] = 1.0 / QUAD_MASS
    b_mat[5, 0] = QUAD_LENGTH / QUAD_INERTIA
    b_mat[5, 1] = -QUAD_LENGTH / QUAD_INERTIA

    def drift(state: np.ndarray) -> np.ndarray:
        _, _, phi, v_x, v_z, phi_dot = state
        sin_phi, cos_phi = np.sin(phi), np.cos(phi)
        return np.array([
            v_x * cos_phi - v_z * sin_phi,
            v_x * sin_phi + v_z * cos_phi,
            phi_dot,
            v_z * phi_dot - GRAVITY * sin_phi,
            -v_x * phi_dot - GRAVITY * cos_phi,
            0.0,
        ])

    def diffusion(state: np.ndarray) -> np.ndarray:
        return b_mat

    return NonlinearSystem(drift=drift, diffusion=diffusion, n=6, m=2)


def euler_step(sys: NonlinearSystem, x: np.ndarray, dt: float) -> np.ndarray:
    """One forward-Euler step of the zero-input drift."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    out = np.asarray(x, dtype=float) + sys.drift(np.asarray(x, dtype=float)) * dt
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("euler_step produced a non-finite state")
    return out


SYSTEM_NAMES = ("point2d", "point3d", "planar_quadrotor")


def system_by_name(name: str):
    """Config-facing lookup; linear systems come back as (factory, 'linear')."""
    if name == "point2d":
        return point_robot_lti(2), "linear"
    if name == "point3d":
        return point_robot_lti(3), "linear"
    if name == "planar_quadrotor":
        return planar_quadrotor(), "nonlinear"
    raise ValueError(f"unknown system '{name}', expected one of {SYSTEM_NAMES}")
