"""Continuous-time dynamics of the benchmark systems and a fixed-step integrator.

Every derivative function accepts states of shape ``(..., n)`` and controls of
shape ``(..., m)`` so that a whole batch of rollouts advances in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

#: States beyond this magnitude count as escaped; the rollout freezes there.
DIVERGENCE_BOUND = 1e6

PENDULUM_PARAMS = dict(I1=0.1, I2=0.1, m1=0.15, m2=0.15, g=9.81,
                       l1=0.5, l2=0.5, lc1=0.25, lc2=0.25)
QUADROTOR_PARAMS = dict(m=1.0, I=0.1, r=0.5, g=9.81)


class SingularMassMatrix(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    """A control system: vector field, step size and saturation box.

    ``deriv(s, u, params)`` returns ds/dt.  Custom systems (test harnesses)
    only need a callable with that signature.
    """
    kind: str
    n: int
    m: int
    dt: float
    lower: np.ndarray
    upper: np.ndarray
    deriv_fn: Callable
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lower = np.broadcast_to(np.asarray(self.lower, float), (self.m,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, float), (self.m,)).copy()
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if np.any(lower >= upper):
            raise ValueError("saturation lower bound must be below upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def deriv(self, s, u):
        return self.deriv_fn(s, u, self.params)


def mass_matrix(q, p=PENDULUM_PARAMS):
    """M(q) of the double pendulum, shape ``(..., 2, 2)``."""
    c2 = np.cos(q[..., 1])
    m12 = p["I2"] + p["m2"] * p["l1"] * p["lc2"] * c2
    m11 = p["I1"] + p["I2"] + p["m2"] * p["l1"] ** 2 + 2 * p["m2"] * p["l1"] * p["lc2"] * c2
    m22 = np.full_like(m11, p["I2"])
    return np.stack([np.stack([m11, m12], -1), np.stack([m12, m22], -1)], -2)


def gravity_torque(q, p=PENDULUM_PARAMS):
    th1, th2 = q[..., 0], q[..., 1]
    g = p["g"]
    t1 = (-p["m1"] * g * p["lc1"] * np.sin(th1)
          - p["m2"] * g * (p["l1"] * np.sin(th1) + p["lc2"] * np.sin(th1 + th2)))
    t2 = -p["m2"] * g * p["lc2"] * np.sin(th1 + th2)
    return np.stack([t1, t2], -1)


def dp_deriv(s, u, p=PENDULUM_PARAMS):
    """Double pendulum vector field from M(q) q'' + C(q, q') q' = tau(q) + u.

    State order is (theta1, theta2, dtheta1, dtheta2).
    """
    s = np.asarray(s, float)
    u = np.asarray(u, float)
    th1, th2, dth1, dth2 = s[..., 0], s[..., 1], s[..., 2], s[..., 3]
    k = p["m2"] * p["l1"] * p["lc2"]
    c2 = np.cos(th2)
    h = k * np.sin(th2)
    # M(q), written out
    m11 = p["I1"] + p["I2"] + p["m2"] * p["l1"] ** 2 + 2 * k * c2
    m12 = p["I2"] + k * c2
    m22 = p["I2"]
    # tau(q) + u - C(q, dq) dq
    g = p["g"]
    s12 = np.sin(th1 + th2)
    r2 = -p["m2"] * g * p["lc2"] * s12 + u[..., 1] - h * dth1 * dth1
    r1 = (-(p["m1"] * p["lc1"] + p["m2"] * p["l1"]) * g * np.sin(th1)
          - p["m2"] * g * p["lc2"] * s12 + u[..., 0] + h * dth2 * (2 * dth1 + dth2))
    det = m11 * m22 - m12 * m12
    if np.any(np.abs(det) < 1e-12):
        raise SingularMassMatrix("mass matrix is singular")
    dd1 = (m22 * r1 - m12 * r2) / det
    dd2 = (m11 * r2 - m12 * r1) / det
    return np.stack([dth1, dth2, dd1, dd2], -1)


#: Offset from upright-centred coordinates to the angles used by ``dp_deriv``.
UPRIGHT_OFFSET = np.array([np.pi, 0.0, 0.0, 0.0])


def dp_deriv_upright(s, u, p=PENDULUM_PARAMS):
    """``dp_deriv`` with theta1 measured from the inverted position.

    theta1 = 0 in these coordinates is theta1 = pi in the manipulator
    equations, so the origin is the upright (unstable) equilibrium.  Only the
    sign of the gravity torque changes; M and C depend on theta2 alone.
    """
    return dp_deriv(np.asarray(s, float) + UPRIGHT_OFFSET, u, p)


def dp_energy(s, p=PENDULUM_PARAMS):
    """Kinetic plus potential energy of the unforced double pendulum."""
    s = np.asarray(s, float)
    q, dq = s[..., :2], s[..., 2:]
    M = mass_matrix(q, p)
    kinetic = 0.5 * np.einsum("...i,...ij,...j->...", dq, M, dq)
    th1, th2 = q[..., 0], q[..., 1]
    g = p["g"]
    potential = -(p["m1"] * g * p["lc1"] * np.cos(th1)
                  + p["m2"] * g * (p["l1"] * np.cos(th1) + p["lc2"] * np.cos(th1 + th2)))
    return kinetic + potential


def quad_deriv(s, u, p=QUADROTOR_PARAMS):
    """Planar quadrotor; state order (x1, x2, y1, y2, theta, w).

    The vertical equation keeps the ``- m g`` gravity term as published; with
    m = 1 it equals ``- g``.
    """
    s = np.asarray(s, float)
    u = np.asarray(u, float)
    x2, y2, th, w = s[..., 1], s[..., 3], s[..., 4], s[..., 5]
    thrust = u[..., 0] + u[..., 1]
    m = p["m"]
    return np.stack([
        x2,
        -thrust * np.sin(th) / m,
        y2,
        thrust * np.cos(th) / m - m * p["g"],
        w,
        p["r"] / p["I"] * (u[..., 0] - u[..., 1]),
    ], -1)


def double_pendulum(dt: float = 0.01, params: dict | None = None,
                    origin: str = "upright") -> SystemSpec:
    """Double pendulum with state origin at the ``"upright"`` balance point
    (the stabilization task) or at the ``"hanging"`` rest position."""
    fns = {"upright": dp_deriv_upright, "hanging": dp_deriv}
    if origin not in fns:
        raise ValueError(f"origin must be 'upright' or 'hanging', got {origin!r}")
    return SystemSpec("double_pendulum", 4, 2, dt, [-10.0, -10.0], [10.0, 10.0],
                      fns[origin], dict(params or PENDULUM_PARAMS))


def planar_quadrotor(dt: float = 0.1, params: dict | None = None) -> SystemSpec:
    return SystemSpec("quadrotor", 6, 2, dt, [0.0, 0.0], [10.0, 10.0],
                      quad_deriv, dict(params or QUADROTOR_PARAMS))


SYSTEMS = {"double_pendulum": double_pendulum, "quadrotor": planar_quadrotor}


def make_system(name: str) -> SystemSpec:
    try:
        return SYSTEMS[name]()
    except KeyError:
        raise ValueError(f"unknown system {name!r}; choose from {sorted(SYSTEMS)}") from None


def saturate(u, spec: SystemSpec):
    """Clamp each control component into the system's saturation box."""
    return np.clip(u, spec.lower, spec.upper)


def integrate_step(spec: SystemSpec, s, u, method: str = "rk4"):
    """Advance one step of size ``spec.dt`` with the control held constant."""
    h = spec.dt
    if method == "euler":
        return s + h * spec.deriv(s, u)
    if method != "rk4":
        raise ValueError(f"unknown integration method {method!r}")
    k1 = spec.deriv(s, u)
    k2 = spec.deriv(s + 0.5 * h * k1, u)
    k3 = spec.deriv(s + 0.5 * h * k2, u)
    k4 = spec.deriv(s + h * k3, u)
    return s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def diverged(s):
    """Boolean per state row: non-finite or beyond DIVERGENCE_BOUND."""
    s = np.asarray(s)
    with np.errstate(invalid="ignore"):
        return ~np.all(np.isfinite(s) & (np.abs(s) <= DIVERGENCE_BOUND), axis=-1)
