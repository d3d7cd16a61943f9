"""Jacobian linearization, zero-order-hold discretization and a discounted DARE solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sysdyn import SystemSpec


class RiccatiError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinearModel:
    """Discrete-time model s' = A s + B u about (s_star, u_star), plus the
    continuous Jacobians it came from."""
    A: np.ndarray
    B: np.ndarray
    s_star: np.ndarray
    u_star: np.ndarray
    dt: float
    Ac: np.ndarray | None = None
    Bc: np.ndarray | None = None


def jacobians(f, s, u, h=1e-6):
    """Central-difference Jacobians of f(s, u) with respect to s and u."""
    s = np.asarray(s, float)
    u = np.asarray(u, float)
    n, m = s.size, u.size
    A = np.empty((n, n))
    B = np.empty((n, m))
    for i in range(n):
        d = np.zeros(n)
        d[i] = h
        A[:, i] = (f(s + d, u) - f(s - d, u)) / (2 * h)
    for i in range(m):
        d = np.zeros(m)
        d[i] = h
        B[:, i] = (f(s, u + d) - f(s, u - d)) / (2 * h)
    return A, B


def zoh(Ac, Bc, dt, order=8):
    """A_d = sum_k (Ac dt)^k / k!, B_d = sum_k Ac^k dt^(k+1) / (k+1)! Bc, truncated."""
    n = Ac.shape[0]
    Ad = np.eye(n)
    S = np.eye(n) * dt
    term = np.eye(n)
    for k in range(1, order + 1):
        term = term @ Ac * dt / k          # (Ac dt)^k / k!
        Ad = Ad + term
        S = S + term * dt / (k + 1)        # Ac^k dt^(k+1) / (k+1)!
    return Ad, S @ Bc


def linearize(spec: SystemSpec, s_star, u_star, h=1e-6, eq_tol=1e-8) -> LinearModel:
    s_star = np.asarray(s_star, float)
    u_star = np.asarray(u_star, float)
    res = np.abs(spec.deriv(s_star, u_star)).max()
    if res > eq_tol:
        raise ValueError(f"(s*, u*) is not an equilibrium: |f| = {res:.3g}")
    Ac, Bc = jacobians(spec.deriv, s_star, u_star, h)
    Ad, Bd = zoh(Ac, Bc, spec.dt)
    return LinearModel(Ad, Bd, s_star, u_star, spec.dt, Ac, Bc)


def riccati_step(P, A, B, Q, R, gamma):
    BtP = B.T @ P
    G = R + gamma * BtP @ B
    K = gamma * np.linalg.solve(G, BtP @ A)
    P_new = Q + gamma * A.T @ P @ A - gamma * (A.T @ P @ B) @ K
    return 0.5 * (P_new + P_new.T), K


def dare_residual(P, A, B, Q, R, gamma=1.0):
    P_next, _ = riccati_step(P, A, B, Q, R, gamma)
    return float(np.abs(P_next - P).max())


def dare_solve(A, B, Q, R, gamma=1.0, tol=1e-12, max_iter=100_000):
    """Fixed-point iteration on the gamma-discounted DARE.

    P <- Q + g A'PA - g^2 A'PB (R + g B'PB)^-1 B'PA, starting from P = Q.
    Returns (P, K) with the policy u = -K s.
    """
    A = np.atleast_2d(np.asarray(A, float))
    B = np.atleast_2d(np.asarray(B, float))
    Q = np.atleast_2d(np.asarray(Q, float))
    R = np.atleast_2d(np.asarray(R, float))
    P = 0.5 * (Q + Q.T)
    for it in range(max_iter):
        P_new, K = riccati_step(P, A, B, Q, R, gamma)
        delta = np.abs(P_new - P).max()
        P = P_new
        if delta < tol:
            break
    else:
        raise RiccatiError(f"DARE iteration did not converge in {max_iter} steps "
                           f"(last update {delta:.3g})")
    _, K = riccati_step(P, A, B, Q, R, gamma)
    return P, K


def spectral_radius(M):
    return float(np.abs(np.linalg.eigvals(np.atleast_2d(M))).max())


QUADROTOR_Q = np.diag([1.0, 0.1, 1.0, 0.1, 1.0, 0.1])
QUADROTOR_R = 1e-4 * np.eye(2)
PENDULUM_Q = np.diag([5.0, 5.0, 0.5, 0.5])
PENDULUM_R = 5e-5 * np.eye(2)

LQR_WEIGHTS = {"quadrotor": (QUADROTOR_Q, QUADROTOR_R),
               "double_pendulum": (PENDULUM_Q, PENDULUM_R)}

HOVER_STATE = np.zeros(6)
HOVER_CONTROL = np.array([4.905, 4.905])


def lqr_gain(spec: SystemSpec, s_star=None, u_star=None, gamma=0.99):
    """Discounted LQR gain for a benchmark system about its operating point.

    Returns (K, b, model, P) so that u = -K (s - s*) + u* = -K s + b.
    """
    if s_star is None:
        s_star = np.zeros(spec.n)
    if u_star is None:
        u_star = HOVER_CONTROL if spec.kind == "quadrotor" else np.zeros(spec.m)
    model = linearize(spec, s_star, u_star)
    Q, R = LQR_WEIGHTS[spec.kind]
    P, K = dare_solve(model.A, model.B, Q, R, gamma)
    b = u_star + K @ s_star
    return K, b, model, P
