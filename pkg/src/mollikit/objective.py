"""Rollouts, the discounted return J(theta) and the Q-value probe."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .policy import GaussianPolicy
from .sysdyn import SystemSpec, diverged, integrate_step, saturate


def pendulum_reward(s, a):
    """Negated quadratic cost of the double pendulum (always <= 0)."""
    s = np.asarray(s, float)
    a = np.asarray(a, float)
    return -(5 * (s[..., 0] ** 2 + s[..., 1] ** 2)
             + 0.5 * (s[..., 2] ** 2 + s[..., 3] ** 2)
             + 0.00005 * (a * a).sum(-1))


def quadrotor_reward(s, a):
    s = np.asarray(s, float)
    a = np.asarray(a, float)
    return -(s[..., 0] ** 2 + s[..., 2] ** 2 + s[..., 4] ** 2
             + 0.1 * (s[..., 1] ** 2 + s[..., 3] ** 2 + s[..., 5] ** 2)
             + 0.0001 * (a * a).sum(-1))


REWARDS = {"double_pendulum": pendulum_reward, "quadrotor": quadrotor_reward}

INITIAL_STATES = {
    "double_pendulum": np.array([-0.2, 0.2, 0.0, 0.0]),
    "quadrotor": np.zeros(6),
}


@dataclass(frozen=True)
class RolloutConfig:
    horizon: int = 1000
    gamma: float = 0.99
    s0: np.ndarray | None = None
    method: str = "rk4"
    reward: Callable | None = None

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0,1)")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    def initial_state(self, spec: SystemSpec):
        if self.s0 is not None:
            return np.asarray(self.s0, float)
        if spec.kind in INITIAL_STATES:
            return INITIAL_STATES[spec.kind].copy()
        return np.zeros(spec.n)

    def reward_fn(self, spec: SystemSpec):
        if self.reward is not None:
            return self.reward
        try:
            return REWARDS[spec.kind]
        except KeyError:
            raise ValueError(f"no default reward for system {spec.kind!r}") from None

    def discounts(self):
        return self.gamma ** np.arange(self.horizon)


@dataclass
class Trajectory:
    """One rollout: states s_k, applied (saturated) actions a_k, rewards R(s_k, a_k)."""
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    gamma: float
    return_: float
    raw_actions: np.ndarray | None = field(default=None, repr=False)
    escaped_at: int | None = None

    def __len__(self):
        return len(self.rewards)

    @property
    def steps(self):
        return list(zip(self.states, self.actions, self.rewards))

    def recompute_return(self):
        return float(np.sum(self.gamma ** np.arange(len(self.rewards)) * self.rewards))

    def to_csv(self, path):
        n = self.states.shape[1]
        m = self.actions.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k"] + [f"s_{i + 1}" for i in range(n)]
                       + [f"a_{i + 1}" for i in range(m)] + ["reward"])
            for k, (s, a, r) in enumerate(self.steps):
                w.writerow([k] + [repr(float(x)) for x in s]
                           + [repr(float(x)) for x in a] + [repr(float(r))])


@dataclass
class BatchResult:
    """Arrays from a vectorized rollout: ``states`` (B, H, n), ``actions`` (B, H, m)
    hold the saturated controls, ``raw`` the unsaturated samples the score
    needs, ``rewards`` (B, H) and ``returns`` (B,)."""
    states: np.ndarray
    actions: np.ndarray
    raw: np.ndarray
    rewards: np.ndarray
    returns: np.ndarray
    escaped_at: np.ndarray

    def trajectory(self, i, gamma):
        esc = int(self.escaped_at[i])
        return Trajectory(self.states[i], self.actions[i], self.rewards[i], gamma,
                          float(self.returns[i]), self.raw[i], None if esc < 0 else esc)


def simulate_batch(spec: SystemSpec, policy: GaussianPolicy, cfg: RolloutConfig,
                   noise=None, s0=None, first_action=None) -> BatchResult:
    """Roll out B trajectories at once.

    ``noise`` is a (B, H, m) array of standard normals (None: deterministic
    mean policy, B=1 unless ``s0`` or ``first_action`` is batched).
    ``first_action`` (B, m) overrides the first action, which is how the
    Q-value probe is evaluated.  A trajectory whose state escapes (non-finite
    or beyond the divergence bound) is frozen: its state stops updating and
    its last finite reward repeats for the remaining steps.
    """
    H = cfg.horizon
    reward = cfg.reward_fn(spec)
    if s0 is None:
        s0 = cfg.initial_state(spec)
    s0 = np.asarray(s0, float)
    B = 1
    if noise is not None:
        noise = np.asarray(noise, float)
        B = noise.shape[0]
        if noise.shape[1] < H:
            raise ValueError("noise array shorter than the horizon")
    if first_action is not None:
        first_action = np.atleast_2d(np.asarray(first_action, float))
        B = max(B, first_action.shape[0])
    if s0.ndim == 2:
        B = max(B, s0.shape[0])
    s = np.broadcast_to(s0, (B, spec.n)).copy()
    std = np.sqrt(policy.variances)

    states = np.empty((B, H, spec.n))
    actions = np.empty((B, H, spec.m))
    raw = np.empty((B, H, spec.m))
    rewards = np.empty((B, H))
    alive = np.ones(B, bool)
    escaped_at = np.full(B, -1)

    for k in range(H):
        u = policy.mean_action(s)
        if noise is not None:
            u = u + std * noise[:, k]
        if k == 0 and first_action is not None:
            u = np.broadcast_to(first_action, (B, spec.m)).copy()
        a = saturate(u, spec)
        r = reward(s, a)
        if not alive.all():
            dead = ~alive
            # frozen rows keep their last state, action and reward
            u[dead] = raw[dead, k - 1]
            a[dead] = actions[dead, k - 1]
            r = np.where(alive, r, rewards[:, k - 1])
        states[:, k] = s
        actions[:, k] = a
        raw[:, k] = u
        rewards[:, k] = r
        if k == H - 1:
            break
        with np.errstate(all="ignore"):
            nxt = integrate_step(spec, s, a, cfg.method)
        bad = alive & diverged(nxt)
        if bad.any():
            escaped_at[bad] = k + 1
            alive &= ~bad
        s = np.where(alive[:, None], nxt, s)

    returns = (rewards * cfg.discounts()).sum(-1)
    return BatchResult(states, actions, raw, rewards, returns, escaped_at)


def rollout(spec: SystemSpec, policy: GaussianPolicy, cfg: RolloutConfig,
            rng=None) -> Trajectory:
    """Single rollout; stochastic iff ``rng`` is given."""
    if rng is None:
        res = simulate_batch(spec, policy, cfg)
    else:
        if policy.deterministic:
            raise ValueError("stochastic rollout needs a stochastic policy")
        res = simulate_batch(spec, policy, cfg, rng.standard_normal((1, cfg.horizon, spec.m)))
    return res.trajectory(0, cfg.gamma)


def deterministic_return(spec, policy, cfg) -> float:
    return float(simulate_batch(spec, policy, cfg).returns[0])


def q_values(spec, policy, s0, actions, cfg) -> np.ndarray:
    """Q(s0, a) for each row of ``actions``: first action a, then the mean policy."""
    actions = np.atleast_2d(np.asarray(actions, float))
    return simulate_batch(spec, policy, cfg, s0=s0, first_action=actions).returns


def q_value(spec, policy, s0, a0, cfg) -> float:
    return float(q_values(spec, policy, s0, a0, cfg)[0])
