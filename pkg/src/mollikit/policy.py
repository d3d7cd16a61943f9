"""Gaussian policies over linear or tanh-MLP mean maps.

The flat parameter vector (``ParamVector``) concatenates the mean-map weights
row-major, ``K`` then ``b`` for the linear map and ``W1`` then ``W2`` for the
MLP, followed by the noise scale(s) when those are trainable.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

LOG_2PI = np.log(2 * np.pi)


@dataclass(frozen=True)
class LinearMean:
    """u = -K s + b.  ``b=None`` drops the bias from the map and the parameters."""
    K: np.ndarray
    b: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "K", np.atleast_2d(np.asarray(self.K, float)))
        if self.b is not None:
            b = np.asarray(self.b, float).reshape(-1)
            if b.shape != (self.K.shape[0],):
                raise ValueError("bias length must equal the number of controls")
            object.__setattr__(self, "b", b)

    kind = "linear"

    @property
    def n(self):
        return self.K.shape[1]

    @property
    def m(self):
        return self.K.shape[0]

    @property
    def hidden(self):
        return 0

    @property
    def size(self):
        return self.K.size + (0 if self.b is None else self.b.size)

    def __call__(self, s):
        s = np.asarray(s, float)
        u = -(s[..., None, :] * self.K).sum(-1)
        return u if self.b is None else u + self.b

    def flat(self):
        parts = [self.K.ravel()]
        if self.b is not None:
            parts.append(self.b)
        return np.concatenate(parts)

    def from_flat(self, v):
        v = np.asarray(v, float)
        K = v[:self.K.size].reshape(self.K.shape)
        b = None if self.b is None else v[self.K.size:self.size].copy()
        return LinearMean(K, b)

    def vjp(self, s, e):
        """Sum over samples of e^T dmu/dzeta; s is (..., n), e is (..., m)."""
        e2 = e.reshape(-1, self.m)
        s2 = np.asarray(s, float).reshape(-1, self.n)
        parts = [-(e2.T @ s2).ravel()]
        if self.b is not None:
            parts.append(e2.sum(0))
        return np.concatenate(parts)

    def per_sample_vjp(self, s, e):
        """Like ``vjp`` without the sum: returns (..., size)."""
        dK = -(e[..., :, None] * np.asarray(s, float)[..., None, :])
        lead = e.shape[:-1]
        parts = [dK.reshape(lead + (-1,))]
        if self.b is not None:
            parts.append(e)
        return np.concatenate(parts, -1)

    def jacobian(self, s):
        """dmu/dzeta at a single state, shape (m, size)."""
        eye = np.eye(self.m)
        return np.stack([self.per_sample_vjp(s, eye[i]) for i in range(self.m)])


@dataclass(frozen=True)
class MlpMean:
    """u = W2 tanh(W1 s), no biases."""
    W1: np.ndarray
    W2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "W1", np.atleast_2d(np.asarray(self.W1, float)))
        object.__setattr__(self, "W2", np.atleast_2d(np.asarray(self.W2, float)))
        if self.W2.shape[1] != self.W1.shape[0]:
            raise ValueError("W2 columns must match W1 rows (hidden width)")

    kind = "mlp"

    @property
    def n(self):
        return self.W1.shape[1]

    @property
    def m(self):
        return self.W2.shape[0]

    @property
    def hidden(self):
        return self.W1.shape[0]

    @property
    def size(self):
        return self.W1.size + self.W2.size

    @classmethod
    def init(cls, n, m, hidden=16, rng=None):
        """Uniform fan-in scaled initialization."""
        rng = np.random.default_rng(rng)
        W1 = rng.uniform(-1, 1, (hidden, n)) / np.sqrt(n)
        W2 = rng.uniform(-1, 1, (m, hidden)) / np.sqrt(hidden)
        return cls(W1, W2)

    def _hidden(self, s):
        return np.tanh((np.asarray(s, float)[..., None, :] * self.W1).sum(-1))

    def __call__(self, s):
        return (self._hidden(s)[..., None, :] * self.W2).sum(-1)

    def flat(self):
        return np.concatenate([self.W1.ravel(), self.W2.ravel()])

    def from_flat(self, v):
        v = np.asarray(v, float)
        k = self.W1.size
        return MlpMean(v[:k].reshape(self.W1.shape), v[k:self.size].reshape(self.W2.shape))

    def per_sample_vjp(self, s, e):
        s = np.asarray(s, float)
        h = self._hidden(s)
        dW2 = e[..., :, None] * h[..., None, :]
        back = (e[..., :, None] * self.W2).sum(-2) * (1 - h * h)
        dW1 = back[..., :, None] * s[..., None, :]
        lead = e.shape[:-1]
        return np.concatenate([dW1.reshape(lead + (-1,)), dW2.reshape(lead + (-1,))], -1)

    def vjp(self, s, e):
        return self.per_sample_vjp(s, e).reshape(-1, self.size).sum(0)

    def jacobian(self, s):
        eye = np.eye(self.m)
        return np.stack([self.per_sample_vjp(s, eye[i]) for i in range(self.m)])


@dataclass(frozen=True)
class GaussianPolicy:
    """N(mu(s), sigma^2 I), N(mu(s), diag(r)), or deterministic when both are None.

    ``train_noise`` appends the noise scale (sigma, or each r_i) to the
    parameter vector and to the score.
    """
    mean: LinearMean | MlpMean
    sigma: float | None = None
    r: np.ndarray | None = None
    train_noise: bool = False

    def __post_init__(self):
        if self.sigma is not None and self.r is not None:
            raise ValueError("give either sigma or r, not both")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.r is not None:
            r = np.asarray(self.r, float).reshape(-1)
            if r.shape != (self.m,) or np.any(r <= 0):
                raise ValueError("r must hold one positive variance per control")
            object.__setattr__(self, "r", r)
        if self.train_noise and self.deterministic:
            raise ValueError("a deterministic policy has no noise to train")

    @property
    def n(self):
        return self.mean.n

    @property
    def m(self):
        return self.mean.m

    @property
    def deterministic(self):
        return self.sigma is None and self.r is None

    @property
    def variances(self):
        if self.r is not None:
            return self.r
        if self.sigma is None:
            return np.zeros(self.m)
        return np.full(self.m, self.sigma ** 2)

    @property
    def size(self):
        extra = 0
        if self.train_noise:
            extra = 1 if self.sigma is not None else self.m
        return self.mean.size + extra

    def mean_action(self, s):
        return self.mean(s)

    def sample_action(self, s, rng):
        if self.deterministic:
            raise ValueError("deterministic policy cannot sample")
        mu = self.mean(s)
        return mu + np.sqrt(self.variances) * rng.standard_normal(mu.shape)

    def log_prob(self, s, a):
        if self.deterministic:
            raise ValueError("deterministic policy has no density")
        var = self.variances
        d = np.asarray(a, float) - self.mean(s)
        return -0.5 * (np.sum(d * d / var, -1) + np.sum(np.log(var)) + self.m * LOG_2PI)

    def score(self, s, a):
        """Gradient of log pi(a|s) over the parameter vector, per sample.

        Returns shape ``(..., size)`` for leading sample dimensions of s and a.
        """
        if self.deterministic:
            raise ValueError("deterministic policy has no score")
        var = self.variances
        d = np.asarray(a, float) - self.mean(s)
        g = self.mean.per_sample_vjp(s, d / var)
        if not self.train_noise:
            return g
        if self.sigma is not None:
            sig = self.sigma
            extra = ((d * d).sum(-1) - self.m * sig ** 2) / sig ** 3
            extra = extra[..., None]
        else:
            extra = -0.5 / var + 0.5 * d * d / var ** 2
        return np.concatenate([g, extra], -1)

    def score_sum(self, s, a):
        """Score summed over all leading sample dimensions (e.g. a trajectory)."""
        return self.score(s, a).reshape(-1, self.size).sum(0)

    def flat(self):
        v = self.mean.flat()
        if self.train_noise:
            noise = [self.sigma] if self.sigma is not None else list(self.r)
            v = np.concatenate([v, noise])
        return v

    def with_flat(self, v):
        v = np.asarray(v, float)
        if v.shape != (self.size,):
            raise ValueError(f"expected {self.size} parameters, got {v.shape}")
        mean = self.mean.from_flat(v[:self.mean.size])
        if not self.train_noise:
            return replace(self, mean=mean)
        tail = v[self.mean.size:]
        if self.sigma is not None:
            return replace(self, mean=mean, sigma=float(tail[0]))
        return replace(self, mean=mean, r=tail.copy())

    def deterministic_copy(self):
        return GaussianPolicy(self.mean)

    def with_sigma(self, sigma):
        return GaussianPolicy(self.mean, sigma=sigma, train_noise=self.train_noise)


def linear_policy(K, b=None, sigma=None, train_noise=False):
    return GaussianPolicy(LinearMean(K, b), sigma=sigma, train_noise=train_noise)


# Initial gains listed with the benchmark experiments.
# Entries as tabulated for the pendulum experiment, negated: with u = -K s the
# tabulated values only stabilize when applied as u = +K_tab s, which also
# gives the reference action [-0.0171, -0.1846] at s0 = [-0.2, 0.2, 0, 0].
PENDULUM_K0 = -np.array([[-20.0, -20.0854, -21.4826, -10.0516],
                         [-18.22, -19.143, -9.2905, -6.6695]])
QUADROTOR_K0 = np.array([[-2.2361, -3.3404, 2.2361, 2.69, 13.5092, 2.7752],
                         [2.2361, 3.3404, 2.2361, 2.69, -13.5092, -2.7752]])
QUADROTOR_B0 = np.array([4.905, 4.905])


def save_checkpoint(policy: GaussianPolicy, path):
    """Write ``kind n m h sigma`` then the mean-map parameters.

    sigma is written as 0 for deterministic policies; the linear bias flag is
    encoded in the kind (``linear`` or ``linear_nobias``).
    """
    mean = policy.mean
    kind = mean.kind
    if kind == "linear" and mean.b is None:
        kind = "linear_nobias"
    sigma = 0.0 if policy.sigma is None else policy.sigma
    header = f"{kind} {mean.n} {mean.m} {mean.hidden} {sigma!r}"
    body = " ".join(repr(float(x)) for x in mean.flat())
    Path(path).write_text(header + "\n" + body + "\n")


def load_checkpoint(path) -> GaussianPolicy:
    lines = Path(path).read_text().split("\n", 1)
    kind, n, m, h, sigma = lines[0].split()
    n, m, h, sigma = int(n), int(m), int(h), float(sigma)
    v = np.array([float(x) for x in lines[1].split()]) if len(lines) > 1 else np.zeros(0)
    if kind in ("linear", "linear_nobias"):
        bias = kind == "linear"
        want = m * n + (m if bias else 0)
        if v.size != want:
            raise ValueError(f"checkpoint holds {v.size} values, expected {want}")
        mean = LinearMean(v[:m * n].reshape(m, n), v[m * n:].copy() if bias else None)
    elif kind == "mlp":
        want = h * n + m * h
        if v.size != want:
            raise ValueError(f"checkpoint holds {v.size} values, expected {want}")
        mean = MlpMean(v[:h * n].reshape(h, n), v[h * n:].reshape(m, h))
    else:
        raise ValueError(f"unknown policy kind {kind!r}")
    return GaussianPolicy(mean, sigma=sigma if sigma > 0 else None)
