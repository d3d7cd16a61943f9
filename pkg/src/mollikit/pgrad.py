"""Score-function (REINFORCE) gradient estimation and the epoch training loop."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .objective import RolloutConfig, simulate_batch
from .policy import GaussianPolicy
from .sysdyn import SystemSpec


@dataclass(frozen=True)
class PgConfig:
    batch: int = 16
    epochs: int = 50
    step: float = 1.0
    sigma: float = 0.1
    seed: int = 0
    baseline: str = "batch_mean"     # or "none"
    return_to_go: bool = False
    normalize: bool = True

    def __post_init__(self):
        if self.batch < 1:
            raise ValueError("batch must be at least 1")
        if self.step < 0:
            raise ValueError("step must be non-negative")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.baseline not in ("batch_mean", "none"):
            raise ValueError(f"unknown baseline {self.baseline!r}")


#: Smallest noise scale a trained sigma (or variance) may reach.
NOISE_FLOOR = 1e-6


def rollout_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    """Independent stream for one rollout, derived from (seed, epoch, index)."""
    return np.random.default_rng(np.random.SeedSequence([seed, epoch, index]))


def batch_noise(seed, epoch, batch, horizon, m):
    return np.stack([rollout_rng(seed, epoch, i).standard_normal((horizon, m))
                     for i in range(batch)])


@dataclass
class GradientEstimate:
    grad: np.ndarray
    returns: np.ndarray
    per_rollout: np.ndarray = field(repr=False)


def estimate_gradient(spec: SystemSpec, policy: GaussianPolicy, cfg: RolloutConfig,
                      pg: PgConfig, epoch: int = 0, noise=None) -> GradientEstimate:
    """(1/B) sum_b (G_b - baseline) * sum_k score(s_k^b, a_k^b).

    The score is taken at the unsaturated sampled action; saturation belongs
    to the plant.  With ``return_to_go`` each score is weighted by the
    discounted reward from its own step onward instead.
    """
    if policy.deterministic:
        raise ValueError("gradient estimation needs sigma > 0")
    if noise is None:
        noise = batch_noise(pg.seed, epoch, pg.batch, cfg.horizon, spec.m)
    res = simulate_batch(spec, policy, cfg, noise)
    return _from_batch(policy, res.states, res.raw, res.rewards, res.returns, cfg, pg)


def _from_batch(policy, states, raw, rewards, returns, cfg, pg) -> GradientEstimate:
    if returns.shape[0] == 0:
        raise ValueError("empty batch")
    scores = policy.score(states, raw)          # (B, H, P)
    if pg.return_to_go:
        disc = cfg.discounts()
        weights = np.cumsum((rewards * disc)[:, ::-1], 1)[:, ::-1]
        if pg.baseline == "batch_mean":
            weights = weights - weights.mean(0)
        per = np.einsum("bh,bhp->bp", weights, scores)
    else:
        weights = returns
        if pg.baseline == "batch_mean":
            weights = weights - weights.mean()
        per = weights[:, None] * scores.sum(1)
    return GradientEstimate(per.mean(0), returns, per)


def normalize(g, eps: float = 1e-12):
    g = np.asarray(g, float)
    norm = np.linalg.norm(g)
    if norm > eps:
        return g / norm
    return np.zeros_like(g)


@dataclass
class TrainRecord:
    """Per-epoch statistics; entry k describes theta_k (k = 0..E)."""
    seed: int
    sigma: float
    j_det: list = field(default_factory=list)
    j_stoch_mean: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    params: list = field(default_factory=list)
    final_policy: GaussianPolicy | None = None

    def __len__(self):
        return len(self.j_det)

    def rows(self):
        for k in range(len(self.j_det)):
            yield [k, self.seed, self.sigma, self.j_det[k],
                   self.j_stoch_mean[k], self.grad_norm[k]]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "seed", "sigma", "J_det", "J_stoch_mean", "grad_norm"])
            for row in self.rows():
                w.writerow(row[:2] + [repr(float(x)) for x in row[2:]])


def train(spec: SystemSpec, policy0: GaussianPolicy, cfg: RolloutConfig, pg: PgConfig,
          callback=None) -> TrainRecord:
    """E epochs of theta <- theta + step * normalize(gradient estimate).

    The record holds E+1 entries; the last epoch's stochastic statistics are
    measured with one extra batch so every entry is populated.
    """
    policy = policy0
    if policy.deterministic:
        policy = policy.with_sigma(pg.sigma)
    rec = TrainRecord(seed=pg.seed, sigma=float(policy.sigma if policy.sigma is not None else pg.sigma))
    for epoch in range(pg.epochs + 1):
        # row 0 carries zero noise, so it is the deterministic rollout of the
        # mean policy; rows 1..B are the sampled batch
        noise = batch_noise(pg.seed, epoch, pg.batch, cfg.horizon, spec.m)
        noise = np.concatenate([np.zeros((1,) + noise.shape[1:]), noise])
        res = simulate_batch(spec, policy, cfg, noise)
        est = _from_batch(policy, res.states[1:], res.raw[1:], res.rewards[1:],
                          res.returns[1:], cfg, pg)
        gnorm = float(np.linalg.norm(est.grad))
        rec.j_det.append(float(res.returns[0]))
        rec.j_stoch_mean.append(float(est.returns.mean()))
        rec.grad_norm.append(gnorm)
        rec.params.append(policy.flat())
        if callback is not None:
            callback(epoch, policy, rec)
        if epoch == pg.epochs:
            break
        direction = normalize(est.grad) if pg.normalize else est.grad
        if pg.step and np.any(direction):
            theta = policy.flat() + pg.step * direction
            if policy.train_noise:
                # keep the noise scale(s) strictly positive
                k = policy.mean.size
                theta[k:] = np.maximum(theta[k:], NOISE_FLOOR)
            policy = policy.with_flat(theta)
    rec.final_policy = policy
    return rec
