"""Landscape scans, maximal Lyapunov exponents and Holder exponents."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .sysdyn import SystemSpec, diverged, integrate_step, saturate


@dataclass
class ScanGrid:
    """Values of ``eval`` at center + off1 * d1 (+ off2 * d2), filled row-major."""
    center: np.ndarray
    directions: np.ndarray
    offsets: tuple
    values: np.ndarray

    @property
    def ndim(self):
        return len(self.offsets)

    def to_csv(self, path):
        off1 = self.offsets[0]
        off2 = self.offsets[1] if self.ndim == 2 else np.zeros(1)
        vals = self.values.reshape(len(off1), len(off2))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "off1", "off2", "value"])
            for i, a in enumerate(off1):
                for j, b in enumerate(off2):
                    w.writerow([i, j, repr(float(a)), repr(float(b)), repr(float(vals[i, j]))])


def random_directions(dim, count=1, rng=None):
    """``count`` orthonormal directions drawn uniformly (rows)."""
    rng = np.random.default_rng(rng)
    G = rng.standard_normal((dim, count))
    Qm, Rm = np.linalg.qr(G)
    Qm = Qm * np.sign(np.diag(Rm))
    return Qm.T


def unit_direction(dim, index, weights=None):
    """Coordinate direction, or a named combination of coordinates."""
    d = np.zeros(dim)
    if weights is None:
        d[index] = 1.0
    else:
        for i, w in zip(index, weights):
            d[i] = w
    return d / np.linalg.norm(d)


def scan(eval_fn, center, directions, offsets, offsets2=None) -> ScanGrid:
    center = np.asarray(center, float)
    directions = np.atleast_2d(np.asarray(directions, float))
    offsets = np.asarray(offsets, float)
    if np.any(np.diff(offsets) < 0):
        raise ValueError("offsets must be sorted")
    if offsets2 is None:
        vals = np.array([eval_fn(center + o * directions[0]) for o in offsets], float)
        return ScanGrid(center, directions[:1], (offsets,), vals)
    if directions.shape[0] != 2:
        raise ValueError("a 2-D scan needs two directions")
    gram = directions @ directions.T
    if not np.allclose(gram, np.eye(2), atol=1e-10):
        raise ValueError("2-D scan directions must be orthonormal")
    offsets2 = np.asarray(offsets2, float)
    vals = np.array([[eval_fn(center + a * directions[0] + b * directions[1])
                      for b in offsets2] for a in offsets], float)
    return ScanGrid(center, directions, (offsets, offsets2), vals)


class LyapunovEscape(RuntimeError):
    pass


@dataclass
class MleResult:
    lam: float
    renorm_every: int
    delta0: float
    transient: int
    steps: int
    dt: float
    history: np.ndarray

    @property
    def per_step(self):
        return self.lam * self.dt


def mle_estimate(step, s0, steps, delta0=1e-7, renorm_every=10, dt=1.0,
                 transient=0.1, direction=None, rng=0) -> MleResult:
    """Benettin two-trajectory estimate of the maximal Lyapunov exponent.

    ``step`` maps a state to the next state.  Every ``renorm_every`` steps the
    separation d is measured, ln(d / delta0) accumulated (after the first
    ``transient`` fraction of the run) and the perturbed state pulled back
    to distance delta0 along the current separation.  Returns lambda per unit
    time, i.e. per step divided by ``dt``.
    """
    if not 1e-9 <= delta0 <= 1e-5:
        raise ValueError("delta0 must lie in [1e-9, 1e-5]")
    if steps < 10 * renorm_every:
        raise ValueError("need at least ten renormalization intervals")
    x = np.array(s0, float)
    if direction is None:
        direction = np.random.default_rng(rng).standard_normal(x.shape)
    direction = np.asarray(direction, float)
    y = x + delta0 * direction / np.linalg.norm(direction)
    skip = int(transient * steps)
    acc = 0.0
    elapsed = 0
    history = []
    for i in range(1, steps + 1):
        x = step(x)
        y = step(y)
        if i % renorm_every:
            continue
        if diverged(x) or diverged(y):
            raise LyapunovEscape("lambda undefined: escape")
        sep = y - x
        d = np.linalg.norm(sep)
        if d == 0:
            raise LyapunovEscape("perturbation collapsed to zero separation")
        if i > skip:
            acc += np.log(d / delta0)
            elapsed += renorm_every
            history.append(acc / (elapsed * dt))
        y = x + sep * (delta0 / d)
    if elapsed == 0:
        raise ValueError("no renormalization intervals after the transient")
    return MleResult(acc / (elapsed * dt), renorm_every, delta0, skip, steps, dt,
                     np.array(history))


def closed_loop_step(spec: SystemSpec, policy, method="rk4"):
    """State map of the deterministic, saturated closed loop."""
    def step(s):
        with np.errstate(all="ignore"):
            return integrate_step(spec, s, saturate(policy.mean_action(s), spec), method)
    return step


def policy_mle(spec, policy, s0, steps=5000, delta0=1e-7, renorm_every=10,
               method="rk4", **kw) -> MleResult:
    return mle_estimate(closed_loop_step(spec, policy, method), s0, steps, delta0,
                        renorm_every, dt=spec.dt, **kw)


def dyadic_offsets(h0, levels, both_sides=False):
    """0 together with h0 * 2^-j for j = 0..levels (and their negatives)."""
    h = h0 * 2.0 ** -np.arange(levels + 1)
    pts = np.concatenate([[0.0], h, -h]) if both_sides else np.concatenate([[0.0], h])
    return np.sort(pts)


def holder_estimate(grid: ScanGrid, min_scales=4):
    """Least-squares slope of log|f(c + h d) - f(c)| against log|h|.

    Returns (alpha, rms residual).  Offsets whose increment is exactly zero
    are dropped.
    """
    if grid.ndim != 1:
        raise ValueError("Holder estimate needs a 1-D scan")
    off = grid.offsets[0]
    vals = grid.values
    zero = np.nonzero(off == 0)[0]
    if zero.size != 1:
        raise ValueError("scan must contain the centre offset 0 exactly once")
    f0 = vals[zero[0]]
    mask = off != 0
    h = np.abs(off[mask])
    inc = np.abs(vals[mask] - f0)
    keep = inc > 0
    h, inc = h[keep], inc[keep]
    if np.unique(h).size < min_scales:
        raise ValueError(f"only {np.unique(h).size} usable scales; need {min_scales}")
    X = np.log(h)
    Y = np.log(inc)
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    return float(slope), float(np.sqrt(np.mean(resid ** 2)))


def predicted_holder(lam, gamma):
    """min(1, -ln gamma / lambda); 1 when lambda <= 0."""
    if lam <= 0:
        return 1.0
    return min(1.0, -np.log(gamma) / lam)
