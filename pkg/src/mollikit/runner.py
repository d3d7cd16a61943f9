"""Configuration parsing, seed handling and the command-line experiments.

A run is described by ``key=value`` lines (``#`` starts a comment) and/or
``--key value`` flags; flags win.  Every command writes CSV files plus a
``manifest.txt`` listing the fully resolved configuration into ``out``.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import heatlab, probe, riccati, svg
from .objective import RolloutConfig, q_values, simulate_batch
from .pgrad import PgConfig, rollout_rng, train
from .policy import (GaussianPolicy, LinearMean, MlpMean, PENDULUM_K0, QUADROTOR_B0,
                     QUADROTOR_K0, linear_policy, load_checkpoint, save_checkpoint)
from .sysdyn import SYSTEMS, double_pendulum, planar_quadrotor

COMMANDS = ("simulate", "train", "scan", "qscan", "mollify", "heat", "backward",
            "uncertainty", "mle", "holder", "lqr", "sweep")
POLICY_PRESETS = ("k0", "lqr", "mlp", "zero")


class ConfigError(ValueError):
    pass


def parse_seeds(text):
    """``"1..5"`` (inclusive range), ``"1,2,3"`` or a single integer."""
    text = str(text).strip()
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _int_or_none(text):
    return None if str(text).strip().lower() in ("", "none") else int(text)


@dataclass(frozen=True)
class ExperimentConfig:
    command: str = "train"
    system: str = "double_pendulum"
    origin: str = "upright"
    policy: str | None = None          # k0 | lqr | mlp | zero | checkpoint path
    hidden: int = 16
    batch: int | None = None
    epochs: int | None = None
    step: float | None = None
    sigma: float = 0.1
    sigmas: tuple = (0.005, 0.05, 0.5, 5.0)
    seeds: tuple = (1, 2, 3, 4, 5)
    baseline: str = "batch_mean"
    return_to_go: bool = False
    horizon: int = 1000
    gamma: float = 0.99
    method: str = "rk4"
    out: str = "runs"
    svg: bool = False
    # scan, qscan, mollify
    direction: str | None = None       # asym | random | comma list of coordinates
    span: float | None = None
    points: int = 101
    dims: int = 1
    sigma2s: tuple = (0.01, 0.04, 0.25)
    samples: int = 100_000
    probes: int = 20
    grid: int = 8192
    # heat, backward, uncertainty, holder fixtures
    field: str = "weierstrass"
    alpha: float = 0.5
    n: int = 1024
    times: int = 64
    t_max: float = 1.0
    t: float = 0.25
    noise_mode: int = 8
    eps: float = 1e-6
    k_max: int | None = None
    trials: int = 10
    # mle, holder
    steps: int = 5000
    delta0: tuple = (1e-9, 1e-7)
    renorm_every: int = 10
    h0: float = 0.1
    levels: int = 12
    target: str = "weierstrass"

    def resolved(self) -> "ExperimentConfig":
        """Fill the system- and command-dependent defaults."""
        sweep = self.command == "sweep"
        quad = self.system == "quadrotor"
        policy = self.policy
        if policy is None:
            if sweep:
                policy = "mlp"
            elif self.command == "mle":
                policy = "lqr" if quad else "zero"
            else:
                policy = "k0"
        direction = self.direction
        if direction is None:
            direction = {"scan": "asym" if quad else "random"}.get(self.command, "0")
        span = self.span
        if span is None:
            span = 1.0 if self.command in ("mollify",) and not quad else 0.5
        return replace(
            self, policy=policy, direction=direction, span=span,
            batch=self.batch if self.batch is not None else (32 if sweep else 16),
            epochs=self.epochs if self.epochs is not None else (100 if sweep else 50),
            step=self.step if self.step is not None else (0.001 if quad and not sweep else 1.0),
            k_max=self.k_max if self.k_max is not None else self.n // 2)

    def validate(self):
        """Raise ``(key, message)`` pairs for the first violated constraint."""
        checks = [
            ("command", self.command in COMMANDS, f"command must be one of {', '.join(COMMANDS)}"),
            ("system", self.system in SYSTEMS, f"system must be one of {', '.join(SYSTEMS)}"),
            ("origin", self.origin in ("upright", "hanging"), "origin must be upright or hanging"),
            ("gamma", 0 < self.gamma < 1, "gamma must lie in (0,1)"),
            ("horizon", self.horizon >= 1, "horizon must be at least 1"),
            ("batch", self.batch is None or self.batch >= 1, "batch must be at least 1"),
            ("epochs", self.epochs is None or self.epochs >= 0, "epochs must be non-negative"),
            ("step", self.step is None or self.step >= 0, "step must be non-negative"),
            ("sigma", self.sigma > 0, "sigma must be positive"),
            ("sigmas", len(self.sigmas) > 0 and min(self.sigmas) > 0, "sigmas must be positive"),
            ("seeds", len(self.seeds) > 0, "seeds must not be empty"),
            ("seeds", all(s >= 0 for s in self.seeds), "seeds must be non-negative"),
            ("baseline", self.baseline in ("batch_mean", "none"), "baseline must be batch_mean or none"),
            ("method", self.method in ("rk4", "euler"), "method must be rk4 or euler"),
            ("hidden", self.hidden >= 1, "hidden must be at least 1"),
            ("points", self.points >= 2, "points must be at least 2"),
            ("dims", self.dims in (1, 2), "dims must be 1 or 2"),
            ("span", self.span is None or self.span > 0, "span must be positive"),
            ("sigma2s", len(self.sigma2s) > 0 and min(self.sigma2s) > 0, "sigma2s must be positive"),
            ("samples", self.samples >= 2, "samples must be at least 2"),
            ("probes", self.probes >= 1, "probes must be at least 1"),
            ("grid", _pow2(self.grid) and self.grid >= 8, "grid must be a power of two >= 8"),
            ("field", self.field in FIELDS, f"field must be one of {', '.join(FIELDS)}"),
            ("n", _pow2(self.n) and self.n >= 8, "n must be a power of two >= 8"),
            ("times", self.times >= 2, "times must be at least 2"),
            ("t_max", self.t_max > 0, "t_max must be positive"),
            ("t", self.t > 0, "t must be positive"),
            ("noise_mode", 0 < self.noise_mode <= self.n // 2, "noise_mode must lie in 1..n/2"),
            ("eps", self.eps > 0, "eps must be positive"),
            ("k_max", self.k_max is None or 0 <= self.k_max, "k_max must be non-negative"),
            ("trials", self.trials >= 1, "trials must be at least 1"),
            ("delta0", len(self.delta0) > 0 and all(1e-9 <= d <= 1e-5 for d in self.delta0),
             "delta0 must lie in [1e-9, 1e-5]"),
            ("renorm_every", self.renorm_every >= 1, "renorm_every must be at least 1"),
            ("steps", self.steps >= 10 * self.renorm_every, "steps must be at least 10 * renorm_every"),
            ("levels", self.levels >= 6, "levels must be at least 6"),
            ("h0", self.h0 > 0, "h0 must be positive"),
            ("target", self.target in ("weierstrass", "policy"), "target must be weierstrass or policy"),
        ]
        for key, ok, msg in checks:
            if not ok:
                yield key, msg
        if self.policy is not None and self.policy not in POLICY_PRESETS \
                and not Path(self.policy).is_file():
            yield "policy", f"policy checkpoint {self.policy!r} does not exist"


def _pow2(v):
    return v > 0 and v & (v - 1) == 0


CONVERTERS = {
    "sigmas": lambda t: tuple(_floats(t)), "sigma2s": lambda t: tuple(_floats(t)),
    "delta0": lambda t: tuple(_floats(t)), "seeds": lambda t: tuple(parse_seeds(t)),
    "return_to_go": _bool, "svg": _bool, "batch": _int_or_none, "epochs": _int_or_none,
    "k_max": _int_or_none,
}
_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(key, text):
    if key in CONVERTERS:
        return CONVERTERS[key](text)
    kind = _TYPES[key]
    if kind in ("int",):
        return int(text)
    if kind in ("float", "float | None"):
        return float(text)
    if kind == "int | None":
        return _int_or_none(text)
    return str(text).strip()


def read_config_file(path):
    """``{key: (raw value, line number)}`` from a key=value file."""
    items = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            key, value = (p.strip() for p in line.split("=", 1))
            items[key.replace("-", "_")] = (value, f"line {lineno}")
    return items


def parse_config(path=None, overrides=None) -> ExperimentConfig:
    """Build a validated config from an optional file plus overrides.

    ``overrides`` maps keys to raw strings (as typed on the command line).
    Errors name the offending key and where it came from.
    """
    raw = read_config_file(path) if path is not None else {}
    for key, value in (overrides or {}).items():
        raw[key.replace("-", "_")] = (value, f"flag --{key.replace('_', '-')}")
    values = {}
    for key, (text, where) in raw.items():
        if key not in _TYPES:
            raise ConfigError(f"{where}: unknown key {key!r}")
        try:
            values[key] = _convert(key, text)
        except ValueError as exc:
            raise ConfigError(f"{where}: {key}: cannot parse {text!r} ({exc})") from None
    cfg = ExperimentConfig(**values)
    for key, msg in cfg.validate():
        where = raw[key][1] if key in raw else "default"
        raise ConfigError(f"{where}: {key}: {msg}")
    return cfg.resolved()


# ---------------------------------------------------------------- helpers

def make_spec(cfg):
    if cfg.system == "quadrotor":
        return planar_quadrotor()
    return double_pendulum(origin=cfg.origin)


def rollout_config(cfg, **kw):
    return RolloutConfig(horizon=cfg.horizon, gamma=cfg.gamma, method=cfg.method, **kw)


def pg_config(cfg, seed, sigma=None):
    return PgConfig(batch=cfg.batch, epochs=cfg.epochs, step=cfg.step,
                    sigma=cfg.sigma if sigma is None else sigma, seed=seed,
                    baseline=cfg.baseline, return_to_go=cfg.return_to_go)


def initial_policy(cfg, spec, seed=0) -> GaussianPolicy:
    """Deterministic starting policy named by ``cfg.policy``."""
    quad = spec.kind == "quadrotor"
    if cfg.policy == "k0":
        return linear_policy(QUADROTOR_K0, QUADROTOR_B0) if quad else linear_policy(PENDULUM_K0)
    if cfg.policy == "lqr":
        K, b, _, _ = riccati.lqr_gain(spec, gamma=cfg.gamma)
        return linear_policy(K, b if quad else None)
    if cfg.policy == "zero":
        return linear_policy(np.zeros((spec.m, spec.n)), QUADROTOR_B0 if quad else None)
    if cfg.policy == "mlp":
        return GaussianPolicy(MlpMean.init(spec.n, spec.m, cfg.hidden, rng=seed))
    return load_checkpoint(cfg.policy).deterministic_copy()


def workers(jobs):
    """Worker count: MOLLIKIT_THREADS (default 1), capped by jobs and CPUs."""
    try:
        cap = int(os.environ.get("MOLLIKIT_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, jobs, os.cpu_count() or 1))


def _map(fn, items):
    items = list(items)
    nw = workers(len(items))
    if nw == 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(nw) as ex:
        return list(ex.map(fn, items))      # results stay in item order


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])


def write_manifest(cfg, out: Path, files):
    lines = [f"# written {datetime.now(timezone.utc).isoformat(timespec='seconds')}"]
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(repr(x) for x in v)
        lines.append(f"{f.name}={v}")
    lines.append("threads=" + str(workers(len(cfg.seeds))))
    lines += [f"output={name}" for name in files]
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg, out):
    spec = make_spec(cfg)
    rc = rollout_config(cfg)
    files = []
    for seed in cfg.seeds:
        pol = initial_policy(cfg, spec, seed)
        tr = simulate_batch(spec, pol, rc).trajectory(0, rc.gamma)
        name = f"trajectory_seed{seed}.csv"
        tr.to_csv(out / name)
        files.append(name)
        print(f"seed {seed}: J = {tr.return_:.6f}  |s_H|_inf = {np.abs(tr.states[-1]).max():.3g}")
        if cfg.svg:
            k = np.arange(len(tr))
            svg.line_plot(out / f"trajectory_seed{seed}.svg",
                          [(k, tr.states[:, i], f"s{i + 1}") for i in range(spec.n)],
                          f"{cfg.system} rollout", "step", "state")
    return files


def _train_job(args):
    cfg, seed, sigma = args
    spec = make_spec(cfg)
    pol = initial_policy(cfg, spec, seed).with_sigma(sigma)
    return train(spec, pol, rollout_config(cfg), pg_config(cfg, seed, sigma))


def _curves_svg(path, recs, title):
    svg.line_plot(path, [(np.arange(len(r)), r.j_det, f"seed {r.seed}") for r in recs],
                  title, "epoch", "J(theta_k)")


def cmd_train(cfg, out):
    recs = _map(_train_job, [(cfg, s, cfg.sigma) for s in cfg.seeds])
    files = []
    for rec in recs:
        name = f"train_seed{rec.seed}.csv"
        rec.to_csv(out / name)
        save_checkpoint(rec.final_policy, out / f"policy_seed{rec.seed}.txt")
        files += [name, f"policy_seed{rec.seed}.txt"]
        print(f"seed {rec.seed}: J0 = {rec.j_det[0]:.4f}  J_E = {rec.j_det[-1]:.4f}")
    if cfg.svg:
        _curves_svg(out / "train.svg", recs, f"{cfg.system}, sigma={cfg.sigma}")
    return files


def sweep_summary(recs):
    """Rows (sigma, seed, std of J over epochs, J_0, J_E)."""
    return [(r.sigma, r.seed, float(np.std(r.j_det)), r.j_det[0], r.j_det[-1]) for r in recs]


def cmd_sweep(cfg, out):
    jobs = [(cfg, seed, sig) for sig in cfg.sigmas for seed in cfg.seeds]
    recs = _map(_train_job, jobs)
    files = []
    for rec in recs:
        name = f"sweep_sigma{rec.sigma!r}_seed{rec.seed}.csv"
        rec.to_csv(out / name)
        files.append(name)
    rows = sweep_summary(recs)
    _write_rows(out / "sweep_summary.csv", ["sigma", "seed", "J_std", "J_first", "J_last"], rows)
    files.append("sweep_summary.csv")
    for seed in cfg.seeds:
        stds = {r[0]: r[2] for r in rows if r[1] == seed}
        best = min(stds, key=stds.get)
        print(f"seed {seed}: std of J by sigma "
              + ", ".join(f"{s:g}: {v:.4g}" for s, v in stds.items()) + f"  -> min at {best:g}")
    if cfg.svg:
        for sig in cfg.sigmas:
            _curves_svg(out / f"sweep_sigma{sig!r}.svg", [r for r in recs if r.sigma == sig],
                        f"sweep sigma={sig:g}")
    return files


def scan_directions(cfg, pol, seed):
    """Unit directions in the policy's parameter space."""
    P = pol.size
    mean = pol.mean
    if cfg.direction == "asym":
        if not isinstance(mean, LinearMean) or mean.b is None or mean.m != 2:
            raise ValueError("the asym direction needs a two-input linear policy with bias")
        k = mean.K.size
        d = np.zeros((1, P))
        d[0, k], d[0, k + 1] = 1.0, -1.0
        d /= np.sqrt(2.0)
        if cfg.dims == 2:
            extra = probe.random_directions(P, 1, seed)[0]
            extra -= (extra @ d[0]) * d[0]
            d = np.vstack([d, extra / np.linalg.norm(extra)])
        return d
    if cfg.direction == "random":
        return probe.random_directions(P, cfg.dims, seed)
    idx = [int(i) for i in cfg.direction.split(",")]
    if cfg.dims == 2 and len(idx) != 2:
        raise ValueError("a 2-D scan needs two coordinate indices")
    return np.array([probe.unit_direction(P, i) for i in idx[:cfg.dims]])


def _offsets(cfg):
    return np.linspace(-cfg.span, cfg.span, cfg.points)


def _grid_outputs(cfg, out, grid, stem, title):
    grid.to_csv(out / f"{stem}.csv")
    if cfg.svg:
        if grid.ndim == 1:
            svg.line_plot(out / f"{stem}.svg", [(grid.offsets[0], grid.values, "")],
                          title, "offset", "value")
        else:
            a, b = grid.offsets
            svg.heatmap(out / f"{stem}.svg", grid.values.T, (a[0], a[-1]), (b[0], b[-1]),
                        title, "offset 1", "offset 2")
    return [f"{stem}.csv"]


def cmd_scan(cfg, out):
    spec = make_spec(cfg)
    rc = rollout_config(cfg)
    seed = cfg.seeds[0]
    pol = initial_policy(cfg, spec, seed)
    dirs = scan_directions(cfg, pol, seed)
    offs = _offsets(cfg)

    def J(theta):
        return float(simulate_batch(spec, pol.with_flat(theta), rc).returns[0])

    grid = probe.scan(J, pol.flat(), dirs, offs, offs if cfg.dims == 2 else None)
    i0 = int(np.argmax(grid.values.reshape(-1)))
    print(f"max J = {grid.values.max():.6f} at grid index {i0}")
    return _grid_outputs(cfg, out, grid, "scan", f"J around theta0 ({cfg.direction})")


def q_slice_setup(cfg):
    spec = make_spec(cfg)
    rc = rollout_config(cfg)
    pol = initial_policy(cfg, spec, cfg.seeds[0])
    s0 = rc.initial_state(spec)
    return spec, rc, pol, s0, pol.mean_action(s0)


def action_directions(cfg, m):
    """Unit directions in action space for the Q-value probes."""
    if cfg.direction == "asym":
        d = np.zeros((1, m))
        d[0, :2] = [1.0, -1.0]
        d /= np.sqrt(2.0)
        if cfg.dims == 2:
            d = np.vstack([d, np.abs(d[0])])
        return d
    if cfg.direction == "random":
        return probe.random_directions(m, cfg.dims, cfg.seeds[0])
    idx = [int(i) for i in cfg.direction.split(",")]
    if cfg.dims == 2 and len(idx) < 2:
        idx = [0, 1]
    return np.array([probe.unit_direction(m, i) for i in idx[:cfg.dims]])


def cmd_qscan(cfg, out):
    spec, rc, pol, s0, mu = q_slice_setup(cfg)
    dirs = action_directions(cfg, spec.m)
    offs = _offsets(cfg)
    if cfg.dims == 1:
        acts = mu + offs[:, None] * dirs[0]
        vals = q_values(spec, pol, s0, acts, rc)
        grid = probe.ScanGrid(mu, dirs, (offs,), vals)
    else:
        A, B = np.meshgrid(offs, offs, indexing="ij")
        acts = mu + A.reshape(-1, 1) * dirs[0] + B.reshape(-1, 1) * dirs[1]
        vals = q_values(spec, pol, s0, acts, rc).reshape(len(offs), len(offs))
        grid = probe.ScanGrid(mu, dirs, (offs, offs), vals)
    return _grid_outputs(cfg, out, grid, "qscan", "Q(s0, a) around the mean action")


def q_slice_table(cfg):
    """Tabulated 1-D Q-slice c -> Q(s0, mu + c d) on the periodic grid over
    [-4 span, 4 span), with d the first of the configured action directions."""
    spec, rc, pol, s0, mu = q_slice_setup(cfg)
    d = action_directions(replace(cfg, dims=1), spec.m)[0]
    L = 4 * cfg.span
    x = -L + 2 * L * np.arange(cfg.grid) / cfg.grid
    q = q_values(spec, pol, s0, mu + x[:, None] * d, rc)
    return heatlab.Field1D(q, L)


def mollify_compare(table: heatlab.Field1D, sigma2s, probes, samples, seed):
    """Monte Carlo mollification of the tabulated slice against the spectral
    heat solution at t = sigma^2.  Rows: sigma2, mu, mc, se, spectral, z."""
    x, q = table.x, table.samples

    def f(c):
        return np.interp(c, x, q)

    rows = []
    for i, s2 in enumerate(sigma2s):
        spectral = heatlab.heat_forward(table, s2).interpolate(probes)
        for j, p in enumerate(probes):
            rng = rollout_rng(seed, i, j)
            m, se = heatlab.mollify_mc(f, p, np.sqrt(s2), samples, rng)
            z = (m - spectral[j]) / se if se > 0 else 0.0
            rows.append((s2, float(p), m, se, float(spectral[j]), z))
    return rows


def cmd_mollify(cfg, out):
    table = q_slice_table(cfg)
    _write_rows(out / "qslice.csv", ["c", "Q"], zip(table.x, table.samples))
    probes = np.linspace(-cfg.span, cfg.span, cfg.probes)
    rows = mollify_compare(table, cfg.sigma2s, probes, cfg.samples, cfg.seeds[0])
    _write_rows(out / "mollify.csv", ["sigma2", "mu", "mc", "se", "spectral", "z"], rows)
    worst = max(abs(r[-1]) for r in rows)
    print(f"max |MC - spectral| / SE over {len(rows)} probes: {worst:.3f}")
    if cfg.svg:
        series = []
        for s2 in cfg.sigma2s:
            rs = [r for r in rows if r[0] == s2]
            series += [([r[1] for r in rs], [r[2] for r in rs], f"MC t={s2:g}"),
                       ([r[1] for r in rs], [r[4] for r in rs], f"heat t={s2:g}")]
        svg.line_plot(out / "mollify.svg", series, "mollified Q-slice", "mu", "value")
    return ["qslice.csv", "mollify.csv"]


def _step_field(x):
    return np.where(np.abs(x) < np.pi / 2, 1.0, 0.0)


FIELDS = {
    "weierstrass": None,
    "square": _step_field,
    "gaussian": lambda x: np.exp(-2 * x * x),
    "sine": np.sin,
}


def make_field(cfg) -> heatlab.Field1D:
    if cfg.field == "weierstrass":
        return heatlab.Field1D.sample(lambda x: heatlab.weierstrass(x, cfg.alpha), cfg.n)
    return heatlab.Field1D.sample(FIELDS[cfg.field], cfg.n)


def cmd_heat(cfg, out):
    g = make_field(cfg)
    times = np.linspace(0.0, cfg.t_max, cfg.times)
    h = heatlab.heat_field(g, times)
    h.to_csv(out / "heat.csv")
    rep = heatlab.max_principle_probe(h)
    _write_rows(out / "maxprinciple.csv", ["passed", "boundary_gap", "worst_violation"],
                [(int(rep.passed), rep.boundary_gap, rep.worst_violation)])
    print(f"maximum principle {'holds' if rep else 'VIOLATED'}: "
          f"boundary gap {rep.boundary_gap:.3g}, worst local excess {rep.worst_violation:.3g}")
    if cfg.svg:
        stride = max(1, g.N // 256)
        svg.heatmap(out / "heat.svg", h.values[:, ::stride], (-g.L, g.L), (0, cfg.t_max),
                    f"heat flow of {cfg.field}", "x", "t")
    return ["heat.csv", "maxprinciple.csv"]


def injected_amplification(g_T: heatlab.Field1D, t, k, eps):
    """Ratio by which a mode-k perturbation of size eps grows when the
    terminal data is run backwards over time t."""
    x = g_T.x
    noisy = g_T.with_samples(g_T.samples + eps * np.sin(np.pi * k * x / g_T.L))
    clean, _ = heatlab.backward_attempt(g_T, t, k)
    dirty, _ = heatlab.backward_attempt(noisy, t, k)
    diff = dirty.samples - clean.samples
    amp = 2.0 * np.abs(np.fft.rfft(diff)[k]) / g_T.N
    return amp / eps


def first_overflow(g_T: heatlab.Field1D, t):
    """Smallest cutoff at which the backward solve raises, or None."""
    try:
        heatlab.backward_attempt(g_T, t, g_T.N // 2)
    except heatlab.BackwardOverflow as exc:
        return exc.k
    return None


def cmd_backward(cfg, out):
    g_T = heatlab.heat_forward(make_field(cfg), cfg.t)
    ratio = injected_amplification(g_T, cfg.t, cfg.noise_mode, cfg.eps)
    exact = np.exp((np.pi * cfg.noise_mode / g_T.L) ** 2 * cfg.t / 2)
    k_over = first_overflow(g_T, cfg.t)
    kmax = cfg.k_max if k_over is None else min(cfg.k_max, k_over - 1)
    _, rep = heatlab.backward_attempt(g_T, cfg.t, kmax)
    rep.to_csv(out / "amplification.csv")
    _write_rows(out / "injected.csv",
                ["k", "eps", "t", "measured_factor", "exact_factor", "overflow_k"],
                [(cfg.noise_mode, cfg.eps, cfg.t, ratio, exact,
                  -1 if k_over is None else k_over)])
    print(f"mode {cfg.noise_mode} perturbation amplified by {ratio:.9g} "
          f"(exp(omega^2 t/2) = {exact:.9g})")
    if k_over is not None:
        print(f"backward solve overflows at mode k = {k_over}")
    if cfg.svg:
        svg.line_plot(out / "amplification.svg", [(rep.k, np.log10(rep.factor), "")],
                      "backward amplification", "k", "log10 factor")
    return ["amplification.csv", "injected.csv"]


def cmd_uncertainty(cfg, out):
    rows = []
    for name, phi in [("gaussian", heatlab.gaussian_test_function())] + [
            (f"random{i}", heatlab.random_test_function(rollout_rng(cfg.seeds[0], 0, i)))
            for i in range(cfg.trials)]:
        vx, vxi, prod = heatlab.uncertainty_product(phi)
        rows.append((name, vx, vxi, prod, heatlab.GAUSSIAN_BOUND))
    _write_rows(out / "uncertainty.csv", ["function", "var_x", "var_xi", "product", "bound"], rows)
    print(f"gaussian product / bound - 1 = {rows[0][3] / heatlab.GAUSSIAN_BOUND - 1:.3g}; "
          f"min ratio over random functions = "
          f"{min(r[3] for r in rows[1:]) / heatlab.GAUSSIAN_BOUND:.4f}")
    return ["uncertainty.csv"]


def cmd_mle(cfg, out):
    spec = make_spec(cfg)
    rc = rollout_config(cfg)
    pol = initial_policy(cfg, spec, cfg.seeds[0])
    s0 = rc.initial_state(spec)
    rows = []
    for d0 in cfg.delta0:
        res = probe.policy_mle(spec, pol, s0, cfg.steps, d0, cfg.renorm_every,
                               method=cfg.method, rng=cfg.seeds[0])
        rows.append((cfg.system, res.lam, d0, cfg.steps))
        print(f"delta0 = {d0:g}: lambda = {res.lam:.6g} per second "
              f"({res.per_step:.6g} per step)")
    _write_rows(out / "mle.csv", ["system", "lambda", "delta0", "steps"], rows)
    return ["mle.csv"]


def cmd_holder(cfg, out):
    offs = probe.dyadic_offsets(cfg.h0, cfg.levels)
    files = []
    if cfg.target == "weierstrass":
        grid = probe.scan(lambda th: float(heatlab.weierstrass(th[0], cfg.alpha)),
                          np.zeros(1), np.ones((1, 1)), offs)
        ref, pred = cfg.alpha, float("nan")
    else:
        spec = make_spec(cfg)
        rc = rollout_config(cfg)
        pol = initial_policy(cfg, spec, cfg.seeds[0])
        d = probe.random_directions(pol.size, 1, cfg.seeds[0])
        grid = probe.scan(lambda th: float(simulate_batch(spec, pol.with_flat(th), rc).returns[0]),
                          pol.flat(), d, offs)
        mle = probe.policy_mle(spec, pol, rc.initial_state(spec), cfg.steps, cfg.delta0[0],
                               cfg.renorm_every, method=cfg.method)
        pred = probe.predicted_holder(mle.per_step, cfg.gamma)
        ref = pred
    alpha, resid = probe.holder_estimate(grid)
    grid.to_csv(out / "holder_scan.csv")
    _write_rows(out / "holder.csv", ["target", "alpha", "residual", "reference", "predicted"],
                [(cfg.target, alpha, resid, ref, pred)])
    files += ["holder_scan.csv", "holder.csv"]
    print(f"Holder slope {alpha:.4f} (rms residual {resid:.3g}); reference {ref:.4g}")
    if cfg.svg:
        h = grid.offsets[0]
        keep = h > 0
        f0 = grid.values[h == 0][0]
        svg.line_plot(out / "holder.svg",
                      [(np.log(h[keep]), np.log(np.abs(grid.values[keep] - f0) + 1e-300), "")],
                      "increments", "log h", "log |f(h) - f(0)|")
    return files


def cmd_lqr(cfg, out):
    spec = make_spec(cfg)
    K, b, model, P = riccati.lqr_gain(spec, gamma=cfg.gamma)
    quad = spec.kind == "quadrotor"
    pol = linear_policy(K, b if quad else None)
    save_checkpoint(pol, out / "lqr_policy.txt")
    Q, R = riccati.LQR_WEIGHTS[spec.kind]
    rho = riccati.spectral_radius(model.A - model.B @ K)
    res = riccati.dare_residual(P, model.A, model.B, Q, R, cfg.gamma)
    _write_rows(out / "lqr.csv", ["system", "gamma", "spectral_radius", "dare_residual"],
                [(cfg.system, cfg.gamma, rho, res)])
    print(f"closed-loop spectral radius {rho:.6f}, DARE residual {res:.3g}")
    return ["lqr_policy.txt", "lqr.csv"]


DISPATCH = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def run(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    files = DISPATCH[cfg.command](cfg, out)
    write_manifest(cfg, out, files)
    return 0


# ---------------------------------------------------------------- CLI

def build_parser():
    ap = argparse.ArgumentParser(prog="mollikit", description="Mollified policy-gradient experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key=value configuration file")
    for f in fields(ExperimentConfig):
        if f.name == "command":
            continue
        flag = "--" + f.name.replace("_", "-")
        if f.name in ("svg", "return_to_go"):
            ap.add_argument(flag, dest=f.name, action="store_const", const="true", default=None)
        else:
            ap.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper())
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if v is not None and k != "config"}
    try:
        cfg = parse_config(args.config, overrides)
        return run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
