"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``AC<n> PASS|FAIL`` line (collected again in the
terminal summary) and asserts the criterion at its stated tolerance and
runtime budget.
"""

import time

import numpy as np
import pytest

from mollikit import heatlab, probe, riccati
from mollikit.objective import RolloutConfig, rollout, simulate_batch
from mollikit.pgrad import PgConfig, estimate_gradient, train
from mollikit.policy import (GaussianPolicy, LinearMean, MlpMean, PENDULUM_K0, QUADROTOR_B0,
                             QUADROTOR_K0, linear_policy)
from mollikit.runner import main, mollify_compare, parse_config, q_slice_table
from mollikit.sysdyn import SystemSpec, double_pendulum, planar_quadrotor

SEEDS = (1, 2, 3, 4, 5)


class Clock:
    def __init__(self, budget):
        self.budget = budget
        self.t0 = time.perf_counter()

    @property
    def elapsed(self):
        return time.perf_counter() - self.t0

    @property
    def ok(self):
        return self.elapsed < self.budget

    def __str__(self):
        return f"{self.elapsed:.1f}s/{self.budget:g}s"


def _quad_j(K, b):
    return rollout(planar_quadrotor(), linear_policy(K, b), RolloutConfig()).return_


def test_ac01_quadrotor_hover_value(ac_report):
    clock = Clock(1)
    tr = rollout(planar_quadrotor(), linear_policy(QUADROTOR_K0, QUADROTOR_B0), RolloutConfig())
    expect = -(2 * 4.905 ** 2 * 1e-4) * (1 - 0.99 ** 1000) / 0.01
    err = abs(tr.return_ - expect)
    drift = np.abs(tr.states).max()
    ok = err < 1e-6 and drift < 1e-9 and clock.ok
    assert ac_report(1, ok, f"J={tr.return_:.8f} (oracle {expect:.8f}, err {err:.1e}), "
                     f"max|s|={drift:.1e}, {clock}")


def test_ac02_quadrotor_spike_elimination(ac_report):
    clock = Clock(300)
    spec = planar_quadrotor()
    good = 0
    worst = []
    for seed in SEEDS:
        rec = train(spec, linear_policy(QUADROTOR_K0, QUADROTOR_B0, sigma=0.1), RolloutConfig(),
                    PgConfig(batch=16, epochs=50, step=0.001, sigma=0.1, seed=seed))
        j = np.array(rec.j_det)
        drop = j[0] - j[1:].max()          # smallest drop below J(theta_0)
        worst.append(drop)
        good += drop > 1
    ok = good >= 4 and clock.ok
    assert ac_report(2, ok, f"J(theta_k) < J(theta_0) - 1 for all k in {good}/5 seeds "
                     f"(min drops {np.round(worst, 2).tolist()}), {clock}")


def test_ac03_quadrotor_spike_profile(ac_report):
    clock = Clock(60)
    theta0 = np.concatenate([QUADROTOR_K0.ravel(), QUADROTOR_B0])
    d = probe.unit_direction(14, (12, 13), (1, -1))
    offsets = np.linspace(-0.5, 0.5, 101)
    g = probe.scan(lambda th: _quad_j(th[:12].reshape(2, 6), th[12:]), theta0, d, offsets)
    i0 = int(np.argmin(np.abs(offsets)))
    near = np.abs(offsets) <= 0.1 + 1e-12
    fall = g.values[i0] - g.values[near].min()
    ok = int(np.argmax(g.values)) == i0 and fall >= 10 and clock.ok
    assert ac_report(3, ok, f"max at offset {offsets[np.argmax(g.values)]:+.2f}, "
                     f"fall within |offset|<=0.1 is {fall:.1f}, {clock}")


def test_ac04_pendulum_stabilization(ac_report):
    clock = Clock(600)
    spec = double_pendulum()
    cfg = RolloutConfig()
    settled = improved = 0
    finals = []
    for seed in SEEDS:
        rec = train(spec, linear_policy(PENDULUM_K0, sigma=0.1), cfg,
                    PgConfig(batch=16, epochs=50, step=1.0, sigma=0.1, seed=seed))
        tr = rollout(spec, rec.final_policy.deterministic_copy(), cfg)
        s_h = np.abs(tr.states[-1]).max()
        finals.append(s_h)
        settled += s_h < 0.1
        improved += rec.j_det[-1] > rec.j_det[0]
    ok = settled >= 3 and improved == 5 and clock.ok
    assert ac_report(4, ok, f"|s_H|<0.1 in {settled}/5, J(theta_50)>J(theta_0) in {improved}/5 "
                     f"(max |s_H| {max(finals):.1e}), {clock}")


def test_ac05_variance_sweep_shape(ac_report):
    clock = Clock(1800)
    spec = double_pendulum()
    sigmas = (0.005, 0.05, 0.5, 5.0)
    interior = 0
    picks = []
    for seed in SEEDS:
        stds = []
        for sig in sigmas:
            pol = GaussianPolicy(MlpMean.init(4, 2, 16, rng=seed), sigma=sig)
            rec = train(spec, pol, RolloutConfig(),
                        PgConfig(batch=32, epochs=100, step=1.0, sigma=sig, seed=seed))
            stds.append(np.std(rec.j_det))
        best = sigmas[int(np.argmin(stds))]
        picks.append(best)
        interior += best in (0.05, 0.5)
    ok = interior >= 3 and clock.ok
    assert ac_report(5, ok, f"std of J(theta_k) minimized at interior sigma in {interior}/5 "
                     f"seeds (argmin per seed {picks}), {clock}")


def test_ac06_mollification_is_heat_flow(ac_report):
    clock = Clock(120)
    cfg = parse_config(None, {"command": "mollify", "system": "quadrotor"})
    table = q_slice_table(cfg)
    probes = np.linspace(-cfg.span, cfg.span, 20)
    rows = mollify_compare(table, (0.01, 0.04, 0.25), probes, 100_000, seed=1)
    z = np.array([r[-1] for r in rows])
    ok = len(rows) == 60 and np.all(np.abs(z) < 3) and clock.ok
    assert ac_report(6, ok, f"max |MC - spectral|/SE = {np.abs(z).max():.2f} over {len(rows)} "
                     f"(sigma^2, mu) pairs, {clock}")


def test_ac07_fourier_decay(ac_report):
    clock = Clock(5)
    rng = np.random.default_rng(0)
    c = np.zeros(257, complex)
    c[:33] = rng.normal(size=33) + 1j * rng.normal(size=33)
    c[0] = c[0].real
    g = heatlab.Field1D(np.fft.irfft(c, n=512))
    decay_err = 0.0
    for t in (0.01, 0.1, 0.5):
        ratio = heatlab.mode_decay(g, t)[:33]
        decay_err = max(decay_err, np.abs(ratio - np.exp(-g.omega[:33] ** 2 * t / 2)).max())
    smooth = heatlab.Field1D.sample(lambda x: np.exp(np.sin(x)) * np.cos(2 * x), 1024)
    dvs = max(np.abs(heatlab.heat_forward(smooth, t, "direct").samples
                     - heatlab.heat_forward(smooth, t).samples).max() for t in (0.01, 0.1, 1.0))
    ok = decay_err < 1e-10 and dvs <= 1e-6 and clock.ok
    assert ac_report(7, ok, f"decay-law error {decay_err:.1e}, direct vs spectral {dvs:.1e}, "
                     f"{clock}")


def test_ac08_backward_ill_posed(ac_report):
    clock = Clock(5)
    eps, t = 1e-6, 0.25
    gT = heatlab.Field1D(np.zeros(1024))
    noisy = gT.with_samples(eps * np.sin(8 * gT.x))
    back, rep = heatlab.backward_attempt(noisy, t, k_max=8)
    coef = np.fft.rfft(back.samples)[8]
    amp = abs(coef) / (eps * gT.N / 2)
    rel = abs(amp / np.exp(8) - 1)
    _, full = heatlab.backward_attempt(gT, t, k_max=74)
    monotone = bool(np.all(np.diff(full.factor) > 0))
    try:
        heatlab.backward_attempt(gT, t)
        k_over = None
    except heatlab.BackwardOverflow as exc:
        k_over = exc.k
    ok = rel < 1e-6 and monotone and k_over is not None and k_over <= 120 and clock.ok
    assert ac_report(8, ok, f"mode-8 amplification {amp:.6f} (e^8 = {np.exp(8):.6f}, rel err "
                     f"{rel:.1e}), monotone={monotone}, overflow at k={k_over}, {clock}")


def test_ac09_uncertainty_principle(ac_report):
    clock = Clock(10)
    _, _, pg = heatlab.uncertainty_product(heatlab.gaussian_test_function())
    rel = abs(pg / heatlab.GAUSSIAN_BOUND - 1)
    others = [heatlab.uncertainty_product(heatlab.random_test_function(s))[2] for s in range(10)]
    low = min(others)
    ok = rel < 1e-6 and low >= heatlab.GAUSSIAN_BOUND - 1e-9 and clock.ok
    assert ac_report(9, ok, f"Gaussian product rel err {rel:.1e}; min over 10 non-Gaussians "
                     f"{low:.6f} >= {heatlab.GAUSSIAN_BOUND:.6f}, {clock}")


def test_ac10_gradient_correctness(ac_report):
    clock = Clock(60)
    a_star = np.array([0.3, -0.7])
    mu = np.array([1.0, 0.5])
    spec = SystemSpec("toy", 1, 2, 1.0, -1e9, 1e9, lambda s, u, p: np.zeros_like(s))
    cfg = RolloutConfig(horizon=1, s0=np.zeros(1),
                        reward=lambda s, a: -((a - a_star) ** 2).sum(-1))

    def pol(m, sigma=0.5, train_noise=False):
        return GaussianPolicy(LinearMean(np.zeros((2, 1)), m), sigma=sigma, train_noise=train_noise)

    B = 100_000
    g = estimate_gradient(spec, pol(mu), cfg, PgConfig(batch=B, seed=1)).grad[2:]
    analytic = -2 * (mu - a_star)
    noise = np.random.default_rng(2).standard_normal((B, 1, 2))
    h = 1e-4
    fd = np.array([(simulate_batch(spec, pol(mu + h * e), cfg, noise).returns.mean()
                    - simulate_batch(spec, pol(mu - h * e), cfg, noise).returns.mean()) / (2 * h)
                   for e in np.eye(2)])
    err_a = np.abs(g / analytic - 1).max()
    err_fd = np.abs(g / fd - 1).max()
    sigma = 0.4
    gs = estimate_gradient(spec, pol(mu, sigma, True), cfg, PgConfig(batch=B, seed=3)).grad[-1]
    d_s2 = gs / (2 * sigma)
    err_s = abs(d_s2 / -2.0 - 1)
    ok = err_a < 0.05 and err_fd < 0.05 and err_s < 0.1 and clock.ok
    assert ac_report(10, ok, f"rel err vs analytic {err_a:.3f}, vs finite differences "
                     f"{err_fd:.3f}; dF/dsigma^2 = {d_s2:.3f} (oracle -2), {clock}")


def test_ac11_maximum_principle(ac_report):
    clock = Clock(10)
    g = heatlab.Field1D.sample(heatlab.weierstrass, 1024)
    h = heatlab.heat_field(g, np.linspace(0, 1, 64))
    rep = heatlab.max_principle_probe(h)
    vals = h.values.copy()
    vals[30, 500] += 1.0
    neg = heatlab.max_principle_probe(heatlab.HeatField(g, h.times, vals))
    ok = rep.passed and rep.worst_violation < 1e-8 and not neg.passed and clock.ok
    assert ac_report(11, ok, f"Weierstrass field passes={rep.passed} (worst local excess "
                     f"{rep.worst_violation:.1e}, boundary gap {rep.boundary_gap:.1e}); "
                     f"bumped control passes={neg.passed}, {clock}")


def test_ac12_lyapunov_and_holder(ac_report):
    clock = Clock(300)
    dbl = probe.mle_estimate(lambda x: 2 * x, np.zeros(1), 200)
    e_dbl = abs(dbl.lam - np.log(2))

    quad = planar_quadrotor()
    K, b, model, _ = riccati.lqr_gain(quad)
    stable = probe.policy_mle(quad, linear_policy(K, b), np.zeros(6), steps=2000)
    oracle = np.log(riccati.spectral_radius(model.A - model.B @ K)) / quad.dt
    e_stab = abs(stable.lam / oracle - 1)

    pend = double_pendulum()
    free = linear_policy(np.zeros((2, 4)))
    s0 = np.array([-0.2, 0.2, 0.0, 0.0])
    lam_a = probe.policy_mle(pend, free, s0, 5000, delta0=1e-9).lam
    lam_b = probe.policy_mle(pend, free, s0, 5000, delta0=1e-7).lam
    e_delta = abs(lam_a - lam_b) / lam_b

    offs = probe.dyadic_offsets(0.5, 16)
    w = probe.scan(lambda th: float(heatlab.weierstrass(th[0])), np.zeros(1), np.ones((1, 1)), offs)
    alpha_w, _ = probe.holder_estimate(w)

    # the predicted-vs-measured exponent on the chaotic configuration is reported, not gated
    rc = RolloutConfig(s0=s0)
    d = probe.random_directions(free.size, 1, 1)
    j = probe.scan(lambda th: float(simulate_batch(pend, free.with_flat(th), rc).returns[0]),
                   free.flat(), d, probe.dyadic_offsets(0.1, 12))
    alpha_j, _ = probe.holder_estimate(j)
    alpha_pred = probe.predicted_holder(lam_b * pend.dt, 0.99)

    ok = (e_dbl < 1e-6 and stable.lam < 0 and e_stab < 0.1 and lam_a > 0 and lam_b > 0
          and e_delta < 0.1 and 0.35 <= alpha_w <= 0.65 and clock.ok)
    assert ac_report(12, ok, f"doubling err {e_dbl:.1e}; LQR loop lambda {stable.lam:.4f} vs "
                     f"{oracle:.4f}; pendulum lambda {lam_a:.4f}/{lam_b:.4f} "
                     f"(delta0 spread {e_delta:.3f}); Weierstrass slope {alpha_w:.3f}; "
                     f"[info] pendulum alpha_pred {alpha_pred:.2f} vs measured {alpha_j:.2f}, "
                     f"{clock}")


def test_ac13_riccati(ac_report):
    clock = Clock(30)
    P, _ = riccati.dare_solve(1.0, 1.0, 1.0, 1.0)
    e_p = abs(P[0, 0] - (1 + np.sqrt(5)) / 2)
    spec = planar_quadrotor()
    K, b, _, _ = riccati.lqr_gain(spec)
    rng = np.random.default_rng(0)
    dirs = np.vstack([np.ones(6), rng.normal(size=(4, 6))])
    finals = []
    for d in dirs:
        tr = rollout(spec, linear_policy(K, b), RolloutConfig(s0=0.05 * d / np.linalg.norm(d)))
        finals.append(np.linalg.norm(tr.states[-1]))
    ok = e_p < 1e-9 and max(finals) < 1e-3 and clock.ok
    assert ac_report(13, ok, f"scalar DARE err {e_p:.1e}; |s_1000| <= {max(finals):.1e} from five "
                     f"0.05 perturbations, {clock}")


def test_ac14_bump_convergence(ac_report):
    clock = Clock(5)
    sigmas = 0.5 / 2.0 ** np.arange(6)
    errs = np.array([abs(heatlab.bump_mollify(np.abs, 0.0, s) - 0.0) for s in sigmas])
    ok = bool(np.all(np.diff(errs) < 0)) and bool(np.all(errs <= sigmas)) and clock.ok
    assert ac_report(14, ok, f"errors {np.round(errs, 5).tolist()} at sigma = 0.5/2^j, {clock}")


RERUNS = [
    ["train", "--system", "quadrotor", "--seeds", "1,2", "--epochs", "3"],
    ["train", "--seeds", "1", "--epochs", "3"],
    ["sweep", "--seeds", "1", "--epochs", "2", "--sigmas", "0.05,5"],
    ["scan", "--system", "quadrotor", "--points", "21"],
    ["mollify", "--system", "quadrotor", "--samples", "10000"],
    ["uncertainty"],
    ["mle", "--steps", "1000"],
]


def test_ac15_reproducibility(ac_report, tmp_path):
    clock = Clock(600)
    same = 0
    for i, argv in enumerate(RERUNS):
        outs = []
        for rep in "ab":
            out = tmp_path / f"{i}{rep}"
            assert main(argv + ["--out", str(out)]) == 0
            outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        same += bool(outs[0]) and outs[0] == outs[1]
    ok = same == len(RERUNS)
    assert ac_report(15, ok, f"{same}/{len(RERUNS)} repeated CLI runs produced byte-identical CSVs, "
                     f"{clock}")
