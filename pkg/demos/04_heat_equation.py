# Gaussian smoothing with variance t is the heat flow 2 u_t = u_xx run for time t.
# Three views: Fourier modes decay like exp(-omega^2 t / 2); Monte Carlo smoothing
# of a quadrotor Q-slice matches the spectral solution; running the flow
# backwards amplifies mode k by exp(k^2 t / 2) until it overflows.
import numpy as np

from mollikit import Field1D, backward_attempt, heat_forward, mollify_mc
from mollikit.heatlab import BackwardOverflow, mode_decay
from mollikit.runner import parse_config, q_slice_table

g = Field1D.sample(lambda x: np.sign(np.sin(x)), 256)
t = 0.1
print("decay of modes 1,3,5:", mode_decay(g, t)[[1, 3, 5]])
print("exp(-k^2 t / 2)     :", np.exp(-np.array([1, 3, 5]) ** 2 * t / 2))

# Q(s0, b0 + c d) along the first thrust, tabulated and smoothed both ways
cfg = parse_config(None, {"command": "mollify", "system": "quadrotor", "grid": "2048"})
table = q_slice_table(cfg)
rng = np.random.default_rng(0)
for s2 in (0.01, 0.25):
    spectral = heat_forward(table, s2).interpolate([0.0])[0]
    mc, se = mollify_mc(lambda c: np.interp(c, table.x, table.samples), 0.0, np.sqrt(s2),
                        100_000, rng)
    print(f"sigma^2={s2}: Monte Carlo {mc:.4f} +- {se:.4f}   spectral {spectral:.4f}")

# a 1e-6 ripple in mode 8 is blown up by e^8 after t = 0.25 of backward flow
gT = Field1D(np.zeros(256))
back, rep = backward_attempt(gT.with_samples(1e-6 * np.sin(8 * gT.x)), 0.25, k_max=8)
print("amplification of mode 8:", np.abs(back.samples).max() / 1e-6, " e^8 =", np.exp(8))
try:
    backward_attempt(gT, 0.25)
except BackwardOverflow as exc:
    print("full backward solve:", exc)
