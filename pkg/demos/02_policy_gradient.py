# REINFORCE on a one-step bandit, where the mollified objective is known:
#   F(mu, sigma^2) = -|mu - a*|^2 - m sigma^2,
# so the gradient in mu is -2 (mu - a*) and the derivative in sigma^2 is -m.
# Then a short training run that improves the tabulated pendulum gain.
import numpy as np

from mollikit import (PENDULUM_K0, GaussianPolicy, LinearMean, PgConfig, RolloutConfig,
                      double_pendulum, estimate_gradient, linear_policy, train)
from mollikit.sysdyn import SystemSpec

a_star = np.array([0.3, -0.7])
mu = np.array([1.0, 0.5])
toy = SystemSpec("toy", 1, 2, 1.0, -1e9, 1e9, lambda s, u, p: np.zeros_like(s))
cfg = RolloutConfig(horizon=1, s0=np.zeros(1), reward=lambda s, a: -((a - a_star) ** 2).sum(-1))

pol = GaussianPolicy(LinearMean(np.zeros((2, 1)), mu), sigma=0.4, train_noise=True)
g = estimate_gradient(toy, pol, cfg, PgConfig(batch=100_000, seed=0)).grad
print("estimated d/dmu      ", g[2:4])
print("analytic  d/dmu      ", -2 * (mu - a_star))
print("estimated d/dsigma^2 ", g[-1] / (2 * 0.4), " (analytic -2)")

# normalized steps of length 1 on the upright pendulum
rec = train(double_pendulum(), linear_policy(PENDULUM_K0, sigma=0.1), RolloutConfig(),
            PgConfig(batch=16, epochs=10, step=1.0, sigma=0.1, seed=1))
print("pendulum J(theta_k):", np.round(rec.j_det, 3))
