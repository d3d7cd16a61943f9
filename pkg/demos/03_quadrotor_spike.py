# The quadrotor landscape around its tabulated optimum is a spike: moving the
# two thrust biases apart by a millinewton tips the vehicle over.  Sampled at
# 0.1 s the hover loop is in fact unstable, so noisy policy-gradient steps fall
# off the spike immediately.
import numpy as np

from mollikit import (QUADROTOR_B0, QUADROTOR_K0, PgConfig, RolloutConfig, linear_policy,
                      planar_quadrotor, rollout, scan, train)
from mollikit.probe import unit_direction
from mollikit.riccati import HOVER_CONTROL, linearize, spectral_radius

spec = planar_quadrotor()
theta0 = np.concatenate([QUADROTOR_K0.ravel(), QUADROTOR_B0])
asym = unit_direction(14, (12, 13), (1, -1))


def J(theta):
    return rollout(spec, linear_policy(theta[:12].reshape(2, 6), theta[12:]), RolloutConfig()).return_


grid = scan(J, theta0, asym, [-0.1, -0.01, -0.001, 0.0, 0.001, 0.01, 0.1])
for off, v in zip(grid.offsets[0], grid.values):
    print(f"offset {off:+.3f}   J = {v:10.3f}")

model = linearize(spec, np.zeros(6), HOVER_CONTROL)
print("sampled closed-loop spectral radius:", spectral_radius(model.A - model.B @ QUADROTOR_K0))

rec = train(spec, linear_policy(QUADROTOR_K0, QUADROTOR_B0, sigma=0.1), RolloutConfig(),
            PgConfig(batch=16, epochs=5, step=0.001, sigma=0.1, seed=1))
print("J(theta_k) during training:", np.round(rec.j_det, 2))
