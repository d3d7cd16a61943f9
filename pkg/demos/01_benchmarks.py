# The two benchmark plants and their reference controllers.
#
# The planar quadrotor hovers exactly under its tabulated gain, so its return
# is a geometric series of the constant thrust penalty.  The double pendulum is
# balanced upright by its tabulated gain as well as by a freshly solved LQR gain.
import numpy as np

from mollikit import (PENDULUM_K0, QUADROTOR_B0, QUADROTOR_K0, RolloutConfig, double_pendulum,
                      linear_policy, lqr_gain, planar_quadrotor, rollout)

quad = planar_quadrotor()
tr = rollout(quad, linear_policy(QUADROTOR_K0, QUADROTOR_B0), RolloutConfig())
geom = (1 - 0.99 ** 1000) / 0.01
print("quadrotor hover return  ", tr.return_)
print("closed form             ", -(2 * 4.905 ** 2 * 1e-4) * geom)

pend = double_pendulum()
cfg = RolloutConfig(horizon=1000)          # starts at s0 = [-0.2, 0.2, 0, 0]
for name, K in [("tabulated K0", PENDULUM_K0), ("LQR", lqr_gain(pend)[0])]:
    tr = rollout(pend, linear_policy(K), cfg)
    print(f"pendulum, {name:12s} J = {tr.return_:9.4f}   |s_H| = {np.abs(tr.states[-1]).max():.2e}")

# a discounted Riccati gain for the quadrotor, from a slightly perturbed hover
K, b, model, P = lqr_gain(quad)
s0 = np.full(6, 0.05 / np.sqrt(6))
tr = rollout(quad, linear_policy(K, b), RolloutConfig(s0=s0))
print("quadrotor LQR from |s0| = 0.05, final |s| =", np.linalg.norm(tr.states[-1]))
