# Chaos and roughness.  The free-swinging upright pendulum has a positive
# maximal Lyapunov exponent; an LQR-stabilized quadrotor has a negative one that
# matches its sampled closed-loop eigenvalue.  Increments of the Weierstrass
# function shrink like h^alpha with alpha = 1/2.  Along the way the heat flow of
# that rough function obeys the maximum principle.
import numpy as np

from mollikit import (Field1D, heat_field, holder_estimate, linear_policy, lqr_gain,
                      max_principle_probe, planar_quadrotor, policy_mle, scan, weierstrass)
from mollikit.probe import dyadic_offsets, predicted_holder
from mollikit.riccati import spectral_radius
from mollikit.sysdyn import double_pendulum

pend = double_pendulum()
res = policy_mle(pend, linear_policy(np.zeros((2, 4))), np.array([-0.2, 0.2, 0, 0]), 5000)
print(f"free pendulum: lambda = {res.lam:.4f}/s, per step {res.per_step:.5f}, "
      f"predicted Holder exponent {predicted_holder(res.per_step, 0.99):.2f}")

quad = planar_quadrotor()
K, b, model, _ = lqr_gain(quad)
res = policy_mle(quad, linear_policy(K, b), np.zeros(6), 2000)
print(f"LQR quadrotor: lambda = {res.lam:.4f}/s, "
      f"ln rho / dt = {np.log(spectral_radius(model.A - model.B @ K)) / quad.dt:.4f}/s")

grid = scan(lambda th: float(weierstrass(th[0])), [0.0], [[1.0]], dyadic_offsets(0.5, 16))
print("Weierstrass Holder slope:", holder_estimate(grid)[0])

h = heat_field(Field1D.sample(weierstrass, 1024), np.linspace(0, 1, 64))
print("maximum principle:", max_principle_probe(h))
