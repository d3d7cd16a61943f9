# How the exploration noise sigma shapes training on the pendulum: a width-16
# network is trained from the same random start with four noise levels and the
# spread of J(theta_k) over epochs is compared.  This is a shortened version of
#   python -m mollikit sweep --system double_pendulum
# (the full run uses 100 epochs, batch 32 and five seeds).
import numpy as np

from mollikit import GaussianPolicy, MlpMean, PgConfig, RolloutConfig, double_pendulum, train

spec = double_pendulum()
for sigma in (0.005, 0.05, 0.5, 5.0):
    pol = GaussianPolicy(MlpMean.init(4, 2, 16, rng=1), sigma=sigma)
    rec = train(spec, pol, RolloutConfig(), PgConfig(batch=8, epochs=15, step=1.0, sigma=sigma, seed=1))
    j = np.array(rec.j_det)
    print(f"sigma={sigma:<6} J_0={j[0]:10.1f}  J_E={j[-1]:8.2f}  std over epochs {j.std():9.2f}")
