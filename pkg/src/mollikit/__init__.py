"""Gaussian policy gradients viewed as heat-equation mollification.

Benchmark dynamics (``sysdyn``), Gaussian policies (``policy``), rollouts and
returns (``objective``), REINFORCE training (``pgrad``), the heat-equation
toolkit (``heatlab``), landscape / Lyapunov / Holder probes (``probe``), LQR
baselines (``riccati``) and the command-line driver (``runner``).
"""

from .heatlab import (Field1D, HeatField, backward_attempt, bump_mollify, heat_field,
                      heat_forward, max_principle_probe, mollify_mc, uncertainty_product,
                      weierstrass)
from .objective import RolloutConfig, Trajectory, q_value, q_values, rollout, simulate_batch
from .pgrad import PgConfig, TrainRecord, estimate_gradient, normalize, train
from .policy import (GaussianPolicy, LinearMean, MlpMean, PENDULUM_K0, QUADROTOR_B0,
                     QUADROTOR_K0, linear_policy, load_checkpoint, save_checkpoint)
from .probe import (MleResult, ScanGrid, holder_estimate, mle_estimate, policy_mle,
                    predicted_holder, scan)
from .riccati import LinearModel, dare_solve, linearize, lqr_gain
from .sysdyn import (SystemSpec, double_pendulum, integrate_step, make_system,
                     planar_quadrotor, saturate)

__version__ = "0.1.0"
