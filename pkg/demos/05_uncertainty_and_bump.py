# Two facts about mollifiers.  A unit-norm function cannot be concentrated in
# both space and frequency: the product of the two variances is at least
# 1/(16 pi^2), with equality for Gaussians.  And a compactly supported bump
# kernel smooths |x| with an error no larger than its radius.
import numpy as np

from mollikit import bump_mollify, uncertainty_product
from mollikit.heatlab import GAUSSIAN_BOUND, gaussian_test_function, random_test_function

print("bound          ", GAUSSIAN_BOUND)
for scale in (0.5, 1.0, 2.0):
    print(f"Gaussian x{scale}  ", uncertainty_product(gaussian_test_function(scale=scale))[2])
for seed in range(3):
    print(f"random #{seed}      ", uncertainty_product(random_test_function(seed))[2])

for j in range(6):
    s = 0.5 / 2 ** j
    print(f"sigma={s:.5f}  (|.| * eta)(0) = {bump_mollify(np.abs, 0.0, s):.6f}")
