"""
How fast does the first Fourier harmonic of L die off?
=======================================================

The splitting between incoming and outgoing parabolic manifolds is
measured by the harmonics L^[l] of the Melnikov potential.  The mean
harmonic decays like a power of I while the oscillating ones decay
exponentially in I^3.  This script tabulates both and writes a plot.

Run with  python3 demos/harmonic_decay.py  (about 20 seconds).
"""
import math

import numpy as np

from rpe3bp import melnikov as mel
from rpe3bp import svg

mu = 0.3
momenta = np.arange(2.0, 3.01, 0.2)

# L^[0] (theta-mean at l = 0) and |L^[1]| at theta = 0, circular primaries
mean, first = [], []
for i in momenta:
    h = mel.harmonics(0.0, i, mu, 0.0, l_max=1)
    mean.append(abs(h[1, 0]))
    first.append(abs(h[2, 0]))
    print(f"I = {i:.1f}   L0 = {mean[-1]:.6e}   |L1| = {first[-1]:.6e}")

# the exponent of |L1| against I^3 should sit near -1/3
slope = np.polyfit(momenta ** 3, np.log(first), 1)[0]
print(f"fitted d log|L1| / d I^3 = {slope:.4f}")

# closed-form leading terms for comparison
print("leading mean term at I = 3:", mel.mean_leading(3.0, mu))
print("leading |L1| at I = 3:", abs(mel.first_harmonic_leading(3.0, mu)))

svg.line_plot("harmonic_decay.svg", momenta ** 3,
              {"log |L1|": np.log(first), "log L0": np.log(mean)},
              "harmonic decay, mu = 0.3", "I^3", "log modulus")
print("wrote harmonic_decay.svg")
