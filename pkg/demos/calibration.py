"""
Calibrating the global test
===========================

The null law of D_n does not depend on the noise distribution, so one Monte
Carlo run on exponential data calibrates every null model.
"""

import numpy as np

from randthresh import StandardGaussian
from randthresh.simulate import calibrate, calibration_table, null_statistics

for n in (100, 500):
    print(f"n = {n:4d}: 0.95 quantile of D_n = {calibrate(n, 0.05, replicates=5000, seed=0):.4f}")

# Gaussian noise pushed through its own transform gives the same law.
gauss = null_statistics(200, 2000, seed=1, null_model=StandardGaussian())
expo = null_statistics(200, 2000, seed=2)
for q in (0.5, 0.9, 0.95, 0.99):
    print(f"quantile {q:.2f}: gaussian {np.quantile(gauss, q):.4f}  exponential {np.quantile(expo, q):.4f}")

# A table for small samples, where the default 0.65 is not trusted.
table = calibration_table([30, 60], [0.01, 0.05, 0.1], replicates=2000, seed=3)
print(table.to_json())
