"""Random-threshold selection of non-zero means among noisy observations.

Also ships the comparison baselines (Benjamini-Hochberg, a zero-mean-class
Gaussian mixture fitted by EM), the oracle classification risk, and the
simulation harness used to compare them.
"""
__version__ = "0.1.0"

from .core import (null_test, select_fixed_window, select_unknown_theta,
                   select_varying_window, transform)
from .distributions import (Exponential, Gaussian, GaussianUnknownVariance,
                            StandardGaussian)

__all__ = [
    "null_test", "select_fixed_window", "select_varying_window",
    "select_unknown_theta", "transform",
    "StandardGaussian", "Gaussian", "Exponential", "GaussianUnknownVariance",
]
