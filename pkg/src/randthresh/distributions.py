"""Noise models, signal laws, samplers and the special functions behind them.

Null models describe the law of the noise ``eps`` in ``Y = mu + eps``. Every
known model exposes two functions of a magnitude ``y >= 0``:

* ``folded_cdf(y)``   -- ``F_|eps|(y) = P(|eps| <= y)``
* ``folded_logsf(y)`` -- ``log(1 - F_|eps|(y))`` evaluated without forming
  the subtraction, so it stays finite and accurate far into the tail.

Random numbers come from numpy's counter-based Philox generator, keyed
directly by a 64-bit integer (see :func:`make_rng`), so that every draw is
reproducible from an integer seed alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .exceptions import DomainError, UsageError

__all__ = [
    "StandardGaussian", "Gaussian", "Exponential", "GaussianUnknownVariance",
    "Constant", "Normal", "Gamma", "TwoComponentGaussian",
    "NullModel", "SignalLaw",
    "folded_cdf", "folded_logsf", "gamma_cdf", "sample",
    "make_rng", "splitmix64", "derive_seed",
]

_SQRT2 = math.sqrt(2.0)
_MASK64 = (1 << 64) - 1


def _check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be a positive finite number, got {value!r}")


def _as_magnitude(y):
    y = np.asarray(y, dtype=float)
    if np.any(np.isnan(y)) or np.any(y < 0):
        raise DomainError("folded distribution functions are defined for y >= 0")
    return y


def _maybe_scalar(a):
    return a.item() if a.ndim == 0 else a


# -- null models -------------------------------------------------------------

@dataclass(frozen=True)
class Gaussian:
    """Zero-mean Gaussian noise with standard deviation ``sigma``."""

    sigma: float = 1.0
    known = True
    symmetric = True

    def __post_init__(self):
        _check_positive("sigma", self.sigma)

    def folded_cdf(self, y):
        y = _as_magnitude(y)
        return _maybe_scalar(special.erf(y / (self.sigma * _SQRT2)))

    def folded_logsf(self, y):
        # log erfc(z) = log erfcx(z) - z**2; erfcx never underflows for z >= 0
        z = _as_magnitude(y) / (self.sigma * _SQRT2)
        return _maybe_scalar(np.log(special.erfcx(z)) - z * z)

    def describe(self):
        return f"gaussian:{self.sigma!r}"


@dataclass(frozen=True)
class StandardGaussian(Gaussian):
    """Standard normal noise, ``N(0, 1)``."""

    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma != 1.0:
            raise DomainError("StandardGaussian has sigma fixed at 1")

    def describe(self):
        return "gaussian"


@dataclass(frozen=True)
class Exponential:
    """Exponential noise with the given ``rate``; supported on ``[0, inf)``."""

    rate: float = 1.0
    known = True
    symmetric = False

    def __post_init__(self):
        _check_positive("rate", self.rate)

    def folded_cdf(self, y):
        y = _as_magnitude(y)
        return _maybe_scalar(-np.expm1(-self.rate * y))

    def folded_logsf(self, y):
        y = _as_magnitude(y)
        return _maybe_scalar(-self.rate * y)

    def describe(self):
        return f"exponential:{self.rate!r}"


@dataclass(frozen=True)
class GaussianUnknownVariance:
    """Zero-mean Gaussian family whose variance has to be estimated.

    The family itself cannot evaluate probabilities; call :meth:`resolve`
    with a variance estimate to obtain a usable :class:`Gaussian`.
    """

    known = False
    symmetric = True

    def resolve(self, variance):
        _check_positive("variance", variance)
        return Gaussian(math.sqrt(variance))

    def folded_cdf(self, y):
        raise UsageError("GaussianUnknownVariance needs a plugged-in variance; call resolve() first")

    folded_logsf = folded_cdf

    def describe(self):
        return "gaussian-unknown"


NullModel = Union[StandardGaussian, Gaussian, Exponential, GaussianUnknownVariance]


# -- signal laws ---------------------------------------------------------------

@dataclass(frozen=True)
class Constant:
    """Degenerate law putting all its mass at ``value``."""

    value: float

    def _draw(self, rng, count):
        return np.full(count, float(self.value))


@dataclass(frozen=True)
class Normal:
    """Gaussian law ``N(mu, sigma**2)``."""

    mu: float
    sigma: float

    def __post_init__(self):
        _check_positive("sigma", self.sigma)

    def _draw(self, rng, count):
        return rng.normal(self.mu, self.sigma, size=count)


@dataclass(frozen=True)
class Gamma:
    """Gamma law with shape ``alpha`` and *scale* ``beta`` (mean ``alpha * beta``)."""

    alpha: float
    beta: float

    def __post_init__(self):
        _check_positive("alpha", self.alpha)
        _check_positive("beta", self.beta)

    def cdf(self, x):
        return gamma_cdf(self.alpha, self.beta, x)

    def _draw(self, rng, count):
        return rng.gamma(self.alpha, self.beta, size=count)


@dataclass(frozen=True)
class TwoComponentGaussian:
    """Two-component Gaussian mixture; ``weight`` is the share of component 2."""

    mu1: float
    sigma1: float
    mu2: float
    sigma2: float
    weight: float

    def __post_init__(self):
        _check_positive("sigma1", self.sigma1)
        _check_positive("sigma2", self.sigma2)
        if not 0.0 < self.weight < 1.0:
            raise DomainError(f"weight must lie in (0, 1), got {self.weight!r}")

    def component(self, which):
        if which == 1:
            return Normal(self.mu1, self.sigma1)
        if which == 2:
            return Normal(self.mu2, self.sigma2)
        raise DomainError("component index must be 1 or 2")

    def _draw(self, rng, count):
        second = rng.random(count) < self.weight
        out = rng.normal(self.mu1, self.sigma1, size=count)
        out[second] = rng.normal(self.mu2, self.sigma2, size=int(second.sum()))
        return out


SignalLaw = Union[Constant, Normal, Gamma, TwoComponentGaussian]


# -- module-level functions ------------------------------------------------------

def folded_cdf(model, y):
    """Return ``F_|eps|(y)`` for a fully specified null model.

    Parameters
    ----------
    model : NullModel
        A known null model. ``GaussianUnknownVariance`` is rejected.
    y : float or array_like
        Nonnegative magnitudes.

    Returns
    -------
    float or ndarray
        Values in ``[0, 1]``, nondecreasing in ``y``.
    """
    return model.folded_cdf(y)


def folded_logsf(model, y):
    """Return ``log(1 - F_|eps|(y))`` computed directly in the log domain."""
    return model.folded_logsf(y)


def _gamma_series(a, x):
    # P(a, x) for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_contfrac(a, x):
    # Q(a, x) for x >= a + 1, modified Lentz
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def _gamma_p(a, x):
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_contfrac(a, x)


def gamma_cdf(alpha, beta, x):
    """CDF of the Gamma law with shape ``alpha`` and scale ``beta``.

    Evaluates the regularized lower incomplete gamma function
    ``P(alpha, x / beta)`` by its power series below ``alpha + 1`` and by a
    continued fraction for the upper tail above it.
    """
    _check_positive("alpha", alpha)
    _check_positive("beta", beta)
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise DomainError("gamma_cdf is defined for x >= 0")
    out = np.array([_gamma_p(float(alpha), float(v) / beta) for v in x.ravel()])
    return _maybe_scalar(out.reshape(x.shape))


# -- random numbers --------------------------------------------------------------

def splitmix64(z):
    """One step of the SplitMix64 generator on a 64-bit unsigned integer."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed, index):
    """Mix a base seed and a replicate index into an independent 64-bit seed.

    ``derive_seed(s, i) = splitmix64(splitmix64(s mod 2**64) XOR (i mod 2**64))``
    """
    return splitmix64(splitmix64(int(seed) & _MASK64) ^ (int(index) & _MASK64))


def make_rng(seed):
    """Return a Philox-backed generator keyed by ``seed`` (taken mod 2**64).

    An existing ``numpy.random.Generator`` is passed through untouched.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))


def sample(law, count, seed):
    """Draw ``count`` values from a null model or a signal law.

    The output is a deterministic function of ``(law, count, seed)``.
    """
    count = int(count)
    if count < 1:
        raise DomainError("count must be a positive integer")
    rng = make_rng(seed)
    if isinstance(law, Gaussian):
        return rng.normal(0.0, law.sigma, size=count)
    if isinstance(law, Exponential):
        return rng.exponential(1.0 / law.rate, size=count)
    if isinstance(law, GaussianUnknownVariance):
        raise UsageError("cannot sample from a family with an unresolved variance")
    if hasattr(law, "_draw"):
        return law._draw(rng, count)
    raise DomainError(f"unsupported law {law!r}")
