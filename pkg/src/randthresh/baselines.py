"""Comparison thresholds and the binary classification risk.

* :func:`bh_threshold` -- Benjamini-Hochberg step-up on p-values.
* :func:`em_init`, :func:`em_fit`, :func:`mixture_threshold` -- two-class
  Gaussian mixture whose null class has mean structurally fixed at zero,
  and the posterior-1/2 cut it induces.
* :func:`binary_risk`, :func:`oracle_threshold` -- false plus missed
  detections at a threshold, and its label-aware minimizer.

Scores are selected when strictly greater than the threshold throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats
from scipy.special import logsumexp

from .exceptions import DataError, DegenerateFitError, DomainError, InitializationError

__all__ = [
    "LabeledDataset", "MixtureFit",
    "binary_risk", "oracle_threshold", "bh_threshold",
    "em_init", "em_step", "em_fit", "mixture_loglik", "mixture_threshold",
]

_LOG_2PI = math.log(2.0 * math.pi)
_DEGENERACY_FLOOR = 1e-8


@dataclass
class LabeledDataset:
    """Observations with optional 0/1 labels (1 marks a non-null term)."""

    values: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.labels is not None:
            self.labels = np.asarray(self.labels).astype(np.int8).ravel()
            if self.labels.shape != self.values.shape:
                raise DataError("labels and values differ in length")
            if not np.isin(self.labels, (0, 1)).all():
                raise DataError("labels must be 0 or 1")

    def __len__(self):
        return self.values.size


def _labeled(data, values=None):
    if data.labels is None:
        raise DataError("dataset has no labels")
    return data.values if values is None else values, data.labels


# -- risk ---------------------------------------------------------------------------

def binary_risk(data, t):
    """Count false detections plus missed detections when keeping ``values > t``."""
    values, labels = _labeled(data)
    kept = values > t
    return int(np.count_nonzero(kept & (labels == 0)) + np.count_nonzero(~kept & (labels == 1)))


def oracle_threshold(data):
    """Threshold minimizing :func:`binary_risk` given the true labels.

    Candidates are ``-inf`` and every distinct value. Among minimizers the
    largest threshold (fewest selections) is returned.

    Returns
    -------
    (float, int)
        The threshold and its risk.
    """
    values, labels = _labeled(data)
    if values.size == 0:
        raise DataError("empty dataset")
    uniq, inverse = np.unique(values, return_inverse=True)
    pos = np.bincount(inverse, weights=labels == 1, minlength=uniq.size)
    neg = np.bincount(inverse, weights=labels == 0, minlength=uniq.size)
    # at t = uniq[i]: misses are positives <= t, false alarms are negatives > t
    misses = np.cumsum(pos)
    false_alarms = neg.sum() - np.cumsum(neg)
    risks = np.concatenate(([neg.sum()], misses + false_alarms)).astype(np.int64)
    thresholds = np.concatenate(([-np.inf], uniq))
    best = np.flatnonzero(risks == risks.min())[-1]
    return float(thresholds[best]), int(risks[best])


# -- FDR --------------------------------------------------------------------------

def bh_threshold(p_values, q):
    """Benjamini-Hochberg step-up procedure.

    Returns ``(k, p_cut)``: the ``k`` smallest p-values are rejected, where
    ``k = max{i : p_(i) <= i q / n}`` and ``p_cut = p_(k)``; ``(0, 0.0)``
    when nothing is rejected.
    """
    p = np.asarray(p_values, dtype=float).ravel()
    if p.size == 0:
        return 0, 0.0
    if np.any(np.isnan(p)) or np.any((p < 0) | (p > 1)):
        raise DomainError("p-values must lie in [0, 1]")
    if not 0.0 < q < 1.0:
        raise DomainError(f"q must lie in (0, 1), got {q}")
    p = np.sort(p)
    n = p.size
    passing = np.flatnonzero(p <= q * np.arange(1, n + 1) / n)
    if passing.size == 0:
        return 0, 0.0
    k = int(passing[-1]) + 1
    return k, float(p[k - 1])


# -- zero-mean-class Gaussian mixture ----------------------------------------------

@dataclass
class MixtureFit:
    """Parameters and state of a two-class mixture with ``mu0 = 0``.

    ``responsibilities[:, j]`` is the posterior probability of class ``j``
    under the parameters that produced the last likelihood in
    ``loglik_trace``.
    """

    p0: float
    p1: float
    mu1: float
    sigma0: float
    sigma1: float
    responsibilities: np.ndarray = field(repr=False)
    loglik_trace: np.ndarray = field(repr=False)
    converged: bool = False
    iterations: int = 0

    @property
    def loglik(self):
        return float(self.loglik_trace[-1]) if self.loglik_trace.size else math.nan

    def posterior(self, y):
        """``P(Z = 1 | y)`` under the fitted parameters."""
        lw = _log_weighted(np.asarray(y, dtype=float), self)
        return np.exp(lw[1] - logsumexp(lw, axis=0))


def _normal_logpdf(y, mu, sigma):
    z = (y - mu) / sigma
    return -0.5 * (z * z + _LOG_2PI) - math.log(sigma)


def _log_weighted(y, theta):
    return np.stack([
        math.log(theta.p0) + _normal_logpdf(y, 0.0, theta.sigma0),
        math.log(theta.p1) + _normal_logpdf(y, theta.mu1, theta.sigma1),
    ])


def mixture_loglik(y, fit):
    """Observed-data log-likelihood of ``y`` under ``fit``."""
    return float(logsumexp(_log_weighted(np.asarray(y, dtype=float), fit), axis=0).sum())


def _e_step(y, theta):
    lw = _log_weighted(y, theta)
    norm = logsumexp(lw, axis=0)
    resp = np.exp(lw - norm).T
    # make each row sum to one to rounding before it is consumed
    resp /= resp.sum(axis=1, keepdims=True)
    return resp, float(norm.sum())


def _m_step(y, resp):
    w = resp.sum(axis=0)
    n = y.size
    p1 = w[1] / n
    p0 = w[0] / n
    if min(p0, p1) < _DEGENERACY_FLOOR:
        raise DegenerateFitError(f"mixture weight collapsed (p0={p0:.3g}, p1={p1:.3g})")
    mu1 = float(resp[:, 1] @ y / w[1])
    var0 = float(resp[:, 0] @ (y * y) / w[0])
    r1 = y - mu1
    var1 = float(resp[:, 1] @ (r1 * r1) / w[1])
    sigma0, sigma1 = math.sqrt(var0), math.sqrt(var1)
    if min(sigma0, sigma1) < _DEGENERACY_FLOOR:
        raise DegenerateFitError(f"component scale collapsed (sigma0={sigma0:.3g}, sigma1={sigma1:.3g})")
    return float(p0), float(p1), mu1, sigma0, sigma1


def _silverman_kde(y):
    h_factor = 1.06 * y.size ** (-0.2)
    return stats.gaussian_kde(y, bw_method=h_factor)


def em_init(y):
    """Initial mixture parameters from the negative half of the data.

    The null variance is the mean square of the negative observations; the
    null weight matches the null density at zero to a Gaussian-kernel density
    estimate (bandwidth ``1.06 s n**-0.2``), clipped to ``[0.01, 0.99]``.
    Initial null responsibilities are ``min(1, p0 phi(y; 0, s0^2) / fhat(y))``
    and one M-step turns them into the returned parameters.
    """
    y = np.asarray(y, dtype=float).ravel()
    negatives = y[y < 0]
    if negatives.size < 2:
        raise InitializationError("need at least two negative observations to initialize")
    var0 = float(np.mean(negatives * negatives))
    kde = _silverman_kde(y)
    p0 = float(np.clip(kde(0.0)[0] * math.sqrt(2.0 * math.pi * var0), 0.01, 0.99))
    null_density = p0 * np.exp(_normal_logpdf(y, 0.0, math.sqrt(var0)))
    r0 = np.minimum(1.0, null_density / kde(y))
    resp = np.column_stack([r0, 1.0 - r0])
    p0_1, p1_1, mu1, sigma0, sigma1 = _m_step(y, resp)
    return MixtureFit(p0=p0_1, p1=p1_1, mu1=mu1, sigma0=sigma0, sigma1=sigma1,
                      responsibilities=resp, loglik_trace=np.empty(0))


def em_step(y, fit):
    """One E-step and M-step from ``fit``; returns the updated fit."""
    y = np.asarray(y, dtype=float).ravel()
    resp, ll = _e_step(y, fit)
    p0, p1, mu1, sigma0, sigma1 = _m_step(y, resp)
    return MixtureFit(p0=p0, p1=p1, mu1=mu1, sigma0=sigma0, sigma1=sigma1,
                      responsibilities=resp,
                      loglik_trace=np.append(fit.loglik_trace, ll),
                      converged=False, iterations=fit.iterations + 1)


def em_fit(y, max_iters=500, tol=1e-8, init=None):
    """Fit the zero-mean-class two-component Gaussian mixture by EM.

    Iterates until the relative change of the log-likelihood drops below
    ``tol`` or ``max_iters`` is reached. Raises :class:`DegenerateFitError`
    when a weight or scale collapses instead of clipping it.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 4:
        raise DataError("need at least 4 observations")
    fit = em_init(y) if init is None else init
    trace = []
    resp = fit.responsibilities
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        resp, ll = _e_step(y, fit)
        trace.append(ll)
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) <= tol * abs(trace[-2]):
            converged = True
            break
        p0, p1, mu1, sigma0, sigma1 = _m_step(y, resp)
        fit = MixtureFit(p0=p0, p1=p1, mu1=mu1, sigma0=sigma0, sigma1=sigma1,
                         responsibilities=resp, loglik_trace=np.empty(0))
    return MixtureFit(p0=fit.p0, p1=fit.p1, mu1=fit.mu1, sigma0=fit.sigma0,
                      sigma1=fit.sigma1, responsibilities=resp,
                      loglik_trace=np.asarray(trace), converged=converged,
                      iterations=it)


def mixture_threshold(fit):
    """Smallest ``y >= 0`` from which the fitted posterior of class 1 is >= 1/2.

    Solves the quadratic log-odds equation of the two Gaussian components.
    When the class-1 region is bounded (``sigma1 < sigma0``) the lower end of
    that region is returned; ``inf`` if class 1 never wins.
    """
    if not fit.mu1 > 0:
        raise DomainError(f"mixture_threshold needs mu1 > 0, got {fit.mu1}")
    if min(fit.p0, fit.p1) < _DEGENERACY_FLOOR or min(fit.sigma0, fit.sigma1) < _DEGENERACY_FLOOR:
        raise DegenerateFitError("degenerate mixture fit")
    s0, s1, mu = fit.sigma0, fit.sigma1, fit.mu1
    # log-odds g(y) = a y^2 + b y + c
    a = 0.5 / s0**2 - 0.5 / s1**2
    b = mu / s1**2
    c = -0.5 * mu**2 / s1**2 + math.log(fit.p1 * s0 / (fit.p0 * s1))

    if abs(a) <= 1e-12 * max(abs(b), 1e-300):
        return max(-c / b, 0.0)
    disc = b * b - 4 * a * c
    if disc < 0:
        # no crossing: class 1 wins everywhere (a > 0) or nowhere (a < 0)
        return 0.0 if a > 0 else math.inf
    sq = math.sqrt(disc)
    # b > 0, so this pairing avoids cancellation
    qq = -0.5 * (b + sq)
    lo, hi = sorted((qq / a, c / qq))
    if a > 0:
        # class 1 wins outside [lo, hi]; the upper region starts at hi
        return max(hi, 0.0)
    # class 1 wins on [lo, hi]
    if hi < 0:
        return math.inf
    return max(lo, 0.0)
