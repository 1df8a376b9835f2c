"""Random-threshold statistics on ordered exponential transforms.

The observations are sorted by decreasing magnitude and mapped to
``X_(i) = -log(1 - F_|eps|(|Y_(i)|))``. Under the global null these are the
order statistics of an Exp(1) sample, whose partial sums have closed-form
expectations. Every statistic below compares observed partial sums ``T`` with
their expectations conditional on the window total, ``Q``:

* :func:`null_test` -- the global-null statistic ``D_n`` over all ``n`` terms;
* :func:`select_fixed_window` -- the sliding window of ``K_n`` terms;
* :func:`select_varying_window` -- the shrinking window of all ``n - k`` terms;
* :func:`select_unknown_theta` -- either window, with the Gaussian noise
  variance re-estimated from the ``n - k`` smallest observations at each ``k``.

Every selector scans ``k = 0, 1, ...`` so that "no signal" can be returned.
Partial sums are accumulated in ``numpy.longdouble`` (80-bit on x86-64) and
kept as hi/lo float64 pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .distributions import GaussianUnknownVariance
from .exceptions import CalibrationError, DataError, DomainError, UsageError

__all__ = [
    "OrderedTransform", "NullTestResult", "SelectionResult",
    "DEFAULT_CRITICAL_VALUE",
    "transform", "expected_order_stat_sum", "expected_partial_sum",
    "expected_partial_sums",
    "null_test", "select_fixed_window", "select_varying_window",
    "select_unknown_theta",
]

#: Approximate 5% critical value of ``D_n``, valid for ``n >= 100``.
DEFAULT_CRITICAL_VALUE = 0.65


@dataclass
class OrderedTransform:
    """Exponential transforms of the observations, sorted by magnitude.

    Attributes
    ----------
    x : ndarray
        ``X_(1) >= ... >= X_(n)``.
    order : ndarray of int
        ``order[r]`` is the original index of the observation of rank ``r``
        (0-based).
    magnitudes : ndarray
        ``|Y|`` in the same (descending) order.
    """

    x: np.ndarray
    order: np.ndarray
    magnitudes: np.ndarray

    @property
    def n(self):
        return self.x.size


@dataclass
class NullTestResult:
    d_n: float
    critical_value: float
    level: float
    reject: bool
    t_curve: np.ndarray = field(repr=False)
    q_curve: np.ndarray = field(repr=False)

    def to_dict(self, curves=False):
        out = {
            "d_n": self.d_n,
            "critical_value": self.critical_value,
            "level": self.level,
            "reject": self.reject,
            "n": int(self.t_curve.size),
        }
        if curves:
            out["t_curve"] = self.t_curve.tolist()
            out["q_curve"] = self.q_curve.tolist()
        return out


@dataclass
class SelectionResult:
    """Outcome of a random-threshold selector.

    ``eta[i]`` is the criterion at ``k = k_start + i``. ``threshold_value`` is
    the smallest selected magnitude, or ``inf`` when nothing is selected.
    ``at_boundary`` flags an argmin on the last scanned ``k``, which usually
    means the window parameter leaves too few null terms.
    """

    k_hat: int
    eta: np.ndarray = field(repr=False)
    threshold_value: float
    selected: np.ndarray = field(repr=False)
    variant: str
    window: int
    k_start: int = 0
    at_boundary: bool = False
    estimated_theta: Optional[float] = None
    theta_curve: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self, eta=False):
        out = {
            "variant": self.variant,
            "window": self.window,
            "k_hat": self.k_hat,
            "threshold_value": self.threshold_value,
            "n_selected": int(self.selected.size),
            "at_boundary": self.at_boundary,
        }
        if self.estimated_theta is not None:
            out["estimated_variance"] = self.estimated_theta
        if eta:
            out["k_start"] = self.k_start
            out["eta"] = self.eta.tolist()
        return out


# -- transforms and expectations --------------------------------------------------

def _check_data(y):
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 2:
        raise DataError(f"need at least 2 observations, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise DataError("observations must be finite")
    return y


def _sort_by_magnitude(y):
    mags = np.abs(y)
    # descending magnitude, ties by ascending original index
    order = np.lexsort((np.arange(y.size), -mags))
    return order, mags[order]


def transform(y, model):
    """Sort ``|y|`` in decreasing order and map it to the Exp(1) scale.

    Parameters
    ----------
    y : array_like
        Observations, at least two, all finite.
    model : NullModel
        A null model with known parameters.

    Returns
    -------
    OrderedTransform
    """
    y = _check_data(y)
    if not getattr(model, "known", False):
        raise UsageError("transform needs a null model with known parameters")
    order, mags = _sort_by_magnitude(y)
    x = -np.asarray(model.folded_logsf(mags), dtype=float)
    return OrderedTransform(x=x, order=order, magnitudes=mags)


def expected_order_stat_sum(n, i):
    """``E X_(i) = sum_{l=i}^{n} 1/l`` for the ``i``-th largest of ``n`` Exp(1) draws."""
    n, i = int(n), int(i)
    if not 1 <= i <= n:
        raise DomainError(f"rank i={i} outside 1..{n}")
    return math.fsum(1.0 / l for l in range(n, i - 1, -1))


def expected_partial_sum(n_window, j):
    """Expected sum of the ``j`` largest of ``n_window`` Exp(1) draws.

    Equals ``sum_{i<=j} E X_(i) = j * (1 + sum_{i=j+1}^{n_window} 1/i)``.
    """
    m, j = int(n_window), int(j)
    if not 1 <= j <= m:
        raise DomainError(f"rank j={j} outside 1..{m}")
    return j * (1.0 + math.fsum(1.0 / i for i in range(m, j, -1)))


def expected_partial_sums(n_window, width=None):
    """Vector of expected partial sums ``E T_j``, ``j = 1..width``.

    ``width`` defaults to ``n_window``; the expectations are those of the
    ``j`` largest of ``n_window`` Exp(1) draws.
    """
    m = int(n_window)
    width = m if width is None else int(width)
    if not 1 <= width <= m:
        raise DomainError(f"width={width} outside 1..{m}")
    return _window_expectations(_harmonic_table(m), m, width)


def _window_expectations(harmonic, n_null, width):
    return np.arange(1, width + 1) * ((1.0 + harmonic[n_null]) - harmonic[1:width + 1])


def _harmonic_table(n):
    h = np.zeros(n + 1, dtype=np.longdouble)
    np.cumsum(1.0 / np.arange(1, n + 1, dtype=np.longdouble), out=h[1:])
    return h.astype(float)


def _prefix_sums(x):
    """Prefix sums of ``x`` as an unevaluated (hi + lo) pair of float64 arrays.

    The sums are accumulated in long double; carrying the rounding residual
    ``lo`` keeps differences of distant prefix sums accurate.
    """
    c = np.zeros(x.size + 1, dtype=np.longdouble)
    np.cumsum(x, dtype=np.longdouble, out=c[1:])
    hi = c.astype(float)
    return hi, (c - hi).astype(float)


def _centered_gaps(sums, k, width, n_null, harmonic):
    """``T_{k,j} - Q_{k,j}``, ``T_{k,j}`` and ``Q_{k,j}`` for ``j = 1..width``.

    ``sums`` are prefix sums with entry ``k`` aligned to rank ``k``; the
    expectations are those of the ``width`` largest of ``n_null`` Exp(1)
    order statistics, ``E T_j = j * (1 + H_{n_null} - H_j)``.
    """
    hi, lo = sums
    expected = _window_expectations(harmonic, n_null, width)
    t = (hi[k + 1:k + width + 1] - hi[k]) + (lo[k + 1:k + width + 1] - lo[k])
    q = expected / expected[-1] * t[-1]
    return t - q, t, q


# -- global null test ---------------------------------------------------------------

def _resolve_critical_value(n, level, critical_value):
    if critical_value is not None:
        if not critical_value >= 0:
            raise DomainError("critical value must be nonnegative")
        return float(critical_value)
    if math.isclose(level, 0.05) and n >= 100:
        return DEFAULT_CRITICAL_VALUE
    raise CalibrationError(
        f"no built-in critical value for n={n}, level={level}; "
        "compute one with `randthresh calibrate` or randthresh.simulate.calibrate")


def null_test(y, model, level=0.05, critical_value=None):
    """Test the global null ``mu_i = 0 for all i``.

    ``D_n = max_j |T_j - Q_j| / sqrt(n)`` is compared with ``critical_value``.
    When the latter is omitted the built-in 0.65 is used, which is only valid
    for ``level = 0.05`` and ``n >= 100``; anything else raises
    :class:`CalibrationError`.
    """
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    ot = transform(y, model)
    n = ot.n
    cv = _resolve_critical_value(n, level, critical_value)
    gaps, t, q = _centered_gaps(_prefix_sums(ot.x), 0, n, n, _harmonic_table(n))
    d_n = float(np.max(np.abs(gaps)) / np.sqrt(n))
    return NullTestResult(d_n=d_n, critical_value=cv, level=float(level),
                          reject=bool(d_n > cv), t_curve=t, q_curve=q)


# -- selectors --------------------------------------------------------------------------

def _check_window(name, value, n, minimum=1):
    value = int(value)
    if not minimum <= value <= n - 1:
        raise DomainError(f"{name}={value} must lie in [{minimum}, {n - 1}] for n={n}")
    return value


def _finish(eta, ot, variant, window, theta_curve=None):
    k_hat = int(np.argmin(eta))  # first minimum: smallest k wins ties
    k_max = eta.size - 1
    selected = np.sort(ot.order[:k_hat])
    threshold = float(ot.magnitudes[k_hat - 1]) if k_hat > 0 else math.inf
    return SelectionResult(
        k_hat=k_hat, eta=eta, threshold_value=threshold, selected=selected,
        variant=variant, window=window, at_boundary=bool(k_max > 0 and k_hat == k_max),
        estimated_theta=None if theta_curve is None else float(theta_curve[k_hat]),
        theta_curve=theta_curve)


def select_fixed_window(y, model, window):
    """Random threshold with a sliding window of ``window`` (``K_n``) terms.

    For ``k = 0..n-K_n`` the criterion is
    ``eta_k = max_{j<=K_n} |T_{k,j} - Q_{k,j}| / sqrt(n)``, where ``T_{k,j}``
    sums ``X_(k+1..k+j)`` and ``Q_{k,j}`` is its expectation given
    ``T_{k,K_n}`` when ranks ``k+1..n`` are null. Returns the argmin.
    """
    ot = transform(y, model)
    n = ot.n
    window = _check_window("window", window, n)
    sums = _prefix_sums(ot.x)
    harmonic = _harmonic_table(n)
    eta = np.empty(n - window + 1)
    for k in range(eta.size):
        gaps = _centered_gaps(sums, k, window, n - k, harmonic)[0]
        eta[k] = np.max(np.abs(gaps))
    eta /= np.sqrt(n)
    return _finish(eta, ot, "fixed", window)


def select_varying_window(y, model, kappa):
    """Random threshold with the shrinking window ``X_(k+1..n)``.

    ``eta_k = max_{j<=n-k} |T_{k,j} - Q_{k,j}| / sqrt(n - k)`` for
    ``k = 0..n-kappa``; ``kappa`` is a lower bound on the number of null
    terms and does not affect the result as long as the global minimum of
    ``eta`` lies inside the scanned range. ``eta_0`` equals ``D_n``.
    """
    ot = transform(y, model)
    n = ot.n
    kappa = _check_window("kappa", kappa, n)
    sums = _prefix_sums(ot.x)
    harmonic = _harmonic_table(n)
    eta = np.empty(n - kappa + 1)
    for k in range(eta.size):
        gaps = _centered_gaps(sums, k, n - k, n - k, harmonic)[0]
        eta[k] = np.max(np.abs(gaps)) / np.sqrt(n - k)
    return _finish(eta, ot, "varying", kappa)


def select_unknown_theta(y, family=None, window=None, kappa=None):
    """Random threshold for Gaussian noise of unknown variance.

    At each ``k`` the variance is estimated from the ``n - k`` smallest
    magnitudes, ``s2_k = mean(Y_(i)**2, i > k)``, and the window transforms
    are recomputed under ``N(0, s2_k)``. Exactly one of ``window`` (sliding,
    normalized by ``sqrt(n)``) or ``kappa`` (shrinking, normalized by
    ``sqrt(n - k)``) must be given.

    The result carries the whole variance curve in ``theta_curve`` and its
    value at the argmin in ``estimated_theta``.
    """
    if family is None:
        family = GaussianUnknownVariance()
    if not isinstance(family, GaussianUnknownVariance):
        raise UsageError("select_unknown_theta supports the GaussianUnknownVariance family")
    if (window is None) == (kappa is None):
        raise UsageError("give exactly one of window= or kappa=")
    y = _check_data(y)
    n = y.size
    order, mags = _sort_by_magnitude(y)
    ot = OrderedTransform(x=np.empty(0), order=order, magnitudes=mags)
    fixed = window is not None
    width = _check_window("window" if fixed else "kappa",
                          window if fixed else kappa, n, minimum=2)

    sq = np.zeros(n + 1, dtype=np.longdouble)
    np.cumsum((mags * mags)[::-1], dtype=np.longdouble, out=sq[1:])
    # sq[m] is the sum of the m smallest squared magnitudes
    harmonic = _harmonic_table(n)
    n_k = n - width + 1
    eta = np.empty(n_k)
    theta = np.empty(n_k)
    for k in range(n_k):
        variance = float(sq[n - k] / (n - k))
        theta[k] = variance
        w = width if fixed else n - k
        seg = mags[k:k + w]
        if variance > 0:
            x = -np.asarray(family.resolve(variance).folded_logsf(seg), dtype=float)
        else:
            x = np.zeros(w)
        gaps = _centered_gaps(_prefix_sums(x), 0, w, n - k, harmonic)[0]
        eta[k] = np.max(np.abs(gaps)) / np.sqrt(n if fixed else n - k)
    return _finish(eta, ot, "unknown-fixed" if fixed else "unknown-varying", width,
                   theta_curve=theta)
