"""Scenario generators, method comparisons and Monte Carlo calibration.

Every replicate draws from its own Philox stream keyed by
``derive_seed(scenario.seed, replicate_index)``, so any single replicate can be
regenerated in isolation and tables are bitwise reproducible whether or not
replicates run in parallel.

All methods are scored on the magnitude scale ``|values|``: a method returns a
threshold ``t`` and selects the observations with ``|value| > t``. The oracle
minimizes the same risk over the same scale, so ratios are never below one.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import core
from .baselines import (LabeledDataset, bh_threshold, binary_risk, em_fit,
                        mixture_threshold, oracle_threshold)
from .distributions import (Constant, Exponential, Gamma, Gaussian,
                            GaussianUnknownVariance, Normal, StandardGaussian,
                            TwoComponentGaussian, derive_seed, make_rng, sample)
from .exceptions import (CalibrationError, DegenerateFitError, DomainError,
                         InitializationError, UsageError)

__all__ = [
    "Scenario", "FixedRT", "VaryingRT", "UnknownThetaRT", "BH", "GMM", "Oracle",
    "RiskReport", "ComparisonTable", "CalibrationTable",
    "generate", "run_comparison", "risk_ratio", "count_threshold",
    "null_statistics", "calibrate", "calibration_table", "misselection_rate",
    "PRESETS", "preset",
]


# -- scenarios ------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """A data-generating design: ``n`` observations, ``n_signal (+ n2)`` non-null.

    With ``n2 > 0`` the signal law must be a :class:`TwoComponentGaussian`;
    exactly ``n_signal`` signals come from component 1 and ``n2`` from
    component 2. ``null_known`` says whether methods may use the null law
    (random thresholds with known noise, BH).
    """

    name: str
    n: int
    n_signal: int
    null_law: object
    signal_law: object
    replicates: int = 20
    seed: int = 0
    n2: int = 0
    null_known: bool = True

    def __post_init__(self):
        if self.n_signal < 0 or self.n2 < 0 or self.n_signal + self.n2 >= self.n:
            raise DomainError("need 0 <= n_signal + n2 < n")
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        if self.n2 and not isinstance(self.signal_law, TwoComponentGaussian):
            raise DomainError("n2 > 0 requires a TwoComponentGaussian signal law")
        if not getattr(self.null_law, "known", False):
            raise DomainError("the generating null law must be fully specified")

    @property
    def n_null(self):
        return self.n - self.n_signal - self.n2


def generate(scenario, replicate_index):
    """Draw replicate ``replicate_index`` of ``scenario`` as a labeled dataset."""
    rng = make_rng(derive_seed(scenario.seed, replicate_index))
    parts = [sample(scenario.null_law, scenario.n_null, rng)]
    law = scenario.signal_law
    if scenario.n2:
        if scenario.n_signal:
            parts.append(sample(law.component(1), scenario.n_signal, rng))
        parts.append(sample(law.component(2), scenario.n2, rng))
    elif scenario.n_signal:
        parts.append(sample(law, scenario.n_signal, rng))
    values = np.concatenate(parts)
    labels = np.zeros(scenario.n, dtype=np.int8)
    labels[scenario.n_null:] = 1
    perm = rng.permutation(scenario.n)
    return LabeledDataset(values[perm], labels[perm])


# -- methods ---------------------------------------------------------------------------

def count_threshold(scores, k):
    """Threshold on ``scores`` that keeps the ``k`` largest (rule ``score > t``)."""
    s = np.sort(scores)[::-1]
    if k <= 0:
        return float(s[0])
    if k >= s.size:
        return -math.inf
    return float(s[k])


def _need_known_null(method, scenario):
    if not scenario.null_known:
        raise UsageError(f"{method.id} needs a known null law, scenario {scenario.name!r} has none")


def _check_width(method, width, scenario):
    if not 1 <= width <= scenario.n - 1:
        raise UsageError(f"{method.id} window {width} invalid for n={scenario.n}")


@dataclass(frozen=True)
class FixedRT:
    window: int
    id = "fixed_rt"

    @property
    def params(self):
        return f"K_n={self.window}"

    def validate(self, scenario):
        _need_known_null(self, scenario)
        _check_width(self, self.window, scenario)

    def threshold(self, data, scenario):
        r = core.select_fixed_window(data.values, scenario.null_law, self.window)
        return count_threshold(np.abs(data.values), r.k_hat)


@dataclass(frozen=True)
class VaryingRT:
    kappa: int
    id = "varying_rt"

    @property
    def params(self):
        return f"kappa_n={self.kappa}"

    def validate(self, scenario):
        _need_known_null(self, scenario)
        _check_width(self, self.kappa, scenario)

    def threshold(self, data, scenario):
        r = core.select_varying_window(data.values, scenario.null_law, self.kappa)
        return count_threshold(np.abs(data.values), r.k_hat)


@dataclass(frozen=True)
class UnknownThetaRT:
    """Random threshold with the Gaussian noise variance estimated per ``k``."""

    window: Optional[int] = None
    kappa: Optional[int] = None

    def __post_init__(self):
        if (self.window is None) == (self.kappa is None):
            raise UsageError("give exactly one of window= or kappa=")

    @property
    def id(self):
        return "unknown_fixed_rt" if self.window is not None else "unknown_varying_rt"

    @property
    def params(self):
        return f"K_n={self.window}" if self.window is not None else f"kappa_n={self.kappa}"

    def validate(self, scenario):
        if not isinstance(scenario.null_law, Gaussian):
            raise UsageError("the unknown-variance selector assumes Gaussian noise")
        _check_width(self, self.window or self.kappa, scenario)

    def threshold(self, data, scenario):
        r = core.select_unknown_theta(data.values, GaussianUnknownVariance(),
                                      window=self.window, kappa=self.kappa)
        return count_threshold(np.abs(data.values), r.k_hat)


@dataclass(frozen=True)
class BH:
    """Benjamini-Hochberg on ``p_i = 1 - F_|eps|(|Y_i|)``."""

    q: float
    id = "bh"

    @property
    def params(self):
        return f"q={self.q!r}"

    def validate(self, scenario):
        _need_known_null(self, scenario)
        if not 0 < self.q < 1:
            raise UsageError("q must lie in (0, 1)")

    def threshold(self, data, scenario):
        scores = np.abs(data.values)
        p = np.exp(scenario.null_law.folded_logsf(scores))
        k, _ = bh_threshold(p, self.q)
        return count_threshold(scores, k)


@dataclass(frozen=True)
class GMM:
    """Zero-mean-class Gaussian mixture; a failed fit selects nothing."""

    max_iters: int = 500
    tol: float = 1e-8
    id = "gmm"

    @property
    def params(self):
        return ""

    def validate(self, scenario):
        pass

    def threshold(self, data, scenario):
        try:
            return mixture_threshold(em_fit(data.values, self.max_iters, self.tol))
        except (DegenerateFitError, InitializationError, DomainError):
            return math.inf


@dataclass(frozen=True)
class Oracle:
    id = "oracle"

    @property
    def params(self):
        return ""

    def validate(self, scenario):
        pass

    def threshold(self, data, scenario):
        return oracle_threshold(LabeledDataset(np.abs(data.values), data.labels))[0]


# -- comparisons --------------------------------------------------------------------

def risk_ratio(risk, oracle_risk):
    """``risk / oracle_risk``; 1 when both vanish, ``risk + 1`` when only the oracle does."""
    if oracle_risk > 0:
        return risk / oracle_risk
    return 1.0 if risk == 0 else float(risk + 1)


@dataclass
class RiskReport:
    method: str
    params: str
    replicate: int
    risk: int
    oracle_risk: int
    ratio: float
    threshold_used: float


@dataclass
class ComparisonTable:
    """Per-method aggregates over replicates, plus the per-replicate reports."""

    scenario: str
    rows: list
    reports: list = field(default_factory=list, repr=False)

    COLUMNS = ("scenario", "method", "params", "mean_ratio", "std_error",
               "replicates", "mean_risk", "mean_oracle_risk")

    def row(self, method, params=None):
        for r in self.rows:
            if r["method"] == method and (params is None or r["params"] == params):
                return r
        raise KeyError((method, params))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) for c in self.COLUMNS])
        return buf.getvalue()

    def to_json(self):
        return json.dumps({"scenario": self.scenario, "rows": self.rows}, indent=2) + "\n"


def _fmt(v):
    return format(v, ".17g") if isinstance(v, float) else v


def _run_replicate(scenario, methods, index):
    data = generate(scenario, index)
    scored = LabeledDataset(np.abs(data.values), data.labels)
    _, best = oracle_threshold(scored)
    out = []
    for m in methods:
        t = m.threshold(data, scenario)
        risk = binary_risk(scored, t)
        out.append(RiskReport(m.id, m.params, index, risk, best, risk_ratio(risk, best), t))
    return out


def run_comparison(scenario, methods, max_workers=None):
    """Average the oracle risk ratio of each method over the scenario's replicates.

    Parameters
    ----------
    scenario : Scenario
    methods : list
        Method configurations (:class:`FixedRT`, :class:`BH`, ...).
    max_workers : int, optional
        Run replicates in that many processes; results do not depend on it.
    """
    methods = list(methods)
    if not methods:
        raise UsageError("methods must be nonempty")
    for m in methods:
        m.validate(scenario)
    indices = range(scenario.replicates)
    if max_workers and max_workers > 1:
        with ProcessPoolExecutor(max_workers) as pool:
            per_rep = list(pool.map(_run_replicate, [scenario] * len(indices),
                                    [methods] * len(indices), indices))
    else:
        per_rep = [_run_replicate(scenario, methods, i) for i in indices]

    rows, reports = [], []
    for mi, m in enumerate(methods):
        reps = [rep[mi] for rep in per_rep]  # ordered by replicate index
        reports.extend(reps)
        ratios = np.array([r.ratio for r in reps])
        se = float(ratios.std(ddof=1) / math.sqrt(ratios.size)) if ratios.size > 1 else 0.0
        rows.append({
            "scenario": scenario.name,
            "method": m.id,
            "params": m.params,
            "mean_ratio": float(ratios.mean()),
            "std_error": se,
            "replicates": int(ratios.size),
            "mean_risk": float(np.mean([r.risk for r in reps])),
            "mean_oracle_risk": float(np.mean([r.oracle_risk for r in reps])),
        })
    return ComparisonTable(scenario.name, rows, reports)


# -- calibration ------------------------------------------------------------------------

MIN_CALIBRATION_REPLICATES = 1000


def null_statistics(n, replicates, seed, null_model=None):
    """Monte Carlo draws of ``D_n`` under the global null.

    Data are drawn from ``null_model`` (default Exp(1)) and pushed through the
    same pipeline as :func:`randthresh.core.null_test`.
    """
    null_model = Exponential(1.0) if null_model is None else null_model
    rng = make_rng(derive_seed(seed, n))
    out = np.empty(replicates)
    for r in range(replicates):
        y = sample(null_model, n, rng)
        out[r] = core.null_test(y, null_model, critical_value=0.0).d_n
    return out


def calibrate(n, level, replicates=5000, seed=0, null_model=None):
    """Critical value ``d_alpha``: the empirical ``1 - level`` quantile of ``D_n``."""
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    if replicates < MIN_CALIBRATION_REPLICATES:
        raise DomainError(f"need at least {MIN_CALIBRATION_REPLICATES} replicates for a stable quantile")
    return float(np.quantile(null_statistics(n, replicates, seed, null_model), 1 - level))


@dataclass
class CalibrationTable:
    """Critical values keyed by ``(n, level)`` with their provenance.

    Serialized as ``{"critical_values": {"n,level": d_alpha}, "provenance": {...}}``.
    """

    entries: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @staticmethod
    def key(n, level):
        return f"{int(n)},{float(level)!r}"

    def lookup(self, n, level):
        try:
            return self.entries[self.key(n, level)]
        except KeyError:
            raise CalibrationError(
                f"no calibrated critical value for n={n}, level={level}; "
                "run the calibrate command for it") from None

    def merge(self, other):
        self.entries.update(other.entries)
        self.provenance.update(other.provenance)
        return self

    def to_json(self):
        entries = dict(sorted(self.entries.items(),
                              key=lambda kv: (int(kv[0].split(",")[0]), float(kv[0].split(",")[1]))))
        return json.dumps({"critical_values": entries, "provenance": self.provenance},
                          indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text):
        raw = json.loads(text)
        return cls({k: float(v) for k, v in raw.get("critical_values", {}).items()},
                   dict(raw.get("provenance", {})))


def calibration_table(ns, levels, replicates=5000, seed=0):
    """Calibrate every ``(n, level)`` pair; levels at one ``n`` share one sample."""
    if replicates < MIN_CALIBRATION_REPLICATES:
        raise DomainError(f"need at least {MIN_CALIBRATION_REPLICATES} replicates for a stable quantile")
    table = CalibrationTable()
    for n in ns:
        d = null_statistics(int(n), replicates, seed)
        for level in levels:
            if not 0 < level < 1:
                raise DomainError("levels must lie in (0, 1)")
            table.entries[table.key(n, level)] = float(np.quantile(d, 1 - level))
        table.provenance[str(int(n))] = {"replicates": int(replicates), "seed": int(seed)}
    return table


# -- consistency experiment -----------------------------------------------------------

def misselection_rate(n, mode, t_star=0.2, replicates=20, seed=0):
    """Share of replicates with ``|k_hat/n - t_star| > n**-0.25``.

    ``round(t_star n)`` means equal ``4 sqrt(2 log n)`` over N(0, 1) noise;
    both window parameters are ``n // 2``.
    """
    k_star = int(round(t_star * n))
    magnitude = 4.0 * math.sqrt(2.0 * math.log(n))
    scenario = Scenario(f"consistency/n={n}", n, k_star, StandardGaussian(),
                        Constant(magnitude), replicates=replicates, seed=seed)
    misses = 0
    for r in range(replicates):
        y = generate(scenario, r).values
        if mode == "fixed":
            k_hat = core.select_fixed_window(y, StandardGaussian(), n // 2).k_hat
        elif mode == "varying":
            k_hat = core.select_varying_window(y, StandardGaussian(), n // 2).k_hat
        else:
            raise UsageError(f"unknown mode {mode!r}")
        misses += abs(k_hat / n - t_star) > n ** -0.25
    return misses / replicates


# -- presets --------------------------------------------------------------------------

def _table1(replicates, seed):
    cells = []
    for alpha in (5.0, 6.0, 7.0):
        for beta in (1.0, 2.0, 3.0):
            sc = Scenario(f"table1/alpha={alpha:g},beta={beta:g}", 10_000, 1_000,
                          Exponential(1.0), Gamma(alpha, beta), replicates, seed)
            cells.append(sc)
    methods = [FixedRT(5000), VaryingRT(5000), BH(0.01), BH(0.05), BH(0.1), Oracle()]
    return cells, methods


def _table2_top(replicates, seed):
    cells = []
    for mu in (1.0, 2.0, 3.0):
        for sigma in (1.0, 2.0, 3.0):
            sc = Scenario(f"table2-top/mu={mu:g},sigma={sigma:g}", 1_000, 100,
                          StandardGaussian(), Normal(mu, sigma), replicates, seed,
                          null_known=False)
            cells.append(sc)
    methods = [GMM(), UnknownThetaRT(window=500), UnknownThetaRT(kappa=500), Oracle()]
    return cells, methods


def _table2_bottom(replicates, seed):
    sc = Scenario("table2-bottom", 5_000, 950, StandardGaussian(),
                  TwoComponentGaussian(3.0, 1.0, 20.0, 1.0, 0.05), replicates, seed,
                  n2=50, null_known=False)
    methods = [GMM(), UnknownThetaRT(window=2500), UnknownThetaRT(kappa=2500), Oracle()]
    return [sc], methods


PRESETS = {
    "table1": _table1,
    "table2-top": _table2_top,
    "table2-bottom": _table2_bottom,
}


def preset(name, replicates=20, seed=0):
    """Scenarios and default methods of a named experiment grid."""
    try:
        return PRESETS[name](replicates, seed)
    except KeyError:
        raise UsageError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
