"""Willie's detectors over packet counts.

The detectors follow the scikit-learn estimator protocol. ``X`` is either a
sequence of :class:`PacketTrace` objects (each reduced to its packet count over
the full horizon) or a 1-D array of counts. Labels are 0 for H0 (Alice
silent) and 1 for H1 (Alice active).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from numbers import Integral, Real
from typing import Callable, Optional, Union

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._runner import map_trials
from ._validation import (
    ParameterError,
    check_count,
    check_count_array,
    check_open_unit,
    check_positive,
)
from .point_process import PacketTrace, trial_rng


class Hypothesis(enum.IntEnum):
    H0 = 0
    H1 = 1


def observed_count(obs, horizon: Optional[float] = None) -> int:
    """Packet count of one observation (a trace or a bare count)."""
    if isinstance(obs, PacketTrace):
        if horizon is not None and obs.horizon != horizon:
            raise ParameterError(f"trace horizon {obs.horizon} != detector horizon {horizon}")
        return len(obs)
    if isinstance(obs, (Integral, np.integer)) and not isinstance(obs, bool) and obs >= 0:
        return int(obs)
    raise ParameterError(f"expected a PacketTrace or a nonnegative count, got {obs!r}")


def check_observations(X, horizon: Optional[float] = None) -> np.ndarray:
    """Reduce ``X`` to a 1-D int64 count array."""
    if isinstance(X, PacketTrace):
        raise ParameterError("X must be a sequence of observations, not a single trace")
    if isinstance(X, np.ndarray) and X.dtype != object:
        return check_count_array(X)
    items = list(X)
    if items and all(isinstance(x, PacketTrace) for x in items):
        return np.array([observed_count(x, horizon) for x in items], dtype=np.int64)
    return check_count_array(np.asarray(items))


def calibrate_threshold(rate: float, horizon: float, alpha: float) -> float:
    """Chebyshev margin U with P(S - rate*horizon > U | H0) <= alpha."""
    rate = check_positive("rate", rate)
    horizon = check_positive("horizon", horizon)
    alpha = check_open_unit("alpha", alpha)
    return math.sqrt(rate * horizon / alpha)


@dataclass(frozen=True)
class DetectorConfig:
    rate: float
    horizon: float
    alpha: float
    threshold_U: float

    def __post_init__(self):
        check_positive("rate", self.rate)
        check_positive("horizon", self.horizon)
        check_open_unit("alpha", self.alpha)
        check_positive("threshold_U", self.threshold_U, allow_zero=True)

    @classmethod
    def calibrated(cls, rate, horizon, alpha):
        return cls(rate, horizon, alpha, calibrate_threshold(rate, horizon, alpha))


@dataclass(frozen=True)
class DetectorReport:
    decision: Hypothesis
    observed_count: int
    threshold_used: float


@dataclass(frozen=True)
class ErrorEstimate:
    pfa: float
    pmd: float
    trials: int
    min_error_sum: float
    counts0: np.ndarray = field(repr=False, compare=False, default=None)
    counts1: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def error_sum(self) -> float:
        return self.pfa + self.pmd


class CountThresholdDetector(ClassifierMixin, BaseEstimator):
    """Declare H1 when the count reaches ``rate * horizon + U``.

    ``U`` defaults to the Chebyshev calibration for false-alarm level
    ``alpha``; pass ``threshold`` to fix it.
    """

    def __init__(self, rate=1.0, horizon=1.0, alpha=0.05, threshold=None):
        self.rate = rate
        self.horizon = horizon
        self.alpha = alpha
        self.threshold = threshold

    def fit(self, X=None, y=None):
        if self.threshold is None:
            self.threshold_ = calibrate_threshold(self.rate, self.horizon, self.alpha)
        else:
            check_positive("rate", self.rate)
            check_positive("horizon", self.horizon)
            self.threshold_ = check_positive("threshold", self.threshold, allow_zero=True)
        self.cutoff_ = self.rate * self.horizon + self.threshold_
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X):
        check_is_fitted(self, "cutoff_")
        return check_observations(X, self.horizon) - self.cutoff_

    def predict(self, X):
        # Equality goes to H1: H0 is accepted only on a strict S < cutoff.
        return (self.decision_function(X) >= 0).astype(int)

    def report(self, trace) -> DetectorReport:
        check_is_fitted(self, "cutoff_")
        n = observed_count(trace, self.horizon)
        return DetectorReport(Hypothesis(int(n >= self.cutoff_)), n, self.cutoff_)


class PoissonLRTDetector(ClassifierMixin, BaseEstimator):
    """Likelihood-ratio test between Poisson(rate*T) and Poisson((rate+delta)*T) counts.

    ``delta`` may be negative (the slowdown alternative). Ties decide H1.
    """

    def __init__(self, rate=1.0, delta=1.0, horizon=1.0):
        self.rate = rate
        self.delta = delta
        self.horizon = horizon

    def fit(self, X=None, y=None):
        rate = check_positive("rate", self.rate)
        horizon = check_positive("horizon", self.horizon)
        if isinstance(self.delta, bool) or not isinstance(self.delta, Real) or self.delta == 0:
            raise ParameterError(f"delta must be a nonzero real, got {self.delta!r}")
        if rate + self.delta <= 0:
            raise ParameterError("rate + delta must be positive")
        self.log_ratio_slope_ = math.log1p(self.delta / rate)
        self.log_ratio_offset_ = -self.delta * horizon
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X):
        """log of P1(n) / P0(n)."""
        check_is_fitted(self, "log_ratio_slope_")
        n = check_observations(X, self.horizon)
        return n * self.log_ratio_slope_ + self.log_ratio_offset_

    def predict(self, X):
        return (self.decision_function(X) >= 0).astype(int)

    def report(self, trace) -> DetectorReport:
        check_is_fitted(self, "log_ratio_slope_")
        n = observed_count(trace, self.horizon)
        log_ratio = n * self.log_ratio_slope_ + self.log_ratio_offset_
        crossing = -self.log_ratio_offset_ / self.log_ratio_slope_
        return DetectorReport(Hypothesis(int(log_ratio >= 0)), n, crossing)


def min_error_sum(counts0, counts1) -> tuple[float, int, int]:
    """Smallest empirical PFA + PMD over all one-sided integer count thresholds.

    Returns ``(error_sum, threshold, direction)``: with ``direction == +1`` the
    best detector says H1 iff ``count >= threshold``, with ``-1`` iff
    ``count <= threshold``. Every integer between the pooled min and max is
    tried, plus the always-H0 and always-H1 detectors.
    """
    c0 = check_count_array(counts0)
    c1 = check_count_array(counts1)
    if not c0.size or not c1.size:
        raise ParameterError("both samples must be nonempty")
    lo = int(min(c0.min(), c1.min()))
    hi = int(max(c0.max(), c1.max()))
    width = hi - lo + 1
    # cdf[k] = fraction of samples with count <= lo + k - 1, for k = 0..width
    cdf0 = np.concatenate([[0.0], np.cumsum(np.bincount(c0 - lo, minlength=width)) / c0.size])
    cdf1 = np.concatenate([[0.0], np.cumsum(np.bincount(c1 - lo, minlength=width)) / c1.size])
    # H1 iff count >= lo + k:  pfa = 1 - cdf0[k], pmd = cdf1[k]
    upper = 1.0 - cdf0 + cdf1
    # H1 iff count <= lo + k - 1:  pfa = cdf0[k], pmd = 1 - cdf1[k]
    lower = cdf0 + 1.0 - cdf1
    k_up = int(np.argmin(upper))
    k_low = int(np.argmin(lower))
    if upper[k_up] <= lower[k_low]:
        return float(upper[k_up]), lo + k_up, 1
    return float(lower[k_low]), lo + k_low - 1, -1


class EmpiricalThresholdDetector(ClassifierMixin, BaseEstimator):
    """Count threshold chosen to minimize PFA + PMD on labelled samples."""

    def fit(self, X, y):
        counts = check_observations(X)
        y = np.asarray(y)
        if y.shape != counts.shape or not np.isin(y, (0, 1)).all():
            raise ParameterError("y must be 0/1 labels aligned with X")
        self.min_error_sum_, self.threshold_, self.direction_ = min_error_sum(
            counts[y == 0], counts[y == 1]
        )
        self.classes_ = np.array([0, 1])
        return self

    def predict(self, X):
        check_is_fitted(self, "threshold_")
        n = check_observations(X)
        if self.direction_ > 0:
            return (n >= self.threshold_).astype(int)
        return (n <= self.threshold_).astype(int)


def count_detect(trace: PacketTrace, cfg: DetectorConfig) -> DetectorReport:
    detector = CountThresholdDetector(cfg.rate, cfg.horizon, cfg.alpha, cfg.threshold_U).fit()
    return detector.report(trace)


def lrt_count_detect(trace: PacketTrace, rate: float, delta: float, horizon: float) -> DetectorReport:
    return PoissonLRTDetector(rate, delta, horizon).fit().report(trace)


Generator = Callable[[np.random.Generator], Union[PacketTrace, int]]


def simulate_counts(gen: Generator, trials: int, master_seed: int, key: tuple[int, ...] = (),
                    horizon: Optional[float] = None, threads: Optional[int] = None) -> np.ndarray:
    """Counts of ``trials`` independent draws of ``gen``; trial ``i`` uses stream ``(*key, i)``."""

    def one(i):
        return observed_count(gen(trial_rng(master_seed, *key, i)), horizon)

    return np.array(map_trials(one, trials, threads), dtype=np.int64)


def estimate_errors(gen0: Generator, gen1: Generator, detector, trials: int,
                    master_seed: int, key: tuple[int, ...] = (),
                    threads: Optional[int] = None) -> ErrorEstimate:
    """Monte Carlo error rates of ``detector`` plus the best count-threshold error sum.

    ``gen0`` and ``gen1`` take a generator and return one observation under H0
    and H1. Observations are reduced to counts as they are produced, so full
    traces never accumulate in memory. H0 trial ``i`` draws from stream
    ``(*key, 0, i)`` and H1 trial ``i`` from ``(*key, 1, i)``.
    """
    trials = check_count("trials", trials, minimum=1)
    horizon = getattr(detector, "horizon", None)
    counts0 = simulate_counts(gen0, trials, master_seed, (*key, 0), horizon, threads)
    counts1 = simulate_counts(gen1, trials, master_seed, (*key, 1), horizon, threads)
    return errors_from_counts(counts0, counts1, detector)


def errors_from_counts(counts0, counts1, detector) -> ErrorEstimate:
    counts0 = check_count_array(counts0)
    counts1 = check_count_array(counts1)
    if detector is not None:
        check_is_fitted(detector)
        pfa = float(np.mean(detector.predict(counts0) == 1))
        pmd = float(np.mean(detector.predict(counts1) == 0))
    else:
        pfa = pmd = float("nan")
    best, _, _ = min_error_sum(counts0, counts1)
    return ErrorEstimate(pfa, pmd, int(counts0.size), best, counts0, counts1)
