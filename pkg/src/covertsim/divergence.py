"""Poisson relative entropy and covertness budgets.

All divergences are in nats (natural logarithm throughout).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from ._validation import ParameterError, check_open_unit, check_positive


class KLBound(NamedTuple):
    exact: float
    bound: float


class ErrorFloor(NamedTuple):
    """Lower bound on PFA + PMD; ``vacuous`` when it is not positive."""

    value: float
    vacuous: bool


def _u_minus_log1p(u: float) -> float:
    """u - ln(1 + u) for u > -1, without cancellation near 0."""
    if abs(u) < 1e-2:
        # alternating series sum_{k>=2} (-1)^k u^k / k
        return sum((-1) ** k * u**k / k for k in range(2, 14))
    return u - math.log1p(u)


def kl_poisson(mean1: float, mean2: float) -> float:
    """D(Poisson(mean1) || Poisson(mean2)) in nats."""
    mean1 = check_positive("mean1", mean1)
    mean2 = check_positive("mean2", mean2)
    # mean2 - mean1 + mean1 ln(mean1/mean2) = mean1 * (u - ln(1+u)), u = mean2/mean1 - 1
    return mean1 * _u_minus_log1p((mean2 - mean1) / mean1)


def insertion_budget(rate: float, horizon: float, epsilon: float) -> float:
    """Insertion rate that keeps sqrt(D/2) <= epsilon against a rate-``rate`` Poisson stream."""
    rate = check_positive("rate", rate)
    horizon = check_positive("horizon", horizon)
    epsilon = check_open_unit("epsilon", epsilon)
    return epsilon * math.sqrt(2.0 * rate / horizon)


def buffering_budget(rate: float, window: float, epsilon: float) -> float:
    """Slowdown over a buffering window of length ``window``.

    Same value as :func:`insertion_budget`; the window is the buffering phase,
    not the full horizon.
    """
    delta = insertion_budget(rate, window, epsilon)
    if delta >= rate:
        raise ParameterError(
            f"slowdown {delta:.6g} must stay below the rate {rate}; lengthen the window"
        )
    return delta


def kl_bound_insertion(rate: float, delta: float, horizon: float) -> KLBound:
    """Exact D(P0 || P1) for counts under rate vs rate + delta, and its quadratic bound."""
    rate = check_positive("rate", rate)
    delta = check_positive("delta", delta, allow_zero=True)
    horizon = check_positive("horizon", horizon)
    # delta*T - rate*T ln(1 + delta/rate)
    exact = rate * horizon * _u_minus_log1p(delta / rate)
    return KLBound(exact, delta**2 * horizon / rate)


def kl_bound_buffering(rate: float, delta: float, horizon: float) -> KLBound:
    """Exact D(P1 || P0) for counts under rate - delta vs rate, and its bound."""
    rate = check_positive("rate", rate)
    delta = check_positive("delta", delta, allow_zero=True)
    horizon = check_positive("horizon", horizon)
    if delta >= rate:
        raise ParameterError(f"delta must be below rate, got delta={delta}, rate={rate}")
    slow = rate - delta
    # delta*T - (rate-delta)*T ln(1 + delta/(rate-delta))
    exact = slow * horizon * _u_minus_log1p(delta / slow)
    return KLBound(exact, horizon * delta**2 / (2.0 * slow))


def tv_error_floor(kl: float) -> ErrorFloor:
    kl = check_positive("kl", kl, allow_zero=True)
    value = 1.0 - math.sqrt(kl / 2.0)
    return ErrorFloor(value, value <= 0.0)


@dataclass(frozen=True)
class CovertBudget:
    epsilon: float
    delta: float
    horizon: float
    base_rate: float

    def __post_init__(self):
        check_open_unit("epsilon", self.epsilon)
        check_positive("delta", self.delta, allow_zero=True)
        check_positive("horizon", self.horizon)
        check_positive("base_rate", self.base_rate)
        if self.delta >= self.base_rate:
            raise ParameterError("delta must be below base_rate")

    @classmethod
    def for_insertion(cls, rate, horizon, epsilon):
        return cls(epsilon, insertion_budget(rate, horizon, epsilon), horizon, rate)

    @classmethod
    def for_buffering(cls, rate, window, epsilon):
        return cls(epsilon, buffering_budget(rate, window, epsilon), window, rate)

    @property
    def covert_packets(self) -> float:
        return self.delta * self.horizon


@dataclass(frozen=True)
class DivergenceReport:
    kl_nats: float
    tv_bound: float

    @classmethod
    def from_kl(cls, kl: float) -> "DivergenceReport":
        return cls(kl, tv_error_floor(kl).value)
