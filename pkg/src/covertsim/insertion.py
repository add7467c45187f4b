"""Packet insertion: Alice superposes a Poisson(delta) stream on the overt Poisson(rate) stream."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._validation import ParameterError, check_count, check_open_unit, check_positive
from .detector import CountThresholdDetector, calibrate_threshold, estimate_errors
from .divergence import insertion_budget
from .point_process import (
    PacketTrace,
    SeedLike,
    as_generator,
    merge_with_origin,
    sample_interarrival,
)


@dataclass(frozen=True)
class InsertionTrial:
    overt: PacketTrace
    covert: PacketTrace
    combined: PacketTrace
    delta: float
    covert_count: int
    # Origin tags stay in the simulator; detectors only ever see ``combined``.
    _covert_mask: np.ndarray = field(repr=False, compare=False)

    def bob_recover(self) -> PacketTrace:
        """Overt traffic left after Bob strips the authenticated covert packets."""
        return PacketTrace(self.combined.times[~self._covert_mask], self.combined.horizon)


def run_insertion_trial(rate: float, delta: float, horizon: float, seed: SeedLike) -> InsertionTrial:
    rate = check_positive("rate", rate)
    delta = check_positive("delta", delta, allow_zero=True)
    horizon = check_positive("horizon", horizon)
    gen = as_generator(seed)
    overt = sample_interarrival(rate, horizon, gen)
    covert = sample_interarrival(delta, horizon, gen) if delta > 0 else PacketTrace.empty(horizon)
    combined, mask = merge_with_origin(overt, covert)
    return InsertionTrial(overt, covert, combined, delta, len(covert), mask)


def converse_packets(rate: float, horizon: float, scale: float = 4.0) -> float:
    """A covert packet count growing faster than sqrt(rate * horizon): scale * (rate*T)^(3/4)."""
    return scale * (rate * horizon) ** 0.75


@dataclass(frozen=True)
class ScalingRow:
    T: float
    delta: float
    covert_packets: float
    min_error_sum: float
    threshold_U: float
    pfa: float
    pmd: float


def throughput_scaling_experiment(
    rate: float,
    T_list: Sequence[float],
    epsilon: Optional[float],
    trials: int,
    seed: int,
    *,
    schedule: str = "budget",
    alpha: float = 0.05,
    trace_level: bool = False,
    threads: Optional[int] = None,
) -> list[ScalingRow]:
    """One row per horizon: the insertion rate, covert packets, and Willie's error rates.

    ``schedule="budget"`` uses the covert budget for ``epsilon``;
    ``schedule="converse"`` inserts ``4 (rate*T)^(3/4)`` packets instead and
    ignores ``epsilon``.
    ``pfa``/``pmd`` belong to the Chebyshev count detector at level ``alpha``;
    ``min_error_sum`` is the best empirical count threshold.

    With ``trace_level=False`` each trial draws its counts directly,
    ``Poisson(rate*T)`` and ``Poisson(rate*T) + Poisson(delta*T)``, which is
    exactly the distribution of the count of a merged trace. Set it to
    ``True`` to simulate and merge full traces.
    """
    rate = check_positive("rate", rate)
    trials = check_count("trials", trials, minimum=1)
    T_list = [check_positive("T", T) for T in T_list]
    if not T_list:
        raise ParameterError("T_list must be nonempty")
    if schedule not in ("budget", "converse"):
        raise ParameterError(f"unknown schedule {schedule!r}")
    if schedule == "budget":
        epsilon = check_open_unit("epsilon", epsilon)

    rows = []
    for idx, T in enumerate(T_list):
        if schedule == "budget":
            delta = insertion_budget(rate, T, epsilon)
        else:
            delta = converse_packets(rate, T) / T
        detector = CountThresholdDetector(rate, T, alpha).fit()
        gen0, gen1 = insertion_generators(rate, delta, T, trace_level)
        est = estimate_errors(gen0, gen1, detector, trials, seed, key=(idx,), threads=threads)
        rows.append(ScalingRow(T, delta, delta * T, est.min_error_sum,
                               calibrate_threshold(rate, T, alpha), est.pfa, est.pmd))
    return rows


def insertion_generators(rate, delta, horizon, trace_level=True):
    """H0/H1 observation generators for the insertion scenario."""
    if trace_level:
        def gen0(rng):
            return sample_interarrival(rate, horizon, rng)

        def gen1(rng):
            return run_insertion_trial(rate, delta, horizon, rng).combined
    else:
        def gen0(rng):
            return int(rng.poisson(rate * horizon))

        def gen1(rng):
            return int(rng.poisson(rate * horizon)) + int(rng.poisson(delta * horizon))
    return gen0, gen1
