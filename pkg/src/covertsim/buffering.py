"""Covert buffering by slowing the overt stream from rate to rate - delta."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._validation import ParameterError, check_count, check_positive
from .detector import ErrorEstimate, PoissonLRTDetector, estimate_errors
from .divergence import buffering_budget
from .point_process import PacketTrace, _trusted, sample_interarrival


@dataclass(frozen=True)
class BufferTimeline:
    """Buffer occupancy over the window.

    ``event_times`` are sorted; ``event_steps`` holds +1 for an arrival and -1
    for a release. At equal times the arrival is listed first.
    """

    event_times: np.ndarray
    event_steps: np.ndarray
    arrivals: int
    releases: int
    occupancy_at_end: int
    max_occupancy: int
    min_occupancy: int
    pending: np.ndarray  # arrival times of packets still held at the window end

    def occupancy(self) -> np.ndarray:
        return np.cumsum(self.event_steps)


def slowdown(overt: PacketTrace, rate: float, delta: float, window: float):
    """Release the i-th arrival at ``arrival_i * rate / (rate - delta)``, keeping releases in ``[0, window]``.

    Returns ``(released, timeline)``. A rescaled Poisson(rate) process is
    Poisson(rate - delta), and since the factor is at least 1 every packet
    leaves no earlier than it arrived.
    """
    rate = check_positive("rate", rate)
    delta = check_positive("delta", delta, allow_zero=True)
    window = check_positive("window", window)
    if delta >= rate:
        raise ParameterError(f"delta must be below rate, got delta={delta}, rate={rate}")
    if overt.horizon < window:
        raise ParameterError(f"overt horizon {overt.horizon} shorter than window {window}")

    arrivals = overt.times[: np.searchsorted(overt.times, window, side="right")]
    scaled = arrivals * (rate / (rate - delta))
    n_rel = int(np.searchsorted(scaled, window, side="right"))
    released = scaled[:n_rel]

    times = np.concatenate([arrivals, released])
    steps = np.concatenate([np.ones(arrivals.size, np.int64), -np.ones(n_rel, np.int64)])
    order = np.lexsort((-steps, times))
    times, steps = times[order], steps[order]
    occ = np.cumsum(steps)
    if occ.size and occ.min() < 0:
        raise AssertionError("buffer occupancy went negative")
    timeline = BufferTimeline(
        event_times=times,
        event_steps=steps,
        arrivals=int(arrivals.size),
        releases=n_rel,
        occupancy_at_end=int(arrivals.size - n_rel),
        max_occupancy=int(occ.max()) if occ.size else 0,
        min_occupancy=int(occ.min()) if occ.size else 0,
        pending=arrivals[n_rel:].copy(),
    )
    return _trusted(released, window), timeline


def buffering_generators(rate, delta, window, trace_level=True):
    if trace_level:
        def gen0(rng):
            return sample_interarrival(rate, window, rng)

        def gen1(rng):
            return slowdown(sample_interarrival(rate, window, rng), rate, delta, window)[0]
    else:
        def gen0(rng):
            return int(rng.poisson(rate * window))

        def gen1(rng):
            return int(rng.poisson((rate - delta) * window))
    return gen0, gen1


def buffering_covertness_check(
    rate: float,
    window: float,
    epsilon: float,
    trials: int,
    seed: int,
    *,
    delta: Optional[float] = None,
    trace_level: bool = True,
    key: tuple[int, ...] = (),
    threads: Optional[int] = None,
) -> ErrorEstimate:
    """Willie's error rates against slowdown on ``[0, window]``.

    Willie watches the buffering window alone. ``delta`` defaults to the
    covert budget for ``epsilon``. ``pfa``/``pmd`` are those of the
    likelihood-ratio count test (NaN when ``delta == 0``).
    """
    trials = check_count("trials", trials, minimum=1)
    if delta is None:
        delta = buffering_budget(rate, window, epsilon)
    delta = check_positive("delta", delta, allow_zero=True)
    detector = PoissonLRTDetector(rate, -delta, window).fit() if delta > 0 else None
    gen0, gen1 = buffering_generators(rate, delta, window, trace_level)
    return estimate_errors(gen0, gen1, detector, trials, seed, key=key, threads=threads)
