"""FIFO M/M/1 server and the exact likelihood of its departures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive
from .point_process import PacketTrace, SeedLike, _trusted, as_generator

LENGTH_MISMATCH = "length_mismatch"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class QueuePassage:
    arrivals: PacketTrace
    departures: PacketTrace
    service_rate: float

    def sojourn_times(self) -> np.ndarray:
        return self.departures.times - self.arrivals.times


def serve(arrivals: PacketTrace, mu: float, rng: SeedLike) -> QueuePassage:
    """Pass ``arrivals`` through an exponential(mu) FIFO server that starts empty.

    The departure trace's horizon stretches to the last departure if needed.
    """
    mu = check_positive("mu", mu)
    gen = as_generator(rng)
    a = arrivals.times
    service = gen.exponential(1.0 / mu, a.size)
    d = np.empty_like(a)
    prev = -np.inf
    # Plain Lindley recursion: keeps d_i - max(a_i, d_{i-1}) >= 0 exactly in floating point.
    for i, (arrive, s) in enumerate(zip(a.tolist(), service.tolist())):
        prev = max(arrive, prev) + s
        d[i] = prev
    if d.size > 1 and np.any(np.diff(d) <= 0):
        # Only reachable through a zero-length service draw.
        for i in range(1, d.size):
            if d[i] <= d[i - 1]:
                d[i] = np.nextafter(d[i - 1], np.inf)
    horizon = max(arrivals.horizon, float(d[-1])) if d.size else arrivals.horizon
    return QueuePassage(arrivals, _trusted(d, horizon), mu)


def _times(x) -> np.ndarray:
    return x.times if isinstance(x, PacketTrace) else np.asarray(x, dtype=np.float64).reshape(-1)


def implied_service_times(arrivals, departures) -> np.ndarray:
    """Service times a FIFO server must have used: ``d_i - max(a_i, d_{i-1})``."""
    a = _times(arrivals)
    d = _times(departures)
    start = np.maximum(a, np.concatenate([[-np.inf], d[:-1]]))
    return d - start


def passage_log_likelihood(arrivals, departures, mu: float, *, with_reason: bool = False):
    """Log-density of ``departures`` given ``arrivals`` through an M/M/1 FIFO queue.

    Equal to ``n log(mu) - mu * sum(x)`` over the implied service times ``x``,
    or ``-inf`` when some ``x`` is negative (``"infeasible"``) or the lengths
    differ (``"length_mismatch"``). With ``with_reason=True`` a
    ``(value, reason)`` pair is returned, ``reason`` being ``None`` when finite.
    """
    mu = check_positive("mu", mu)
    a = _times(arrivals)
    d = _times(departures)
    if a.size != d.size:
        value, reason = -np.inf, LENGTH_MISMATCH
    else:
        x = implied_service_times(a, d)
        if x.size and x.min() < 0:
            value, reason = -np.inf, INFEASIBLE
        else:
            value, reason = float(x.size * np.log(mu) - mu * x.sum()), None
    return (value, reason) if with_reason else value
