"""Poisson packet traces: sampling, superposition, counting, and text dumps.

Random streams
--------------
Every stream is a PCG64 generator seeded through ``numpy.random.SeedSequence``.
A Monte Carlo trial draws from ``SeedSequence(master_seed, spawn_key=key)``
where ``key`` is a tuple of small integers such as ``(hypothesis, trial)``.
Identical seeds and call sequences give bit-identical traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from ._validation import ParameterError, check_count, check_positive

SeedLike = Union[int, np.random.Generator]

_MAX_SEED = 2**64 - 1


def trial_rng(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``(master_seed, key)``."""
    seed = check_count("seed", master_seed)
    if seed > _MAX_SEED:
        raise ParameterError(f"seed must fit in 64 bits, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def as_generator(rng: SeedLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return trial_rng(rng)


@dataclass(frozen=True)
class PacketTrace:
    """Strictly increasing packet timestamps on ``[0, horizon]``.

    The timestamp array is stored read-only so traces can be shared freely.
    """

    times: np.ndarray
    horizon: float
    _checked: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        horizon = check_positive("horizon", self.horizon)
        times = np.array(self.times, dtype=np.float64, copy=True).reshape(-1)
        if not self._checked and times.size:
            if not np.all(np.isfinite(times)):
                raise ParameterError("timestamps must be finite")
            if times[0] < 0 or times[-1] > horizon:
                raise ParameterError(f"timestamps must lie in [0, {horizon}]")
            if np.any(np.diff(times) <= 0):
                raise ParameterError("timestamps must be strictly increasing")
        times.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "horizon", horizon)

    @classmethod
    def empty(cls, horizon: float) -> "PacketTrace":
        return cls(np.empty(0), horizon)

    def __len__(self) -> int:
        return int(self.times.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PacketTrace):
            return NotImplemented
        return self.horizon == other.horizon and np.array_equal(self.times, other.times)

    __hash__ = None

    def interarrivals(self) -> np.ndarray:
        return np.diff(self.times)

    def count(self) -> int:
        return len(self)


def _trusted(times: np.ndarray, horizon: float) -> PacketTrace:
    # Internal constructor for arrays that are valid by construction.
    return PacketTrace(times, horizon, _checked=True)


def sample_interarrival(rate: float, horizon: float, rng: SeedLike) -> PacketTrace:
    """Poisson trace built from exponential gaps; the first point past ``horizon`` is dropped."""
    rate = check_positive("rate", rate)
    horizon = check_positive("horizon", horizon)
    gen = as_generator(rng)
    mean = rate * horizon
    block = int(mean + 6.0 * np.sqrt(mean) + 16)
    chunks = []
    last = 0.0
    while True:
        arrivals = last + np.cumsum(gen.exponential(1.0 / rate, block))
        cut = np.searchsorted(arrivals, horizon, side="right")
        chunks.append(arrivals[:cut])
        if cut < block:
            break
        last = arrivals[-1]
    times = chunks[0] if len(chunks) == 1 else np.concatenate(chunks)
    return _trusted(times, horizon)


def sample_conditional(rate: float, horizon: float, rng: SeedLike) -> PacketTrace:
    """Poisson trace built as ``N ~ Poisson(rate * horizon)`` sorted uniform points."""
    rate = check_positive("rate", rate)
    horizon = check_positive("horizon", horizon)
    gen = as_generator(rng)
    n = gen.poisson(rate * horizon)
    times = np.sort(gen.uniform(0.0, horizon, n))
    # Uniform draws can repeat only with probability ~n^2 * 2^-53.
    if n > 1 and np.any(np.diff(times) <= 0):
        times = np.unique(times)
    return _trusted(times, horizon)


def merge(a: PacketTrace, b: PacketTrace) -> PacketTrace:
    """Superpose two traces on the same horizon.

    An exact tie is broken in source order: the point from ``b`` moves to the
    next representable double, so counts add and times stay strictly increasing.
    """
    if a.horizon != b.horizon:
        raise ParameterError(f"horizons differ: {a.horizon} vs {b.horizon}")
    if not len(b):
        return a
    if not len(a):
        return b
    times, _ = _merge_sorted(a.times, b.times, a.horizon)
    return _trusted(times, a.horizon)


def merge_with_origin(a: PacketTrace, b: PacketTrace) -> tuple[PacketTrace, np.ndarray]:
    """Like :func:`merge`, also returning a mask marking points that came from ``b``."""
    if a.horizon != b.horizon:
        raise ParameterError(f"horizons differ: {a.horizon} vs {b.horizon}")
    times, from_b = _merge_sorted(a.times, b.times, a.horizon)
    return _trusted(times, a.horizon), from_b


def _merge_sorted(x, y, horizon):
    times = np.concatenate([x, y])
    origin = np.concatenate([np.zeros(x.size, bool), np.ones(y.size, bool)])
    order = np.argsort(times, kind="stable")
    times = times[order]
    origin = origin[order]
    if times.size > 1 and np.any(np.diff(times) <= 0):
        times = times.copy()
        for i in range(1, times.size):
            if times[i] <= times[i - 1]:
                times[i] = np.nextafter(times[i - 1], np.inf)
        if times[-1] > horizon:
            raise ParameterError("tie at the horizon cannot be separated")
    return times, origin


def count_in(trace: PacketTrace, window: tuple[float, float] | None = None) -> int:
    """Number of timestamps in the closed window ``[t0, t1]`` (whole horizon by default)."""
    if window is None:
        return len(trace)
    t0, t1 = window
    if not 0 <= t0 <= t1 <= trace.horizon:
        raise ParameterError(f"window {window} must satisfy 0 <= t0 <= t1 <= {trace.horizon}")
    lo = np.searchsorted(trace.times, t0, side="left")
    hi = np.searchsorted(trace.times, t1, side="right")
    return int(hi - lo)


def restrict(trace: PacketTrace, horizon: float) -> PacketTrace:
    """The part of ``trace`` on ``[0, horizon]``, re-horizoned."""
    horizon = check_positive("horizon", horizon)
    cut = np.searchsorted(trace.times, horizon, side="right")
    return _trusted(trace.times[:cut], horizon)


def write_trace(trace: PacketTrace, path) -> None:
    lines = [f"{t:.9g}" for t in trace.times]
    lines.append(f"# horizon={trace.horizon:.9g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_trace(path) -> PacketTrace:
    horizon = None
    times = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            if key.strip() == "horizon":
                horizon = float(value)
            continue
        times.append(float(line))
    if horizon is None:
        raise ParameterError(f"{path}: missing '# horizon=' line")
    return PacketTrace(np.array(times), horizon)
