"""Symmetric +/-1 random walk: survival below a barrier, simulated and exact.

The walker starts at 0; a failure is the first visit to ``m + 1``. Survival
over ``k`` steps is the event that the running maximum stays at or below ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import binom

from ._runner import map_trials
from ._validation import CapabilityError, check_count
from .point_process import trial_rng

EXACT_MAX_STEPS = 10_000

# Trials per random stream; fixed so results do not depend on thread count.
_CELLS_PER_CHUNK = 1 << 22


@dataclass(frozen=True)
class WalkResult:
    m: int
    steps: int
    trials: int
    survival_rate: float

    @property
    def failure_rate(self) -> float:
        return 1.0 - self.survival_rate

    @property
    def std_error(self) -> float:
        p = self.survival_rate
        return math.sqrt(max(p * (1 - p), 0.0) / self.trials)


def simulate_survival(m: int, steps: int, trials: int, seed: int,
                      threads: Optional[int] = None) -> WalkResult:
    m = check_count("m", m)
    steps = check_count("steps", steps, minimum=1)
    trials = check_count("trials", trials, minimum=1)
    if m >= steps:
        return WalkResult(m, steps, trials, 1.0)
    per_chunk = max(1, _CELLS_PER_CHUNK // steps)
    n_chunks = -(-trials // per_chunk)

    def chunk(c):
        size = min(per_chunk, trials - c * per_chunk)
        rng = trial_rng(seed, c)
        moves = rng.integers(0, 2, size=(size, steps), dtype=np.int8) * 2 - 1
        peak = np.cumsum(moves, axis=1, dtype=np.int32).max(axis=1)
        return int(np.count_nonzero(peak <= m))

    survivors = sum(map_trials(chunk, n_chunks, threads))
    return WalkResult(m, steps, trials, survivors / trials)


def exact_survival(m: int, steps: int) -> float:
    """P(max of the first ``steps`` partial sums <= m), by the reflection principle.

    ``P(S_k <= m) - P(S_k >= m + 2)`` with ``S_k = 2 X - k``, ``X ~ Binomial(k, 1/2)``.
    """
    m = check_count("m", m)
    steps = check_count("steps", steps, minimum=1)
    if steps > EXACT_MAX_STEPS:
        raise CapabilityError(f"exact sums are limited to {EXACT_MAX_STEPS} steps, got {steps}")
    below = binom.cdf((m + steps) // 2, steps, 0.5)
    above = binom.sf(-(-(m + steps + 2) // 2) - 1, steps, 0.5)
    return float(min(1.0, max(0.0, below - above)))


def erf_limit(m: float, steps: int) -> float:
    return math.erf(m / math.sqrt(2.0 * steps))
