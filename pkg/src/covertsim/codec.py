"""Two-phase covert timing channel: codebook, phase plan, transmission, ML decoding.

Alice slows the overt stream on ``[0, psi*T]`` to bank ``m`` packets, then on
``[psi*T, T]`` releases packets at the times of a secret codeword drawn from a
Poisson(rate) process. Bob sees the releases through an M/M/1 queue and picks
the most likely codeword.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import erfinv
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._runner import map_trials
from ._validation import ParameterError, check_count, check_open_unit, check_positive
from .buffering import slowdown
from .detector import errors_from_counts
from .divergence import buffering_budget
from .params import ChannelParams
from .point_process import (
    PacketTrace,
    SeedLike,
    _trusted,
    as_generator,
    restrict,
    sample_conditional,
    sample_interarrival,
    trial_rng,
)
from .queue import passage_log_likelihood, serve


# -- closed forms -----------------------------------------------------------

def capacity(rate: float, mu: float) -> float:
    """Timing capacity of the exponential server at output rate ``rate``, nats/s."""
    rate = check_positive("rate", rate)
    mu = check_positive("mu", mu)
    if rate > mu:
        raise ParameterError(f"rate must not exceed mu, got rate={rate}, mu={mu}")
    return rate * math.log(mu / rate)


class CodebookSize(NamedTuple):
    log_m: float
    m: Optional[float]  # None when exp(log_m) overflows a double


def codebook_size(rate: float, horizon: float, psi: float, mu: float) -> CodebookSize:
    horizon = check_positive("horizon", horizon)
    psi = check_open_unit("psi", psi)
    log_m = (1.0 - psi) * horizon * capacity(rate, mu)
    try:
        m = math.exp(log_m)
    except OverflowError:
        m = None
    return CodebookSize(log_m, m)


def predict_failure(m: float, steps: float) -> float:
    """Limiting failure probability for ``m`` banked packets over ``steps`` walk steps."""
    m = check_positive("m", m, allow_zero=True)
    steps = check_positive("steps", steps)
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    return 1.0 - math.erf(m / math.sqrt(2.0 * steps))


def chernoff_event_bound(rate: float, window: float) -> float:
    """Bound on P(K >= 4 rate*window) for K ~ Poisson(2 rate*window)."""
    load = check_positive("rate", rate) * check_positive("window", window)
    return (math.e / 4.0) ** (2.0 * load)


@dataclass(frozen=True)
class PhasePlan:
    psi: float
    epsilon: float
    zeta: float
    horizon: float = 1.0

    @property
    def ratio(self) -> float:
        return self.psi / (1.0 - self.psi)

    @property
    def buffer_window(self) -> float:
        return self.psi * self.horizon

    @property
    def transmit_window(self) -> float:
        return self.horizon - self.buffer_window


def plan_phases(epsilon: float, zeta: float, horizon: float = 1.0) -> PhasePlan:
    """Buffering fraction psi with psi/(1-psi) = (2/epsilon * erfinv(1 - zeta/2))^2."""
    epsilon = check_open_unit("epsilon", epsilon)
    zeta = check_open_unit("zeta", zeta)
    horizon = check_positive("horizon", horizon)
    ratio = (2.0 / epsilon * float(erfinv(1.0 - zeta / 2.0))) ** 2
    return PhasePlan(ratio / (1.0 + ratio), epsilon, zeta, horizon)


# -- codebook ---------------------------------------------------------------

@dataclass(frozen=True)
class Codebook:
    codewords: tuple
    rate: float
    window: float
    seed: int

    def __len__(self) -> int:
        return len(self.codewords)

    def __getitem__(self, index) -> PacketTrace:
        return self.codewords[index]


def generate_codebook(M: int, rate: float, window: float, seed: int) -> Codebook:
    """``M`` independent Poisson(rate) codewords on ``[0, window]``; codeword ``l`` uses stream ``(seed, l)``."""
    M = check_count("M", M, minimum=1)
    rate = check_positive("rate", rate)
    window = check_positive("window", window)
    words = tuple(sample_conditional(rate, window, trial_rng(seed, l)) for l in range(M))
    return Codebook(words, rate, window, int(seed))


def write_codebook(codebook: Codebook, path) -> None:
    lines = [f"M={len(codebook)} lambda={codebook.rate:.9g} "
             f"window={codebook.window:.9g} seed={codebook.seed}"]
    lines += [" ".join(f"{t:.9g}" for t in word.times) for word in codebook.codewords]
    Path(path).write_text("\n".join(lines) + "\n")


def read_codebook(path) -> Codebook:
    lines = Path(path).read_text().split("\n")
    try:
        header = dict(item.split("=", 1) for item in lines[0].split())
        M = int(header["M"])
        rate = float(header["lambda"])
        window = float(header["window"])
        seed = int(header["seed"])
    except (KeyError, ValueError, IndexError) as exc:
        raise ParameterError(f"{path}: malformed codebook header") from exc
    body = lines[1:1 + M]
    if len(body) != M:
        raise ParameterError(f"{path}: expected {M} codewords, found {len(body)}")
    words = tuple(PacketTrace(np.array([float(x) for x in line.split()]), window) for line in body)
    return Codebook(words, rate, window, seed)


# -- transmission -----------------------------------------------------------

@dataclass(frozen=True)
class TransmissionOutcome:
    released: PacketTrace
    failure: bool
    buffer_min: int
    final_occupancy: int
    sent_index: int
    decoded_index: Optional[int] = None


def transmit(codeword: PacketTrace, initial_buffer: int, jack_arrivals: PacketTrace,
             phase_offset: float, sent_index: int = 0) -> TransmissionOutcome:
    """Release packets at ``phase_offset + w_j`` while banking Jack's later arrivals.

    Only arrivals strictly after ``phase_offset`` count as phase-two arrivals;
    an arrival at the same instant as a release is available for it. The
    transmission stops at the first release that finds the buffer empty.
    """
    m = check_count("initial_buffer", initial_buffer)
    offset = check_positive("phase_offset", phase_offset, allow_zero=True)
    releases = offset + codeword.times
    end = offset + codeword.horizon
    incoming = jack_arrivals.times
    incoming = incoming[np.searchsorted(incoming, offset, side="right"):]
    available = m + np.searchsorted(incoming, releases, side="right")
    before = available - np.arange(releases.size)  # occupancy just before release j
    empty = np.flatnonzero(before <= 0)
    if empty.size:
        sent = int(empty[0])
        failure = True
        buffer_min = 0
    else:
        sent = releases.size
        failure = False
        buffer_min = int(min(m, (before - 1).min())) if sent else m
    arrived = int(np.searchsorted(incoming, end, side="right"))
    return TransmissionOutcome(
        released=_trusted(releases[:sent], end),
        failure=failure,
        buffer_min=buffer_min,
        final_occupancy=m + arrived - sent,
        sent_index=sent_index,
    )


# -- decoding ---------------------------------------------------------------

def codeword_log_likelihoods(departures, codebook: Codebook, mu: float,
                             phase_offset: float) -> np.ndarray:
    d = departures.times if isinstance(departures, PacketTrace) else np.asarray(departures, float)
    out = np.full(len(codebook), -np.inf)
    for l, word in enumerate(codebook.codewords):
        if len(word) == d.size:
            out[l] = passage_log_likelihood(phase_offset + word.times, d, mu)
    return out


def decode_ml(departures, codebook: Codebook, mu: float, phase_offset: float) -> Optional[int]:
    """Most likely codeword index, lowest index on ties; ``None`` if no codeword is feasible."""
    if not len(codebook):
        raise ParameterError("codebook is empty")
    scores = codeword_log_likelihoods(departures, codebook, mu, phase_offset)
    best = int(np.argmax(scores))
    return None if scores[best] == -np.inf else best


class MLTimingDecoder(BaseEstimator):
    """Maximum-likelihood decoder for codewords seen through an M/M/1 queue.

    ``fit`` takes the shared codebook; ``predict`` maps departure traces to
    codeword indices, with ``-1`` where no codeword is feasible.
    """

    def __init__(self, service_rate=1.0, phase_offset=0.0):
        self.service_rate = service_rate
        self.phase_offset = phase_offset

    def fit(self, X, y=None):
        if not isinstance(X, Codebook) or not len(X):
            raise ParameterError("fit expects a nonempty Codebook")
        check_positive("service_rate", self.service_rate)
        check_positive("phase_offset", self.phase_offset, allow_zero=True)
        self.codebook_ = X
        return self

    def decision_function(self, X):
        check_is_fitted(self, "codebook_")
        return np.array([codeword_log_likelihoods(d, self.codebook_, self.service_rate,
                                                  self.phase_offset) for d in X])

    def predict(self, X):
        scores = self.decision_function(X)
        best = np.argmax(scores, axis=1)
        feasible = scores[np.arange(len(best)), best] > -np.inf
        return np.where(feasible, best, -1)


# -- end-to-end -------------------------------------------------------------

@dataclass(frozen=True)
class TrialRecord:
    sent_index: int
    decoded_index: Optional[int]
    failure: bool
    buffer_min: int
    buffer_max: int
    m_realized: int
    m_planned: float
    phase2_count: int
    observed_count: int
    final_occupancy: int
    released: PacketTrace

    @property
    def decode_error(self) -> bool:
        return self.decoded_index != self.sent_index


def run_scenario2(params: ChannelParams, M: int, seed: SeedLike,
                  plan: Optional[PhasePlan] = None, decode: bool = True) -> TrialRecord:
    """One end-to-end trial: slowdown, codeword release, queue, ML decoding.

    ``released`` is Willie's view over ``[0, T]``. The queue starts empty at
    the phase boundary and carries only the codeword's packets. Packets still
    buffered at ``T`` are dropped. With ``decode=False`` the queue and decoder
    are skipped and ``decoded_index`` is ``None``.
    """
    mu = params.require_queue()
    M = check_count("M", M, minimum=1)
    gen = as_generator(seed)
    T = params.horizon
    if plan is None:
        plan = plan_phases(params.epsilon, params.zeta, T)
    W = plan.buffer_window
    delta = buffering_budget(params.rate, W, params.epsilon)

    jack = sample_interarrival(params.rate, T, gen)
    released1, timeline = slowdown(restrict(jack, W), params.rate, delta, W)
    m = timeline.occupancy_at_end

    codebook = generate_codebook(M, params.rate, plan.transmit_window, int(gen.integers(2**63)))
    sent = int(gen.integers(M))
    outcome = transmit(codebook[sent], m, jack, W, sent_index=sent)

    decoded = None
    if decode:
        departures = serve(outcome.released, mu, gen).departures
        decoded = decode_ml(departures, codebook, mu, W)

    full = PacketTrace(np.concatenate([released1.times, outcome.released.times]), T)
    return TrialRecord(
        sent_index=sent,
        decoded_index=decoded,
        failure=outcome.failure,
        buffer_min=outcome.buffer_min,
        buffer_max=max(timeline.max_occupancy, m),
        m_realized=m,
        m_planned=params.epsilon * math.sqrt(2.0 * params.rate * W),
        phase2_count=len(outcome.released),
        observed_count=len(full),
        final_occupancy=outcome.final_occupancy,
        released=full,
    )


@dataclass(frozen=True)
class Scenario2Summary:
    psi: float
    m_mean: float
    m_planned: float
    failure_rate: float
    decode_error_rate: float
    min_error_sum: float
    trials: int
    phase2_counts: np.ndarray


def run_scenario2_trials(params: ChannelParams, M: int, trials: int, seed: int,
                         decode: bool = True, threads: Optional[int] = None) -> Scenario2Summary:
    """Repeat :func:`run_scenario2`; trial ``i`` uses stream ``(seed, 1, i)``.

    ``min_error_sum`` compares Willie's full-horizon counts against Poisson(rate*T)
    traces drawn on streams ``(seed, 0, i)``. Failed transmissions count as
    decode errors.
    """
    trials = check_count("trials", trials, minimum=1)
    plan = plan_phases(params.epsilon, params.zeta, params.horizon)

    def active(i):
        rec = run_scenario2(params, M, trial_rng(seed, 1, i), plan, decode)
        return rec.m_realized, rec.failure, rec.decode_error, rec.observed_count, rec.phase2_count

    def silent(i):
        return len(sample_interarrival(params.rate, params.horizon, trial_rng(seed, 0, i)))

    rows = np.array(map_trials(active, trials, threads), dtype=np.int64)
    counts0 = np.array(map_trials(silent, trials, threads), dtype=np.int64)
    est = errors_from_counts(counts0, rows[:, 3], None)
    return Scenario2Summary(
        psi=plan.psi,
        m_mean=float(rows[:, 0].mean()),
        m_planned=params.epsilon * math.sqrt(2.0 * params.rate * plan.buffer_window),
        failure_rate=float(rows[:, 1].mean()),
        decode_error_rate=float(rows[:, 2].mean()) if decode else float("nan"),
        min_error_sum=est.min_error_sum,
        trials=trials,
        phase2_counts=rows[:, 4],
    )
