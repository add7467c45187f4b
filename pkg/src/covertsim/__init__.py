"""Covert communication on Poisson packet channels.

Packet insertion under a square-root budget, covert buffering by slowdown,
and a two-phase covert timing channel through an M/M/1 queue, together with
Willie's count detectors and the closed forms that predict their behaviour.
"""

from ._validation import CapabilityError, ParameterError
from .buffering import BufferTimeline, buffering_covertness_check, slowdown
from .codec import (
    Codebook,
    MLTimingDecoder,
    PhasePlan,
    TransmissionOutcome,
    TrialRecord,
    capacity,
    chernoff_event_bound,
    codebook_size,
    decode_ml,
    generate_codebook,
    plan_phases,
    predict_failure,
    read_codebook,
    run_scenario2,
    run_scenario2_trials,
    transmit,
    write_codebook,
)
from .detector import (
    CountThresholdDetector,
    DetectorConfig,
    DetectorReport,
    EmpiricalThresholdDetector,
    ErrorEstimate,
    Hypothesis,
    PoissonLRTDetector,
    calibrate_threshold,
    count_detect,
    estimate_errors,
    lrt_count_detect,
    min_error_sum,
)
from .divergence import (
    CovertBudget,
    DivergenceReport,
    buffering_budget,
    insertion_budget,
    kl_bound_buffering,
    kl_bound_insertion,
    kl_poisson,
    tv_error_floor,
)
from .insertion import InsertionTrial, run_insertion_trial, throughput_scaling_experiment
from .params import ChannelParams
from .point_process import (
    PacketTrace,
    count_in,
    merge,
    read_trace,
    sample_conditional,
    sample_interarrival,
    trial_rng,
    write_trace,
)
from .queue import QueuePassage, passage_log_likelihood, serve
from .walk import WalkResult, exact_survival, simulate_survival

__version__ = "0.1.0"
