"""``covertsim`` command-line driver.

Every subcommand writes one CSV (header always present) and prints one
summary line. Exit status: 0 success, 1 capability error, 2 config error.
Set ``COVERTSIM_THREADS`` to run trials on several threads; output does not
depend on it.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import codec, divergence, insertion, walk
from ._validation import CapabilityError, ParameterError
from .buffering import buffering_covertness_check
from .config import ConfigError, ExperimentConfig, parse_config
from .params import ChannelParams

COLUMNS = {
    "kl": ["T", "delta", "covert_packets", "kl_exact", "kl_bound", "tv_floor",
           "kl_buffering_exact", "kl_buffering_bound"],
    "detect": ["T", "covert_packets", "threshold_U", "pfa", "pmd", "min_error_sum"],
    "sqrtlaw": ["T", "delta", "covert_packets", "min_error_sum"],
    "buffering": ["T", "delta", "buffered_packets", "min_error_sum"],
    "walk": ["m", "steps", "mc_survival", "exact_survival", "erf_limit"],
    "timing": ["T", "psi", "transmit_window", "m_planned", "capacity", "log_codebook_size",
               "chernoff_bound", "predicted_failure", "failure_rate"],
    "e2e": ["psi", "m_mean", "failure_rate", "decode_error_rate", "min_error_sum"],
}

# Columns formatted as probabilities (6 decimals); everything else gets 9 significant digits.
PROBABILITY_COLUMNS = {
    "tv_floor", "pfa", "pmd", "min_error_sum", "mc_survival", "exact_survival", "erf_limit",
    "psi", "chernoff_bound", "predicted_failure", "failure_rate", "decode_error_rate",
}

HELP = {
    "kl": "closed-form divergences and error floors for the insertion budget",
    "detect": "Chebyshev count detector against a 4(lambda T)^(3/4) insertion",
    "sqrtlaw": "insertion at the covert budget across horizons",
    "buffering": "slowdown at the covert budget across buffering windows",
    "walk": "random-walk survival: Monte Carlo, exact, erf limit",
    "timing": "two-phase plan, closed forms, and transmission failure rate",
    "e2e": "full pipeline: buffering, codeword release, M/M/1 queue, ML decoding",
}


def _fmt(column, value):
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if column in PROBABILITY_COLUMNS:
        return f"{value:.6f}"
    return f"{value:.9g}"


def _rows_kl(cfg):
    for T in cfg.T:
        delta = divergence.insertion_budget(cfg.lam, T, cfg.epsilon)
        exact, bound = divergence.kl_bound_insertion(cfg.lam, delta, T)
        b_exact, b_bound = divergence.kl_bound_buffering(cfg.lam, delta, T)
        yield [T, delta, delta * T, exact, bound, divergence.tv_error_floor(exact).value,
               b_exact, b_bound]


def _rows_detect(cfg):
    rows = insertion.throughput_scaling_experiment(
        cfg.lam, cfg.T, None, cfg.trials, cfg.seed, schedule="converse",
        alpha=cfg.alpha, trace_level=cfg.traces)
    for r in rows:
        yield [r.T, r.covert_packets, r.threshold_U, r.pfa, r.pmd, r.min_error_sum]


def _rows_sqrtlaw(cfg):
    rows = insertion.throughput_scaling_experiment(
        cfg.lam, cfg.T, cfg.epsilon, cfg.trials, cfg.seed, alpha=cfg.alpha,
        trace_level=cfg.traces)
    for r in rows:
        yield [r.T, r.delta, r.covert_packets, r.min_error_sum]


def _rows_buffering(cfg):
    for idx, W in enumerate(cfg.T):
        delta = divergence.buffering_budget(cfg.lam, W, cfg.epsilon)
        est = buffering_covertness_check(cfg.lam, W, cfg.epsilon, cfg.trials, cfg.seed,
                                         delta=delta, trace_level=cfg.traces, key=(idx,))
        yield [W, delta, delta * W, est.min_error_sum]


def _rows_walk(cfg):
    result = walk.simulate_survival(cfg.m, cfg.steps, cfg.trials, cfg.seed)
    yield [cfg.m, cfg.steps, result.survival_rate, walk.exact_survival(cfg.m, cfg.steps),
           walk.erf_limit(cfg.m, cfg.steps)]


def _rows_timing(cfg):
    for idx, T in enumerate(cfg.T):
        params = ChannelParams(cfg.lam, T, cfg.epsilon, cfg.zeta, cfg.mu)
        plan = codec.plan_phases(cfg.epsilon, cfg.zeta, T)
        Tp = plan.transmit_window
        m_planned = cfg.epsilon * math.sqrt(2 * cfg.lam * plan.buffer_window)
        steps = max(1.0, 4 * cfg.lam * Tp)
        summary = codec.run_scenario2_trials(params, 1, cfg.trials, cfg.seed + idx, decode=False)
        yield [T, plan.psi, Tp, m_planned, codec.capacity(cfg.lam, cfg.mu),
               codec.codebook_size(cfg.lam, T, plan.psi, cfg.mu).log_m,
               codec.chernoff_event_bound(cfg.lam, Tp),
               codec.predict_failure(m_planned, steps), summary.failure_rate]


def _rows_e2e(cfg):
    params = ChannelParams(cfg.lam, cfg.T[0], cfg.epsilon, cfg.zeta, cfg.mu)
    s = codec.run_scenario2_trials(params, cfg.M, cfg.trials, cfg.seed)
    yield [s.psi, s.m_mean, s.failure_rate, s.decode_error_rate, s.min_error_sum]


ROWS = {
    "kl": _rows_kl,
    "detect": _rows_detect,
    "sqrtlaw": _rows_sqrtlaw,
    "buffering": _rows_buffering,
    "walk": _rows_walk,
    "timing": _rows_timing,
    "e2e": _rows_e2e,
}


def run(cfg: ExperimentConfig) -> tuple[Path, list]:
    """Run the experiment and write its CSV; returns ``(path, rows)``."""
    name = cfg.cli_scenario
    columns = COLUMNS[name]
    rows = [[_fmt(c, v) for c, v in zip(columns, row)] for row in ROWS[name](cfg)]
    path = Path(cfg.output_path or f"{name}.csv")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)
    return path, rows


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covertsim", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name, columns in COLUMNS.items():
        p = sub.add_parser(name, help=HELP[name],
                           description=f"{HELP[name]}. CSV columns: {','.join(columns)}")
        p.add_argument("--config", help="file of 'key = value' lines; flags override it")
        p.add_argument("--lambda", dest="lambda", type=str, help="overt rate (packets/s)")
        p.add_argument("--mu", type=str, help="service rate of the M/M/1 queue")
        p.add_argument("--T", type=str, help="horizon(s) in seconds, comma separated")
        p.add_argument("--epsilon", type=str, help="covertness parameter in (0, 1)")
        p.add_argument("--zeta", type=str, help="reliability parameter in (0, 1)")
        p.add_argument("--alpha", type=str, help="Willie's false-alarm level")
        p.add_argument("--trials", type=str)
        p.add_argument("--M", type=str, help="codebook size")
        p.add_argument("--seed", type=str)
        p.add_argument("--m", type=str, help="walk barrier offset")
        p.add_argument("--steps", type=str, help="walk length")
        p.add_argument("--traces", action="store_const", const="true",
                       help="simulate full packet traces instead of drawing counts")
        p.add_argument("--out", dest="output_path", type=str, help="CSV path")
    return parser


def main(argv=None) -> int:
    args = vars(build_parser().parse_args(argv))
    config_path = args.pop("config")
    try:
        cfg = parse_config(config_path, args)
        path, rows = run(cfg)
    except (ConfigError, ParameterError) as exc:
        print(f"covertsim: config error: {exc}", file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"covertsim: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"covertsim: {exc}", file=sys.stderr)
        return 1
    print(f"{cfg.cli_scenario}: {len(rows)} row(s) -> {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
