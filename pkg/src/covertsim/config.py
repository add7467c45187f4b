"""Experiment configuration: ``key = value`` files merged with command-line flags."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

SCENARIOS = ("kl", "detect", "insertion", "sqrtlaw", "buffering", "walk", "timing", "e2e")

REQUIRED = {
    "kl": ("lambda", "T", "epsilon"),
    "detect": ("lambda", "T"),
    "insertion": ("lambda", "T", "epsilon"),
    "sqrtlaw": ("lambda", "T", "epsilon"),
    "buffering": ("lambda", "T", "epsilon"),
    "walk": ("m", "steps"),
    "timing": ("lambda", "mu", "T", "epsilon", "zeta"),
    "e2e": ("lambda", "mu", "T", "epsilon", "zeta", "M"),
}

_FLOATS = ("lambda", "mu", "epsilon", "zeta", "alpha")
_INTS = ("trials", "M", "seed", "m", "steps")
KEYS = ("scenario", "T", "output_path", "traces") + _FLOATS + _INTS

_DEFAULTS = {"alpha": 0.05, "trials": 10_000, "seed": 0, "traces": False}


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    lam: Optional[float] = None
    mu: Optional[float] = None
    T: tuple = ()
    epsilon: Optional[float] = None
    zeta: Optional[float] = None
    alpha: float = 0.05
    trials: int = 10_000
    M: Optional[int] = None
    seed: int = 0
    m: Optional[int] = None
    steps: Optional[int] = None
    traces: bool = False
    output_path: Optional[str] = None

    @property
    def cli_scenario(self) -> str:
        return "sqrtlaw" if self.scenario == "insertion" else self.scenario


def read_config_file(path) -> dict:
    values = {}
    errors = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read config file {path}: {exc.strerror}"]) from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            errors.append(f"{path}:{lineno}: expected 'key = value'")
            continue
        values[key.strip()] = value.strip()
    if errors:
        raise ConfigError(errors)
    return values


def _convert(key, raw, errors):
    try:
        if key in _FLOATS:
            return float(raw)
        if key in _INTS:
            return int(raw)
        if key == "T":
            if isinstance(raw, (int, float)):
                return (float(raw),)
            if isinstance(raw, (list, tuple)):
                return tuple(float(x) for x in raw)
            return tuple(float(x) for x in str(raw).split(",") if x.strip())
        if key == "traces":
            if isinstance(raw, bool):
                return raw
            text = str(raw).strip().lower()
            if text in ("1", "true", "yes", "on"):
                return True
            if text in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return str(raw)
    except (TypeError, ValueError):
        errors.append(f"{key}: cannot parse {raw!r}")
        return None


def parse_config(path=None, flags: Optional[dict] = None) -> ExperimentConfig:
    """Merge an optional config file with flags (flags win) and validate.

    Raises :class:`ConfigError` listing every unknown key, missing key, and
    range violation by name.
    """
    raw = dict(read_config_file(path)) if path else {}
    raw.update({k: v for k, v in (flags or {}).items() if v is not None})
    errors = []

    unknown = sorted(set(raw) - set(KEYS))
    errors += [f"unknown key: {k}" for k in unknown]

    values = dict(_DEFAULTS)
    for key in KEYS:
        if key in raw:
            converted = _convert(key, raw[key], errors)
            if converted is not None:
                values[key] = converted

    scenario = values.get("scenario")
    if scenario is None:
        errors.append("missing required key: scenario")
    elif scenario not in SCENARIOS:
        errors.append(f"scenario: must be one of {', '.join(SCENARIOS)}, got {scenario!r}")
        scenario = None

    if scenario:
        for key in REQUIRED[scenario]:
            if key not in values and not any(e.startswith(f"{key}:") for e in errors):
                errors.append(f"missing required key: {key}")

    errors += _range_errors(values, scenario)
    if errors:
        raise ConfigError(errors)

    return ExperimentConfig(
        scenario=scenario,
        lam=values.get("lambda"),
        mu=values.get("mu"),
        T=values.get("T", ()),
        epsilon=values.get("epsilon"),
        zeta=values.get("zeta"),
        alpha=values["alpha"],
        trials=values["trials"],
        M=values.get("M"),
        seed=values["seed"],
        m=values.get("m"),
        steps=values.get("steps"),
        traces=values["traces"],
        output_path=values.get("output_path"),
    )


def _range_errors(values, scenario):
    errors = []

    def check(key, ok, what):
        if key in values and not ok(values[key]):
            errors.append(f"{key}: must be {what}, got {values[key]!r}")

    check("lambda", lambda v: v > 0, "> 0")
    check("mu", lambda v: v > 0, "> 0")
    check("T", lambda v: len(v) > 0 and all(t > 0 for t in v), "a nonempty list of positive values")
    for key in ("epsilon", "zeta", "alpha"):
        check(key, lambda v: 0 < v < 1, "in (0, 1)")
    check("trials", lambda v: v >= 1, ">= 1")
    check("M", lambda v: v >= 1, ">= 1")
    check("seed", lambda v: 0 <= v < 2**64, "a 64-bit unsigned integer")
    check("m", lambda v: v >= 0, ">= 0")
    check("steps", lambda v: v >= 1, ">= 1")
    if scenario in ("timing", "e2e") and "mu" in values and "lambda" in values:
        if not values["mu"] > values["lambda"]:
            errors.append(f"mu: must exceed lambda for {scenario}, got mu={values['mu']}")
    if scenario == "e2e" and len(values.get("T", ())) > 1:
        errors.append("T: e2e takes a single horizon")
    return errors
