"""Flat ``key = value`` experiment configuration files."""

from dataclasses import dataclass
from pathlib import Path

from .core import Parameters
from .envs import BooleanProblem, load_grid
from .harness import ExperimentConfig


class ConfigError(ValueError):
    pass


# config key -> Parameters field
PARAM_KEYS = {
    "N": "n", "beta": "beta", "alpha": "alpha", "epsilon0": "epsilon0", "nu": "nu",
    "gamma": "gamma", "theta_ga": "theta_ga", "chi": "chi", "mu": "mu",
    "theta_del": "theta_del", "delta": "delta", "theta_sub": "theta_sub",
    "P_hash": "p_hash", "p_I": "p_i", "epsilon_I": "epsilon_i", "F_I": "f_i",
    "p_explore": "p_explore", "doGASubsumption": "do_ga_subsumption",
    "doASSubsumption": "do_as_subsumption", "useGradient": "use_gradient",
    "L_max": "l_max", "maxStepsPerEpisode": "max_steps",
}
BOOL_PARAMS = {"do_ga_subsumption", "do_as_subsumption", "use_gradient"}
INT_PARAMS = {"n", "theta_del", "theta_sub", "l_max", "max_steps"}

RUN_KEYS = {
    "run.learningProblems": ("n_learning", int, 10000),
    "run.condensationProblems": ("n_condensation", int, 10000),
    "run.runs": ("n_runs", int, 1),
    "run.seed": ("base_seed", int, 0),
    "run.checkpointInterval": ("checkpoint_interval", int, 1000),
    "run.exploration": ("exploration", str, "explore"),
    "run.finalWindow": ("final_window", int, 1000),
}
OTHER_KEYS = {"problem.kind", "problem.size", "problem.map", "output.dir", "run.jobs"}

KNOWN_KEYS = OTHER_KEYS | set(RUN_KEYS) | {f"params.{k}" for k in PARAM_KEYS}


@dataclass
class LoadedConfig:
    experiment: ExperimentConfig
    output_dir: Path
    jobs: int
    raw: dict
    text: str


def parse_config_text(text):
    """Parse into ``{key: (value, line_number)}``; rejects unknown and repeated keys."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = (value, lineno)
    return entries


def _convert(key, value, lineno, kind):
    try:
        if kind is bool:
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(value)
            return value.lower() in ("true", "1", "yes")
        return kind(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None


def build_config(entries, base_dir=Path(".")):
    def get(key, kind, default):
        if key not in entries:
            return default
        value, lineno = entries[key]
        return _convert(key, value, lineno, kind)

    param_kw = {}
    for key, name in PARAM_KEYS.items():
        full = f"params.{key}"
        if full in entries:
            kind = bool if name in BOOL_PARAMS else int if name in INT_PARAMS else float
            param_kw[name] = get(full, kind, None)
    try:
        params = Parameters(**param_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    kind = get("problem.kind", str, "multiplexer")
    try:
        if kind in ("multiplexer", "majority"):
            problem = BooleanProblem(kind, get("problem.size", int, 6))
        elif kind == "grid":
            if "problem.map" not in entries:
                raise ConfigError("problem.kind = grid requires problem.map")
            ref = entries["problem.map"][0]
            candidate = base_dir / ref
            problem = load_grid(str(candidate) if candidate.exists() else ref)
        else:
            line = entries["problem.kind"][1]
            raise ConfigError(f"line {line}: unknown problem.kind {kind!r}")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"problem: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"problem.map: cannot read {exc.filename}: {exc.strerror}") from None

    run_kw = {field: get(key, conv, default) for key, (field, conv, default) in RUN_KEYS.items()}
    try:
        experiment = ExperimentConfig(problem, params, **run_kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    output_dir = Path(get("output.dir", str, "results"))
    return experiment, output_dir, get("run.jobs", int, 1)


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    entries = parse_config_text(text)
    experiment, output_dir, jobs = build_config(entries, path.parent)
    raw = {k: v for k, (v, _) in entries.items()}
    return LoadedConfig(experiment, output_dir, jobs, raw, text)
