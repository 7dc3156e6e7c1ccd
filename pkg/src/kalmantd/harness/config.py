"""Experiment configuration: defaults, flat-text config files, validation.

Config files are flat ``key = value`` lines.  ``#`` starts a comment,
numbers and bracketed (nested) lists parse to Python values, everything
else stays a string.  The same literal syntax backs ``--set key=value``
CLI overrides.
"""

import ast
from dataclasses import dataclass, field, replace

from ..errors import ConfigError

CORE_KEYS = ("experiment", "algorithm", "base_seed", "trials", "output")

# Per-experiment default hyperparameters.  Keys present here are the only
# ones accepted for that experiment (plus algorithm-specific extras).
_COMMON = {"kappa": 0.0, "ut_alpha": 0.0, "ut_beta": 2.0,
           "validate_covariance": True, "pv": 0.0}

_PHYSICS = {
    "dt": 0.1,
    "gravity": 9.8,
    "pole_mass": 2.0,
    "cart_mass": 8.0,
    "pole_length": 0.5,
    "force_scale": 50.0,
    "start_spread": 0.1,
}

EXPERIMENTS = {
    "tsitsiklis": {
        "algorithms": ("ktd", "td_direct", "residual"),
        "default_algorithm": "ktd",
        "trials": 10,
        "hp": {
            **_COMMON,
            "gamma": 0.9,
            "transitions": 3000,
            "theta0": 0.0,
            "p0": 10.0,
            "obs_var": 1e-3,
            "process": "adaptive",
            "eta": 0.1,
            "alpha": 2e-3,
        },
    },
    "boyan": {
        "algorithms": ("ktd", "xktd", "lstd", "gptd", "mcgptd", "td_direct", "residual"),
        "default_algorithm": "xktd",
        "trials": 300,
        "hp": {
            **_COMMON,
            "gamma": 1.0,
            "episodes": 140,
            "switch_episode": 70,
            "reward_scale_factor": 10.0,
            "theta0": 0.0,
            "p0": 1.0,
            "obs_var": 1e-3,
            "sigma2": 1e-3,
            "process": "adaptive",
            "eta": 1e-2,
            "alpha": 0.1,
        },
    },
    "maze": {
        "algorithms": ("ktd", "gptd", "mcgptd"),
        "default_algorithm": "ktd",
        "trials": 20,
        "hp": {
            **_COMMON,
            "gamma": 0.9,
            "episodes": 30,
            "max_steps": 1000,
            "theta0": 0.0,
            "p0": 10.0,
            "obs_var": 1.0,
            "sigma2": 1.0,
            "process": "zero",
            "rbf_std": 0.5,
            "grid": 21,
        },
    },
    "pendulum": {
        "algorithms": ("ktd", "qlearning"),
        "default_algorithm": "ktd",
        "trials": 100,
        "hp": {
            **_COMMON,
            **_PHYSICS,
            "gamma": 0.95,
            "episodes": 1000,
            "eval_every": 50,
            "eval_episodes": 100,
            "eval_max_steps": 3000,
            "theta0": 0.0,
            "p0": 10.0,
            "obs_var": 1.0,
            "process": "zero",
            "rbf_std": 1.0,
            "alpha0": 0.5,
            "n0": 200,
            "learn_max_steps": 3000,
        },
    },
    "pendulum_active": {
        "algorithms": ("ktd",),
        "default_algorithm": "ktd",
        "trials": 100,
        "hp": {
            **_COMMON,
            **_PHYSICS,
            "gamma": 0.95,
            "episodes": 300,
            "eval_every": 25,
            "eval_episodes": 100,
            "eval_max_steps": 3000,
            "theta0": 0.0,
            "p0": 10.0,
            "obs_var": 1.0,
            "process": "zero",
            "rbf_std": 1.0,
            "learn_max_steps": 3000,
        },
    },
    "oracle_theorem2": {
        "algorithms": ("ktd", "gptd"),
        "default_algorithm": "ktd",
        "trials": 3,
        "hp": {
            **_COMMON,
            "gamma": 0.9,
            "transitions": 200,
            "param_dim": 4,
            "theta0": 0.0,
            "p0": 1.0,
            "obs_var": 1.0,
            "sigma2": 1.0,
            "process": "zero",
        },
    },
    "oracle_theorem3": {
        "algorithms": ("xktd", "mcgptd"),
        "default_algorithm": "xktd",
        "trials": 3,
        "hp": {
            **_COMMON,
            "gamma": 1.0,
            "episodes": 50,
            "theta0": 0.0,
            "p0": 1.0,
            "sigma2": 1e-3,
            "process": "zero",
        },
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    algorithm: str
    hyperparameters: dict = field(default_factory=dict)
    base_seed: int = 0
    trials: int = 1
    output_path: str = ""

    def hp(self, key):
        return self.hyperparameters[key]

    def flat(self):
        """Flat key/value view used for serialization and CSV headers."""
        out = {
            "experiment": self.experiment,
            "algorithm": self.algorithm,
            "base_seed": self.base_seed,
            "trials": self.trials,
            "output": self.output_path,
        }
        for key in sorted(self.hyperparameters):
            out[key] = self.hyperparameters[key]
        return out


def default_config(experiment, algorithm=None):
    """Fully resolved config with the experiment's documented defaults."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; "
                          f"choose from {sorted(EXPERIMENTS)}")
    spec = EXPERIMENTS[experiment]
    algorithm = algorithm or spec["default_algorithm"]
    config = ExperimentConfig(
        experiment=experiment,
        algorithm=algorithm,
        hyperparameters=dict(spec["hp"]),
        base_seed=0,
        trials=spec["trials"],
        output_path="",
    )
    return validate_config(config)


def validate_config(config):
    if config.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {config.experiment!r}")
    spec = EXPERIMENTS[config.experiment]
    if config.algorithm not in spec["algorithms"]:
        raise ConfigError(
            f"algorithm {config.algorithm!r} is not valid for {config.experiment!r}; "
            f"valid: {spec['algorithms']}"
        )
    unknown = set(config.hyperparameters) - set(spec["hp"])
    if unknown:
        raise ConfigError(f"unknown hyperparameters for {config.experiment!r}: {sorted(unknown)}")
    missing = set(spec["hp"]) - set(config.hyperparameters)
    if missing:
        raise ConfigError(f"missing hyperparameters: {sorted(missing)}")
    if not isinstance(config.trials, int) or config.trials < 1:
        raise ConfigError(f"trials must be a positive integer, got {config.trials!r}")
    if not isinstance(config.base_seed, int):
        raise ConfigError(f"base_seed must be an integer, got {config.base_seed!r}")
    if config.hyperparameters.get("process") not in ("zero", "adaptive", "constant"):
        raise ConfigError("process must be one of zero, adaptive, constant")
    return config


def parse_value(text):
    """Parse one literal: int, float, bool, bracketed list, or plain string."""
    text = text.strip()
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    return str(value)


def parse_config_text(text):
    """Parse flat key = value lines into an ExperimentConfig (validated)."""
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = parse_value(value)
    return config_from_entries(entries)


def config_from_entries(entries):
    """Build a validated config from a flat mapping (defaults filled in)."""
    entries = dict(entries)
    experiment = entries.pop("experiment", None)
    if experiment is None:
        raise ConfigError("config must name an experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    algorithm = entries.pop("algorithm", None)
    base = default_config(experiment, algorithm)
    core = {
        "base_seed": entries.pop("base_seed", base.base_seed),
        "trials": entries.pop("trials", base.trials),
        "output_path": str(entries.pop("output", base.output_path)),
    }
    hp = dict(base.hyperparameters)
    for key, value in entries.items():
        if key not in hp:
            raise ConfigError(f"unknown key {key!r} for experiment {experiment!r}")
        hp[key] = value
    return validate_config(replace(base, hyperparameters=hp, **core))


def parse_config_file(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)


def serialize_config(config):
    """Canonical flat text; parse(serialize(c)) == c and re-serializing is
    a fixed point."""
    lines = [f"{key} = {format_value(value)}" for key, value in config.flat().items()]
    return "\n".join(lines) + "\n"
