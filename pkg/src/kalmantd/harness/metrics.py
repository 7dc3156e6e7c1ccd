"""Metric aggregation and the CSV artifact format.

CSV layout: ``#``-prefixed header lines carry the fully resolved config
(and run diagnostics as ``diag:`` keys), then a ``checkpoint,trial,metric``
header row, then one row per (checkpoint, trial) followed by ``mean`` and
``stderr`` aggregate rows per checkpoint.  Metric values are quantized to
12 significant digits at record time so the file round-trips exactly.
"""

import math

import numpy as np

from ..errors import ConfigError, ContractViolation
from .config import format_value, parse_value


def normalized_param_error(theta, theta_star) -> float:
    """Euclidean distance to the reference parameters, scaled by their norm."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    theta_star = np.asarray(theta_star, dtype=float).reshape(-1)
    denom = float(np.linalg.norm(theta_star))
    if denom == 0.0:
        raise ContractViolation("normalized error is undefined for a zero reference")
    return float(np.linalg.norm(theta - theta_star)) / denom


def quantize(value: float) -> float:
    """Round to 12 significant digits (the CSV precision)."""
    return float(f"{float(value):.12g}")


class MetricSeries:
    """Per-trial metric values at shared checkpoints, plus aggregates."""

    def __init__(self, checkpoints, trial_values, diagnostics=None):
        self.checkpoints = [int(c) for c in checkpoints]
        values = np.asarray(trial_values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.checkpoints):
            raise ContractViolation(
                f"trial values shape {values.shape} does not match "
                f"{len(self.checkpoints)} checkpoints"
            )
        self.values = np.vectorize(quantize)(values) if values.size else values
        self.mean = np.array([quantize(v) for v in self.values.mean(axis=0)])
        if values.shape[0] > 1:
            spread = self.values.std(axis=0, ddof=1) / math.sqrt(values.shape[0])
            self.stderr = np.array([quantize(v) for v in spread])
        else:
            self.stderr = np.zeros(len(self.checkpoints))
        self.diagnostics = {k: quantize(v) for k, v in (diagnostics or {}).items()}

    @property
    def n_trials(self):
        return self.values.shape[0]

    def trial(self, index):
        return self.values[index]

    def at(self, checkpoint):
        """Mean metric at a checkpoint."""
        return float(self.mean[self.checkpoints.index(int(checkpoint))])

    def equals(self, other) -> bool:
        return (
            self.checkpoints == other.checkpoints
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.stderr, other.stderr)
            and self.diagnostics == other.diagnostics
        )


def render_csv(series: MetricSeries, config) -> str:
    lines = []
    for key, value in config.flat().items():
        lines.append(f"# {key} = {format_value(value)}")
    for key in sorted(series.diagnostics):
        lines.append(f"# diag:{key} = {format_value(series.diagnostics[key])}")
    lines.append("checkpoint,trial,metric")
    for j, checkpoint in enumerate(series.checkpoints):
        for trial in range(series.n_trials):
            lines.append(f"{checkpoint},{trial},{series.values[trial, j]:.12g}")
        lines.append(f"{checkpoint},mean,{series.mean[j]:.12g}")
        lines.append(f"{checkpoint},stderr,{series.stderr[j]:.12g}")
    return "\n".join(lines) + "\n"


def write_csv(series: MetricSeries, config, path):
    text = render_csv(series, config)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def parse_csv(path_or_text):
    """Rebuild (MetricSeries, header dict) from an emitted CSV file."""
    if "\n" in str(path_or_text):
        text = path_or_text
    else:
        with open(path_or_text, "r", encoding="utf-8") as fh:
            text = fh.read()
    header = {}
    diagnostics = {}
    rows = []
    saw_columns = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" not in body:
                raise ConfigError(f"malformed header line {raw!r}")
            key, value = body.split("=", 1)
            key = key.strip()
            if key.startswith("diag:"):
                diagnostics[key[5:]] = parse_value(value)
            else:
                header[key] = parse_value(value)
            continue
        if not saw_columns:
            if line != "checkpoint,trial,metric":
                raise ConfigError(f"unexpected column header {raw!r}")
            saw_columns = True
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ConfigError(f"malformed data row {raw!r}")
        rows.append((int(parts[0]), parts[1], float(parts[2])))
    checkpoints = []
    per_trial = {}
    for checkpoint, trial, value in rows:
        if trial in ("mean", "stderr"):
            continue
        if checkpoint not in checkpoints:
            checkpoints.append(checkpoint)
        per_trial.setdefault(int(trial), {})[checkpoint] = value
    trials = sorted(per_trial)
    values = np.array(
        [[per_trial[t][c] for c in checkpoints] for t in trials]
    ) if trials else np.zeros((0, len(checkpoints)))
    series = MetricSeries(checkpoints, values, diagnostics)
    return series, header
