"""Publish decisions: the event trigger and the reference-model comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import model
from .errors import ConfigError, ShapeError

TRIGGER_MODES = ("event_triggered", "reference_baseline", "always_publish")


@dataclass(frozen=True)
class TriggerConfig:
    threshold: float = 0.008
    mode: str = "event_triggered"

    def __post_init__(self):
        if not (self.threshold >= 0 and math.isfinite(self.threshold)):
            raise ConfigError("trigger threshold must be finite and >= 0")
        if self.mode not in TRIGGER_MODES:
            raise ConfigError(f"trigger mode must be one of {TRIGGER_MODES}, got {self.mode!r}")


def delta(w_new, w_avg) -> float:
    """Relative parameter change ``||w_new - w_avg|| / ||w_avg||``.

    With ``||w_avg|| == 0`` (a zero genesis model) the ratio is undefined; it
    is reported as ``inf`` if the model moved and ``0.0`` otherwise.
    """
    w_new = np.asarray(w_new, dtype=np.float64)
    w_avg = np.asarray(w_avg, dtype=np.float64)
    if w_new.shape != w_avg.shape:
        raise ShapeError(f"delta of shapes {w_new.shape} and {w_avg.shape}")
    change = float(np.linalg.norm(w_new - w_avg))
    base = float(np.linalg.norm(w_avg))
    if base == 0.0:
        return math.inf if change > 0.0 else 0.0
    return change / base


def is_degenerate(w_avg) -> bool:
    """True when ``delta`` would fall back to its zero-norm sentinel."""
    return float(np.linalg.norm(w_avg)) == 0.0


def should_publish_event(w_new, w_avg, cfg: TriggerConfig) -> bool:
    return delta(w_new, w_avg) >= cfg.threshold


def should_publish_reference(spec: model.ModelSpec, w_new, w_ref,
                             test_shard: model.DatasetShard) -> bool:
    return model.loss(spec, w_new, test_shard) < model.loss(spec, w_ref, test_shard)
