"""Deterministic simulator of specializing DAG federated learning.

Clients publish models to a shared DAG ledger, pick the models they build on
with accuracy-biased random walks, and decide whether to publish either by
beating a reference model (``sdagfl``) or by an event trigger on the relative
parameter change (``esdagfl``). Energy is tracked per update stage.
"""
from .config import config_hash, load, load_preset
from .ledger import DagLedger
from .sim import SimConfig, run, sweep_threshold

__all__ = ["DagLedger", "SimConfig", "config_hash", "load", "load_preset", "run", "sweep_threshold"]
__version__ = "0.1.0"
