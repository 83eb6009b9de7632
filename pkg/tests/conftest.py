import dataclasses
import functools
import re

import numpy as np
import pytest

from tanglefl import config, sim
from tanglefl.ledger import DagLedger
from tanglefl.model import DatasetShard


def chain_ledger(length, dim=3):
    """0 <- 1 <- ... <- length-1; node 1 approves (0, 0), later nodes (k-1, k-2)."""
    led = DagLedger(np.zeros(dim))
    if length > 1:
        led.publish(np.ones(dim), (0, 0), 0, 1)
    for k in range(2, length):
        led.publish(np.full(dim, k), (k - 1, k - 2), 0, k)
    return led


def star_ledger(n_children, dim=3):
    led = DagLedger(np.zeros(dim))
    for i in range(n_children):
        led.publish(np.full(dim, i + 1.0), (0, 0), i, 1)
    return led


def diamond_ledger(dim=3):
    led = DagLedger(np.zeros(dim))
    led.publish(np.ones(dim), (0, 0), 1, 1)
    led.publish(np.ones(dim), (0, 0), 2, 1)
    led.publish(np.ones(dim), (1, 2), 3, 2)
    return led


def random_shard(rng, n, d, k):
    return DatasetShard(rng.standard_normal((n, d)), rng.integers(0, k, n))


@functools.lru_cache(maxsize=None)
def cached_run(preset, variant, seed, alpha=None, threshold=None, rounds=None):
    cfg = config.load_preset(preset, variant=variant, seed=seed)
    if alpha is not None:
        cfg = cfg.replace(walk=dataclasses.replace(cfg.walk, alpha=alpha))
    if threshold is not None:
        cfg = cfg.replace(trigger=dataclasses.replace(cfg.trigger, threshold=threshold))
    if rounds is not None:
        cfg = cfg.replace(rounds=rounds)
    return sim.run(cfg)


@pytest.fixture
def run_cache():
    return cached_run


_CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, with the measured values."""
    outcomes: dict = {}
    notes: dict = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if not m or rep.when not in ("call", "setup"):
                continue
            n = int(m.group(1))
            ok = status == "passed"
            outcomes[n] = outcomes.get(n, True) and ok
            for key, value in getattr(rep, "user_properties", []):
                if key == "measured":
                    notes.setdefault(n, []).append(value)
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcomes):
        line = f"criterion {n}: {'PASS' if outcomes[n] else 'FAIL'}"
        if notes.get(n):
            line += "  | " + "; ".join(notes[n])
        terminalreporter.write_line(line)
