"""Accuracy-biased random walks over the ledger.

A walker standing on a node evaluates every child on its own local test data
and steps to one of them with probability proportional to
``exp(alpha * normalized_accuracy)``, where accuracies are min-max normalised
into ``[-1, 0]``. The walk ends at the first node nobody approves (a tip).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError
from .ledger import GENESIS, DagLedger

START_MODES = ("genesis", "tip_depth")


@dataclass(frozen=True)
class WalkConfig:
    """Walk parameters.

    ``start`` chooses the entry point: ``"genesis"`` starts every walk at the
    task node, ``"tip_depth"`` starts ``start_depth`` parent-steps behind a
    uniformly chosen tip.
    """
    alpha: float = 20.0
    ref_walks: int = 5
    start_depth: int = 15
    start: str = "genesis"

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ConfigError("walk alpha must be finite and >= 0")
        if self.ref_walks < 1 or self.start_depth < 1:
            raise ConfigError("ref_walks and start_depth must be >= 1")
        if self.start not in START_MODES:
            raise ConfigError(f"walk start must be one of {START_MODES}, got {self.start!r}")


def child_weights(accuracies, alpha: float = 1.0) -> np.ndarray:
    acc = np.asarray(accuracies, dtype=np.float64)
    if acc.size == 0:
        raise ValueError("child_weights needs at least one accuracy")
    hi, lo = acc.max(), acc.min()
    if hi == lo:
        return np.ones_like(acc)
    normalized = (acc - hi) / (hi - lo)
    return np.exp(alpha * normalized)


def weighted_choice(weights: np.ndarray, rng: np.random.Generator) -> int:
    """Index drawn with probability proportional to ``weights`` (one uniform draw)."""
    cum = np.cumsum(weights)
    i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return min(i, len(weights) - 1)


def walk_path(ledger: DagLedger, start: int, evaluator: Callable[[int], float],
              alpha: float, rng: np.random.Generator) -> list[int]:
    """Every node visited from ``start`` up to and including the reached tip."""
    path = [start]
    node = start
    while True:
        kids = ledger.children(node)
        if not kids:
            return path
        w = child_weights([evaluator(c) for c in kids], alpha)
        node = kids[weighted_choice(w, rng)] if len(kids) > 1 else kids[0]
        path.append(node)


def random_walk(ledger: DagLedger, start: int, evaluator: Callable[[int], float],
                cfg: WalkConfig, rng: np.random.Generator) -> int:
    return walk_path(ledger, start, evaluator, cfg.alpha, rng)[-1]


def walk_start(ledger: DagLedger, cfg: WalkConfig, rng: np.random.Generator) -> int:
    if cfg.start == "genesis" or ledger.node_count() == 1:
        return GENESIS
    tips = ledger.sorted_tips()
    node = tips[int(rng.integers(len(tips)))]
    for _ in range(cfg.start_depth):
        parents = sorted(set(ledger.parents(node)))
        if not parents:
            break
        node = parents[int(rng.integers(len(parents)))] if len(parents) > 1 else parents[0]
    return node


def select_two_tips(ledger: DagLedger, evaluator: Callable[[int], float],
                    cfg: WalkConfig, rng: np.random.Generator) -> tuple[int, int]:
    """Two independent biased walks from a common entry point; the tips may coincide."""
    start = walk_start(ledger, cfg, rng)
    return (random_walk(ledger, start, evaluator, cfg, rng),
            random_walk(ledger, start, evaluator, cfg, rng))


def reference_model(ledger: DagLedger, evaluator: Callable[[int], float],
                    cfg: WalkConfig, rng: np.random.Generator,
                    return_paths: bool = False):
    """Pick the reference node from ``cfg.ref_walks`` biased walks.

    Confidence of a node is the number of walks whose path contains it; rating
    is its descendant count. The winner maximises ``(confidence, rating, -id)``
    among visited non-tip, non-genesis nodes, falling back to every visited
    node when no interior node was reached.
    """
    start = walk_start(ledger, cfg, rng)
    paths = [walk_path(ledger, start, evaluator, cfg.alpha, rng) for _ in range(cfg.ref_walks)]
    confidence: dict[int, int] = {}
    for path in paths:
        for n in set(path):
            confidence[n] = confidence.get(n, 0) + 1
    tips = ledger.tips()
    candidates = [n for n in confidence if n != GENESIS and n not in tips] or list(confidence)
    best = max(candidates, key=lambda n: (confidence[n], ledger.subtree_size(n), -n))
    return (best, paths) if return_paths else best
