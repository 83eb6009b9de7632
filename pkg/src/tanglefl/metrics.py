"""Specialisation metrics over the client approval graph, and sampled evaluation.

The approval graph has one vertex per publishing client. Each parent edge of a
node published inside the metric window adds weight 1 between the node's
publisher and the parent's publisher (genesis parents are skipped). Self-loops
are kept for modularity and ignored by approval pureness.

Modularity uses the weighted Newman definition with self-loops counted once
in the edge total and twice in the vertex degree, the same convention as
networkx.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import model
from .ledger import GENESIS, DagLedger
from .walk import WalkConfig, select_two_tips


@dataclass
class ApprovalGraph:
    vertices: set = field(default_factory=set)
    weights: dict = field(default_factory=dict)  # (u, v) with u <= v -> weight

    def add(self, u, v, w: float = 1.0) -> None:
        key = (u, v) if u <= v else (v, u)
        self.vertices.update(key)
        self.weights[key] = self.weights.get(key, 0.0) + w

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights.values())

    def adjacency(self) -> dict:
        adj: dict = {v: {} for v in self.vertices}
        for (u, v), w in self.weights.items():
            adj[u][v] = adj[u].get(v, 0.0) + w
            if u != v:
                adj[v][u] = adj[v].get(u, 0.0) + w
        return adj


def approval_graph(ledger: DagLedger, first_round: int = 0,
                   last_round: int | None = None) -> ApprovalGraph:
    """Client approval graph over nodes published in ``[first_round, last_round]``."""
    g = ApprovalGraph()
    for tx in ledger.nodes():
        if tx.id == GENESIS or tx.round < first_round:
            continue
        if last_round is not None and tx.round > last_round:
            continue
        for p in tx.parents:
            if p == GENESIS:
                continue
            g.add(tx.publisher, ledger.publisher(p))
    return g


def window_graph(ledger: DagLedger, current_round: int, window: int) -> ApprovalGraph:
    return approval_graph(ledger, current_round - window + 1, current_round)


def modularity(g: ApprovalGraph, partition: dict) -> float:
    m = g.total_weight
    if m == 0:
        return 0.0
    internal: dict = defaultdict(float)
    degree: dict = defaultdict(float)
    for (u, v), w in g.weights.items():
        cu, cv = partition[u], partition[v]
        degree[cu] += w
        degree[cv] += w
        if cu == cv:
            internal[cu] += w
    return math.fsum(internal[c] / m - (degree[c] / (2 * m)) ** 2 for c in degree)


def _one_level(adj: dict, loops: dict, order: list, m: float):
    """Local-moving phase. Returns ``{vertex: community}``; communities are vertex labels."""
    degree = {v: sum(w for u, w in adj[v].items() if u != v) + 2 * loops.get(v, 0.0) for v in order}
    comm = {v: v for v in order}
    tot = dict(degree)
    improved = True
    while improved:
        improved = False
        for v in order:
            cv, kv = comm[v], degree[v]
            links: dict = defaultdict(float)
            for u, w in adj[v].items():
                if u != v:
                    links[comm[u]] += w
            tot[cv] -= kv
            best, best_gain = cv, links.get(cv, 0.0) - tot[cv] * kv / (2 * m)
            for c in sorted(links):
                gain = links[c] - tot[c] * kv / (2 * m)
                if gain > best_gain + 1e-12:
                    best, best_gain = c, gain
            tot[best] += kv
            if best != cv:
                comm[v] = best
                improved = True
    return comm


def louvain(g: ApprovalGraph, rng: np.random.Generator) -> dict:
    """Greedy modularity maximisation (local moving + aggregation).

    Vertex visiting order at every level is a permutation drawn from ``rng``.
    """
    m = g.total_weight
    if m == 0:
        return {v: i for i, v in enumerate(sorted(g.vertices))}
    adj = g.adjacency()
    loops = {u: w for (u, v), w in g.weights.items() if u == v}
    membership = {v: v for v in g.vertices}
    while True:
        nodes = sorted(adj)
        order = [nodes[i] for i in rng.permutation(len(nodes))]
        comm = _one_level(adj, loops, order, m)
        if all(comm[v] == v for v in nodes):
            break
        membership = {v: comm[c] for v, c in membership.items()}
        new_adj: dict = {c: {} for c in set(comm.values())}
        new_loops: dict = defaultdict(float)
        for v in nodes:
            cv = comm[v]
            new_loops[cv] += loops.get(v, 0.0)
            for u, w in adj[v].items():
                if u == v:
                    continue
                cu = comm[u]
                if cu == cv:
                    new_loops[cv] += w / 2  # each internal edge is seen from both ends
                else:
                    new_adj[cv][cu] = new_adj[cv].get(cu, 0.0) + w
        for c, w in new_loops.items():
            if w:
                new_adj[c][c] = w
        adj, loops = new_adj, dict(new_loops)
    labels = {c: i for i, c in enumerate(sorted(set(membership.values())))}
    return {v: labels[c] for v, c in membership.items()}


def detect_communities(g: ApprovalGraph, rng: np.random.Generator):
    """Returns ``(partition, modularity, module_count)``."""
    if not g.vertices:
        return {}, 0.0, 0
    partition = louvain(g, rng)
    return partition, modularity(g, partition), len(set(partition.values()))


def approval_pureness(g: ApprovalGraph, truth: dict) -> float:
    same = total = 0.0
    for (u, v), w in g.weights.items():
        if u == v:
            continue
        total += w
        if truth[u] == truth[v]:
            same += w
    return 1.0 if total == 0 else same / total


def evaluate_population(spec: model.ModelSpec, ledger: DagLedger, clients, sample_fraction: float,
                        walk_cfg: WalkConfig, rng: np.random.Generator):
    """Mean accuracy and loss of a random ``sample_fraction`` of clients.

    Each sampled client picks two tips with its biased walk, averages them and
    scores the average on its local test shard. ``clients`` need ``id``,
    ``test`` and ``accuracy_of``.
    """
    if not 0 < sample_fraction <= 1:
        raise ValueError("sample_fraction must lie in (0, 1]")
    pool = sorted(clients, key=lambda c: c.id)
    k = max(1, math.ceil(sample_fraction * len(pool) - 1e-9))
    chosen = sorted(rng.choice(len(pool), size=k, replace=False))
    accs, losses = [], []
    for i in chosen:
        c = pool[i]
        t1, t2 = select_two_tips(ledger, c.accuracy_of, walk_cfg, rng)
        w = model.average(ledger.payload(t1), ledger.payload(t2))
        accs.append(model.accuracy(spec, w, c.test))
        losses.append(model.loss(spec, w, c.test))
    return float(np.mean(accs)), float(np.mean(losses))
