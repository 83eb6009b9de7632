"""Append-only DAG ledger shared by all simulated clients.

Node 0 is the task (genesis) node. Every later node approves exactly two
earlier nodes; ids are publish-order sequence numbers, so parents always have
smaller ids than their children and the graph is acyclic by construction.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidReferenceError, PayloadError

GENESIS = 0


@dataclass(frozen=True, eq=False)
class Transaction:
    id: int
    parents: tuple
    payload: np.ndarray
    publisher: int | None
    round: int


class DagLedger:
    """Transaction store with a children index and a tips set.

    Args:
        genesis_params: Initial model parameters carried by the task node.
        dim: Expected payload dimension. Defaults to the genesis dimension.
    """

    def __init__(self, genesis_params, dim: int | None = None):
        payload = np.array(genesis_params, dtype=np.float64)
        if payload.ndim != 1:
            raise ConfigError("genesis parameters must be a flat vector")
        if dim is not None and payload.shape[0] != dim:
            raise ConfigError(
                f"genesis parameters have dimension {payload.shape[0]}, model expects {dim}")
        payload.setflags(write=False)
        self.dim = payload.shape[0]
        self._nodes = [Transaction(GENESIS, (), payload, None, 0)]
        self._children: list[list[int]] = [[]]
        self._tips = {GENESIS}
        self._subtree_cache: list[int] | None = None

    def __len__(self):
        return len(self._nodes)

    def node_count(self) -> int:
        return len(self._nodes)

    def _check(self, n) -> int:
        if not isinstance(n, (int, np.integer)) or not 0 <= n < len(self._nodes):
            raise InvalidReferenceError(f"unknown node id {n!r}")
        return int(n)

    def node(self, n: int) -> Transaction:
        return self._nodes[self._check(n)]

    def payload(self, n: int) -> np.ndarray:
        return self._nodes[self._check(n)].payload

    def parents(self, n: int) -> tuple:
        return self._nodes[self._check(n)].parents

    def publisher(self, n: int):
        return self._nodes[self._check(n)].publisher

    def children(self, n: int) -> list[int]:
        """Ids of the nodes approving ``n``, in increasing order."""
        return list(self._children[self._check(n)])

    def tips(self) -> set[int]:
        return set(self._tips)

    def sorted_tips(self) -> list[int]:
        return sorted(self._tips)

    def nodes(self):
        return iter(self._nodes)

    def publish(self, payload, parents, publisher, round: int) -> int:
        """Append a node approving ``parents`` and return its id."""
        p1, p2 = (self._check(p) for p in parents)
        if p1 == p2 and p1 != GENESIS:
            raise InvalidReferenceError(
                f"parents must be distinct unless both are the genesis node (got {p1}, {p2})")
        vec = np.array(payload, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise PayloadError(f"payload shape {vec.shape}, ledger dimension is {self.dim}")
        vec.setflags(write=False)
        nid = len(self._nodes)
        self._nodes.append(Transaction(nid, (p1, p2), vec, publisher, int(round)))
        self._children.append([])
        for p in {p1, p2}:
            self._children[p].append(nid)
            self._tips.discard(p)
        self._tips.add(nid)
        self._subtree_cache = None
        return nid

    def subtree_size(self, n: int) -> int:
        """Number of distinct nodes approving ``n`` directly or transitively."""
        n = self._check(n)
        if self._subtree_cache is None:
            self._subtree_cache = self._all_subtree_sizes()
        return self._subtree_cache[n]

    def _all_subtree_sizes(self) -> list[int]:
        # descendant sets as int bitmasks, filled children-first
        desc = [0] * len(self._nodes)
        for n in range(len(self._nodes) - 1, -1, -1):
            mask = 0
            for c in self._children[n]:
                mask |= desc[c] | (1 << c)
            desc[n] = mask
        return [m.bit_count() for m in desc]

    def export(self, directory, stem: str = "ledger"):
        """Write ``<stem>.jsonl`` (one transaction per line) and ``<stem>.bin`` (payloads).

        Returns the two written paths.
        """
        directory = Path(directory)
        meta = directory / f"{stem}.jsonl"
        with open(meta, "w", encoding="utf-8", newline="\n") as fh:
            for tx in self._nodes:
                fh.write(json.dumps({"id": tx.id, "parents": list(tx.parents),
                                     "publisher": tx.publisher, "round": tx.round}) + "\n")
        blob = directory / f"{stem}.bin"
        write_matrix(blob, np.stack([tx.payload for tx in self._nodes]))
        return meta, blob

    @classmethod
    def load(cls, directory, stem: str = "ledger") -> "DagLedger":
        directory = Path(directory)
        payloads = read_matrix(directory / f"{stem}.bin")
        with open(directory / f"{stem}.jsonl", encoding="utf-8") as fh:
            records = [json.loads(line) for line in fh if line.strip()]
        if len(records) != payloads.shape[0]:
            raise ConfigError("ledger metadata and payload file disagree on node count")
        ledger = cls(payloads[0])
        for rec, vec in zip(records[1:], payloads[1:]):
            nid = ledger.publish(vec, tuple(rec["parents"]), rec["publisher"], rec["round"])
            if nid != rec["id"]:
                raise ConfigError(f"ledger ids out of order at {rec['id']}")
        return ledger


# Binary matrix format: uint32 rows, uint32 cols (little-endian), then rows*cols float64 LE.
_HEADER = struct.Struct("<II")


def write_matrix(path, matrix) -> None:
    m = np.ascontiguousarray(matrix, dtype="<f8")
    if m.ndim != 2:
        raise ValueError("write_matrix expects a 2-D array")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*m.shape))
        fh.write(m.tobytes())


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ConfigError(f"{path}: truncated matrix header")
        rows, cols = _HEADER.unpack(head)
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.shape[0] != rows * cols:
        raise ConfigError(f"{path}: expected {rows}x{cols} values, found {data.shape[0]}")
    return data.reshape(rows, cols).astype(np.float64)
