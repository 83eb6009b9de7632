"""Synthetic clustered Non-IID classification tasks.

Every class gets a Gaussian centroid; clients belong to a cluster and only
ever see labels from that cluster's label set. Each client's samples are split
9:1 into train and test shards.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .ledger import read_matrix, write_matrix
from .model import DatasetShard

FMNIST_CLASSES = ((0, 1, 2, 3), (4, 5, 6), (7, 8, 9))

# tags keep the data streams apart from the simulation streams that share a seed
_CENTROID_TAG = 101
_CLIENT_TAG = 102


@dataclass(frozen=True)
class ClusterTaskConfig:
    num_clusters: int = 3
    clients_per_cluster: int = 10
    classes_per_cluster: tuple = FMNIST_CLASSES
    input_dim: int = 16
    samples_per_client: int = 200
    class_separation: float = 6.0
    noise_sigma: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        classes = tuple(tuple(int(c) for c in s) for s in self.classes_per_cluster)
        object.__setattr__(self, "classes_per_cluster", classes)
        if self.num_clusters < 1 or len(classes) != self.num_clusters:
            raise ConfigError(
                f"classes_per_cluster lists {len(classes)} label sets for {self.num_clusters} clusters")
        flat = [c for s in classes for c in s]
        if any(len(s) == 0 for s in classes) or len(set(flat)) != len(flat):
            raise ConfigError("cluster label sets must be nonempty and pairwise disjoint")
        if len(flat) < 2 or min(flat) < 0:
            raise ConfigError("the task needs at least two non-negative class labels")
        if self.clients_per_cluster < 1:
            raise ConfigError("clients_per_cluster must be >= 1")
        if self.samples_per_client < 2:
            raise ConfigError("samples_per_client must be >= 2 for a train/test split")
        if self.input_dim < 1 or not self.class_separation > 0 or not self.noise_sigma >= 0:
            raise ConfigError("input_dim, class_separation and noise_sigma must be positive")

    @property
    def num_classes(self) -> int:
        return max(c for s in self.classes_per_cluster for c in s) + 1

    @property
    def num_clients(self) -> int:
        return self.num_clusters * self.clients_per_cluster


@dataclass(frozen=True, eq=False)
class ClientData:
    client: int
    cluster: int
    train: DatasetShard
    test: DatasetShard


def class_centroids(cfg: ClusterTaskConfig, seed: int) -> np.ndarray:
    """One centroid per class, every pair at least ``class_separation`` apart.

    With ``input_dim >= num_classes`` the centroids are scaled rows of a random
    orthonormal frame, so every pairwise distance equals the separation exactly.
    """
    k, d = cfg.num_classes, cfg.input_dim
    rng = np.random.default_rng([seed, _CENTROID_TAG])
    if d >= k:
        q, _ = np.linalg.qr(rng.standard_normal((d, k)))
        return q.T * (cfg.class_separation / math.sqrt(2.0))
    for _ in range(1000):
        c = rng.standard_normal((k, d))
        c *= cfg.class_separation * 2.0 / np.linalg.norm(c, axis=1, keepdims=True)
        dist = np.linalg.norm(c[:, None] - c[None], axis=2)
        if dist[np.triu_indices(k, 1)].min() >= cfg.class_separation:
            return c
    raise ConfigError(f"could not place {k} centroids {cfg.class_separation} apart in {d} dimensions")


def generate(cfg: ClusterTaskConfig, seed: int | None = None) -> list[ClientData]:
    """Build every client's shards. ``cfg.seed`` wins over ``seed`` when set."""
    seed = cfg.seed if cfg.seed is not None else (seed or 0)
    centroids = class_centroids(cfg, seed)
    n = cfg.samples_per_client
    n_test = max(1, n // 10)
    out = []
    for cluster, labels in enumerate(cfg.classes_per_cluster):
        labels = np.asarray(labels)
        for j in range(cfg.clients_per_cluster):
            cid = cluster * cfg.clients_per_cluster + j
            rng = np.random.default_rng([seed, _CLIENT_TAG, cid])
            y = labels[rng.integers(0, len(labels), n)]
            x = centroids[y] + cfg.noise_sigma * rng.standard_normal((n, cfg.input_dim))
            perm = rng.permutation(n)
            test, train = perm[:n_test], perm[n_test:]
            out.append(ClientData(cid, cluster, DatasetShard(x[train], y[train]),
                                  DatasetShard(x[test], y[test])))
    return out


def save_dataset(clients, directory) -> None:
    """Write ``features.bin``, ``labels.bin`` and ``manifest.json`` into ``directory``.

    Rows are stored client by client, train rows first.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    feats, labels, manifest = [], [], []
    for c in clients:
        feats += [c.train.features, c.test.features]
        labels += [c.train.labels, c.test.labels]
        manifest.append({"client": c.client, "cluster": c.cluster,
                         "train_rows": c.train.n, "test_rows": c.test.n})
    write_matrix(directory / "features.bin", np.vstack(feats))
    write_matrix(directory / "labels.bin", np.concatenate(labels).astype(np.float64)[:, None])
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


def load_dataset(directory) -> list[ClientData]:
    directory = Path(directory)
    x = read_matrix(directory / "features.bin")
    y = read_matrix(directory / "labels.bin")[:, 0].astype(np.int64)
    manifest = json.loads((directory / "manifest.json").read_text())
    out, row = [], 0
    for entry in manifest:
        a, b = entry["train_rows"], entry["test_rows"]
        out.append(ClientData(entry["client"], entry["cluster"],
                              DatasetShard(x[row:row + a], y[row:row + a]),
                              DatasetShard(x[row + a:row + a + b], y[row + a:row + a + b])))
        row += a + b
    if row != x.shape[0]:
        raise ConfigError("dataset manifest does not cover every stored row")
    return out
