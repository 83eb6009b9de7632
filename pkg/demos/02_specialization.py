"""Implicit specialization on the three-cluster task.

Clients never learn which cluster they belong to, yet their approvals end up
inside their own cluster. Watch pureness and the module count settle.
"""
# %%
import dataclasses

import numpy as np

from tanglefl import load_preset, metrics, run

# %%
cfg = load_preset("fmnist3", variant="esdagfl", seed=0)
print(f"{cfg.task.num_clients} clients, {cfg.clients_per_round} per round, {cfg.rounds} rounds")


def show(rec):
    print(f"round {rec.round:3d}  acc {rec.mean_accuracy:.3f}  modularity {rec.modularity:.3f}  "
          f"modules {rec.modules}  pureness {rec.pureness:.3f}  publish rate {rec.publish_rate:.2f}")


result = run(cfg, progress=show)

# %% [markdown]
# Community detection on the last window, compared with the hidden clusters.

# %%
g = metrics.window_graph(result.ledger, cfg.rounds, cfg.metric_window)
partition, q, count = metrics.detect_communities(g, np.random.default_rng(0))
by_module = {}
for client in result.clients:
    if client.id in partition:
        by_module.setdefault(partition[client.id], set()).add(client.cluster)
print(f"{count} modules, Q = {q:.3f}")
for m, clusters in sorted(by_module.items()):
    print(f"  module {m}: true clusters {sorted(clusters)}")

# %% [markdown]
# Control: with alpha = 0 the walk ignores accuracy and approvals mix freely.

# %%
blind = cfg.replace(variant="always_publish", walk=dataclasses.replace(cfg.walk, alpha=0.0))
res = run(blind)
truth = {c.id: c.cluster for c in res.clients}
print("random-walk pureness:", round(metrics.approval_pureness(metrics.approval_graph(res.ledger), truth), 3))
