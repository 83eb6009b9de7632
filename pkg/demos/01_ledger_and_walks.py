"""A hand-built ledger, the accuracy-biased walk and the reference model."""
# %%
from collections import Counter

import numpy as np

from tanglefl import walk
from tanglefl.ledger import DagLedger

# %% [markdown]
# Genesis holds the task model. Two clients fan out from it, a third approves both.

# %%
led = DagLedger(np.zeros(3))
led.publish(np.array([1.0, 0, 0]), (0, 0), "alice", 1)
led.publish(np.array([0, 1.0, 0]), (0, 0), "bob", 1)
led.publish(np.array([0.5, 0.5, 0]), (1, 2), "carol", 2)
led.publish(np.array([0, 0, 1.0]), (0, 0), "dave", 2)
print("nodes", led.node_count(), "tips", led.sorted_tips())
print("descendants of genesis:", led.subtree_size(0))

# %% [markdown]
# A walker scores each child on its own test data. Here the scores are made up:
# this client likes alice's model best and dave's least.

# %%
score = {1: 0.9, 2: 0.6, 3: 0.7, 4: 0.1}.get
for alpha in (0.0, 2.0, 20.0):
    rng = np.random.default_rng(0)
    cfg = walk.WalkConfig(alpha=alpha)
    ends = Counter(walk.random_walk(led, 0, score, cfg, rng) for _ in range(5000))
    print(f"alpha={alpha:>4}: tip frequencies", dict(sorted(ends.items())))

# %% [markdown]
# The baseline's reference model: the interior node crossed by most of r walks.

# %%
ref, paths = walk.reference_model(led, score, walk.WalkConfig(alpha=2.0), np.random.default_rng(1),
                                   return_paths=True)
print("walk paths:", paths)
print("reference node:", ref)
