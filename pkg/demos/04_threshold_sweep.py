"""How the trigger threshold trades publishing against specialization."""
# %%
from tanglefl import load_preset, sweep_threshold

# %%
cfg = load_preset("poets2", variant="esdagfl", rounds=60)
rows = sweep_threshold(cfg, [0.0, 0.006, 0.012, 0.03, 0.1])
print(f"{'threshold':>9} {'accuracy':>9} {'pureness':>9} {'publish':>8} {'energy':>9}")
for r in rows:
    print(f"{r['threshold']:9.3f} {r['final_accuracy']:9.3f} {r['pureness']:9.3f} "
          f"{r['publish_rate']:8.3f} {r['total_energy']:9.1f}")

# %% [markdown]
# Publish rate falls with the threshold. Energy does not: an update costs the
# same whether or not it is published, so the saving comes only from dropping
# the reference search.
