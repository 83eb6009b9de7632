"""Energy saved by the event trigger, same seed, same schedule."""
# %%
from tanglefl import energy, load_preset, run, sim

# %%
base = run(load_preset("fmnist3", variant="sdagfl"))
opt = run(load_preset("fmnist3", variant="esdagfl"))

tb, to = base.energy.totals(), opt.energy.totals()
for key in ("tip", "aggregation", "training", "reference", "total"):
    print(f"{key:>12}: sdagfl {tb[key]:10.1f}   esdagfl {to[key]:10.1f}")
print(f"energy reduction {100 * sim.energy_reduction(base, opt):.2f}%")
print(f"time reduction   {100 * (tb['time'] - to['time']) / tb['time']:.2f}%")

# %% [markdown]
# The saving is exactly the reference-search term of every baseline update,
# because both arms charge tips, averaging and training identically.

# %%
print("difference - sum of reference terms:", (tb["total"] - to["total"]) - tb["reference"])
p = base.config.cost
t = base.config.train
share = energy.reference_energy(p) / energy.total_update_energy(p, t.batch_size, t.batches, t.epochs)
print(f"reference share of one baseline update: {share:.3f}")

# %% [markdown]
# Accuracy of both arms at the sampled rounds.

# %%
for a, b in zip(base.records, opt.records):
    print(f"round {a.round:3d}  sdagfl {a.mean_accuracy:.3f}  esdagfl {b.mean_accuracy:.3f}")
print("objective pairs (reference energy, final loss):",
      energy.objective(base.energy, base.final.mean_loss), energy.objective(opt.energy, opt.final.mean_loss))
