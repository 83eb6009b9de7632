"""Round-based simulation of the specializing DAG federated learning loop.

Every round a fixed number of clients is sampled. Each one selects two tips
with its biased walk on the round-start ledger, averages them, trains locally
and then decides whether to publish:

* ``sdagfl``: publish only if the new model beats a reference model found by
  further walks (the reference search is charged to the energy ledger);
* ``esdagfl``: publish only if the relative parameter change reaches the
  trigger threshold;
* ``always_publish``: publish every trained model (control arm).

Accepted models are committed at the end of the round in client-id order, so
results do not depend on the order or parallelism in which clients run.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import data as data_mod
from . import energy, metrics, model, publish, walk
from .errors import ConfigError
from .ledger import GENESIS, DagLedger

VARIANTS = ("sdagfl", "esdagfl", "always_publish")
_MODE_OF_VARIANT = {"sdagfl": "reference_baseline", "esdagfl": "event_triggered",
                    "always_publish": "always_publish"}

# stream tags: each source of randomness gets its own generator so that, e.g.,
# evaluation or the reference search never shifts the training schedule
_SCHEDULE_TAG = 1
_CLIENT_TAG = 2
_EVAL_TAG = 3
_COMMUNITY_TAG = 4
_INIT_TAG = 5


@dataclass(frozen=True)
class SimConfig:
    variant: str = "esdagfl"
    rounds: int = 100
    clients_per_round: int = 10
    eval_every: int = 5
    eval_fraction: float = 0.05
    metric_window: int = 20
    accounting: str = "formula"
    model_kind: str = "softmax"
    hidden_dim: int = 0
    task: data_mod.ClusterTaskConfig = field(default_factory=data_mod.ClusterTaskConfig)
    train: model.TrainConfig = field(default_factory=model.TrainConfig)
    walk: walk.WalkConfig = field(default_factory=walk.WalkConfig)
    trigger: publish.TriggerConfig = field(default_factory=publish.TriggerConfig)
    cost: energy.CostParams = field(default_factory=energy.CostParams)
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.rounds < 1 or self.eval_every < 1 or self.metric_window < 1:
            raise ConfigError("rounds, eval_every and metric_window must be >= 1")
        if not 1 <= self.clients_per_round <= self.task.num_clients:
            raise ConfigError(
                f"clients_per_round must lie in [1, {self.task.num_clients}], got {self.clients_per_round}")
        if not 0 < self.eval_fraction <= 1:
            raise ConfigError("eval_fraction must lie in (0, 1]")
        if self.accounting not in energy.ACCOUNTING_MODES:
            raise ConfigError(f"accounting must be one of {energy.ACCOUNTING_MODES}")
        # the variant decides the trigger mode; walk depth and walk count feed the energy model
        object.__setattr__(self, "trigger", dataclasses.replace(
            self.trigger, mode=_MODE_OF_VARIANT[self.variant]))
        object.__setattr__(self, "cost", dataclasses.replace(
            self.cost, walk_depth=self.walk.start_depth, ref_walks=self.walk.ref_walks))
        self.model_spec()

    def model_spec(self) -> model.ModelSpec:
        return model.ModelSpec(self.model_kind, self.task.input_dim, self.hidden_dim,
                               self.task.num_classes)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


class ClientState:
    """A simulated client: private shards, its own RNG stream and an accuracy cache."""

    def __init__(self, cd: data_mod.ClientData, spec: model.ModelSpec, ledger: DagLedger,
                 cost: energy.CostParams, seed: int):
        self.id = cd.client
        self.cluster = cd.cluster
        self.train = cd.train
        self.test = cd.test
        self.cost = cost
        self.rng = np.random.default_rng([seed, _CLIENT_TAG, cd.client])
        self.publishes = 0
        self.rejections = 0
        self._spec = spec
        self._ledger = ledger
        self._acc_cache: dict[int, float] = {}

    def accuracy_of(self, node: int) -> float:
        """Accuracy of a ledger node's model on this client's test shard (payloads are immutable)."""
        acc = self._acc_cache.get(node)
        if acc is None:
            acc = model.accuracy(self._spec, self._ledger.payload(node), self.test)
            self._acc_cache[node] = acc
        return acc


@dataclass
class Decision:
    round: int
    client: int
    published: bool
    parents: tuple
    delta: float
    reference: int | None = None
    new_loss: float | None = None
    reference_loss: float | None = None
    node: int | None = None


@dataclass
class RoundRecord:
    round: int
    mean_accuracy: float
    mean_loss: float
    modularity: float
    modules: int
    pureness: float
    publish_rate: float
    nodes: int
    energy_total: float
    energy_reference: float
    time_total: float


ROUND_COLUMNS = tuple(f.name for f in dataclasses.fields(RoundRecord))


@dataclass
class RunResult:
    config: SimConfig
    records: list
    energy: energy.EnergyLedger
    ledger: DagLedger
    clients: list
    decisions: list

    @property
    def publish_rate(self) -> float:
        return sum(d.published for d in self.decisions) / max(1, len(self.decisions))

    @property
    def final(self) -> RoundRecord:
        return self.records[-1]


def approval_parents(ledger: DagLedger, t1: int, t2: int) -> tuple[int, int]:
    """Parents to record for a publish after the walks reached ``t1`` and ``t2``.

    When both walks end on the same non-genesis tip, the second approval goes
    to that tip's lowest-id parent so the two approvals stay distinct.
    """
    if t1 != t2 or t1 == GENESIS:
        return t1, t2
    return t1, min(ledger.parents(t1))


def client_update(client: ClientState, ledger: DagLedger, cfg: SimConfig,
                  spec: model.ModelSpec, rnd: int):
    """One client's five-step update against the (read-only) round-start ledger.

    Returns ``(decision, new_params, cost)``; nothing is written to the ledger.
    """
    evals = 0

    def evaluator(n):
        nonlocal evals
        evals += 1
        return client.accuracy_of(n)

    t1, t2 = walk.select_two_tips(ledger, evaluator, cfg.walk, client.rng)
    tip_evals = evals
    w_avg = model.average(ledger.payload(t1), ledger.payload(t2))
    w_new = model.local_train(spec, w_avg, client.train, cfg.train, client.rng)
    d = publish.delta(w_new, w_avg)
    dec = Decision(rnd, client.id, False, approval_parents(ledger, t1, t2), d)

    ref_evals = ref_steps = 0
    if cfg.variant == "sdagfl":
        evals = 0
        ref, paths = walk.reference_model(ledger, evaluator, cfg.walk, client.rng, return_paths=True)
        ref_evals, ref_steps = evals, sum(len(p) - 1 for p in paths)
        dec.reference = ref
        dec.new_loss = model.loss(spec, w_new, client.test)
        dec.reference_loss = model.loss(spec, ledger.payload(ref), client.test)
        dec.published = dec.new_loss < dec.reference_loss
    elif cfg.variant == "esdagfl":
        dec.published = publish.should_publish_event(w_new, w_avg, cfg.trigger)
    else:
        dec.published = True

    measured = None
    if cfg.accounting == "measured":
        measured = {"tip_evals": tip_evals, "ref_evals": ref_evals, "ref_steps": ref_steps}
    cost = energy.update_cost(
        client.cost, rnd, client.id, cfg.train.batch_size, cfg.train.batches, cfg.train.epochs,
        include_reference=cfg.variant == "sdagfl", measured=measured)
    return dec, w_new, cost


def _record(rnd: int, cfg: SimConfig, spec, ledger, clients, truth, decisions, energy_ledger):
    acc, loss = metrics.evaluate_population(
        spec, ledger, clients, cfg.eval_fraction, cfg.walk,
        np.random.default_rng([cfg.seed, _EVAL_TAG, rnd]))
    g = metrics.window_graph(ledger, rnd, cfg.metric_window)
    _, q, modules = metrics.detect_communities(
        g, np.random.default_rng([cfg.seed, _COMMUNITY_TAG, rnd]))
    totals = energy_ledger.totals()
    return RoundRecord(
        round=rnd, mean_accuracy=acc, mean_loss=loss, modularity=q, modules=modules,
        pureness=metrics.approval_pureness(g, truth),
        publish_rate=sum(d.published for d in decisions) / max(1, len(decisions)),
        nodes=ledger.node_count(), energy_total=totals["total"],
        energy_reference=totals["reference"], time_total=totals["time"])


def run(cfg: SimConfig, threads: int = 1, progress=None) -> RunResult:
    """Execute a full simulation. Identical configs give identical results.

    Args:
        cfg: Simulation configuration.
        threads: Worker threads for the client updates of a round. Results do
            not depend on this value.
        progress: Optional callable invoked with each :class:`RoundRecord`.
    """
    spec = cfg.model_spec()
    task_data = data_mod.generate(cfg.task, cfg.seed)
    genesis = model.init_params(spec, np.random.default_rng([cfg.seed, _INIT_TAG]))
    ledger = DagLedger(genesis, spec.num_params)
    clients = [ClientState(cd, spec, ledger, cfg.cost, cfg.seed) for cd in task_data]
    truth = {c.id: c.cluster for c in clients}
    schedule = np.random.default_rng([cfg.seed, _SCHEDULE_TAG])
    energy_ledger = energy.EnergyLedger()
    decisions: list[Decision] = []
    records: list[RoundRecord] = []
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        for rnd in range(1, cfg.rounds + 1):
            chosen = sorted(int(i) for i in schedule.choice(len(clients), cfg.clients_per_round,
                                                            replace=False))

            def job(i, rnd=rnd):
                return client_update(clients[i], ledger, cfg, spec, rnd)

            results = list(pool.map(job, chosen)) if pool else [job(i) for i in chosen]
            for dec, w_new, cost in results:  # barrier: commit in client-id order
                client = clients[dec.client]
                if dec.published:
                    dec.node = ledger.publish(w_new, dec.parents, dec.client, rnd)
                    client.publishes += 1
                else:
                    client.rejections += 1
                energy_ledger.add(cost)
                decisions.append(dec)
            if rnd % cfg.eval_every == 0 or rnd == cfg.rounds:
                rec = _record(rnd, cfg, spec, ledger, clients, truth, decisions, energy_ledger)
                records.append(rec)
                if progress is not None:
                    progress(rec)
    finally:
        if pool:
            pool.shutdown()
    return RunResult(cfg, records, energy_ledger, ledger, clients, decisions)


def final_loss(result: RunResult) -> float:
    return result.final.mean_loss


SWEEP_COLUMNS = ("threshold", "final_accuracy", "pureness", "publish_rate", "total_energy")


def sweep_threshold(cfg: SimConfig, thresholds, threads: int = 1) -> list[dict]:
    """One seed-pinned event-triggered run per threshold."""
    thresholds = list(thresholds)
    if not thresholds:
        raise ConfigError("threshold sweep needs at least one threshold")
    rows = []
    for t in thresholds:
        res = run(cfg.replace(variant="esdagfl",
                              trigger=dataclasses.replace(cfg.trigger, threshold=float(t))),
                  threads=threads)
        rows.append({"threshold": float(t), "final_accuracy": res.final.mean_accuracy,
                     "pureness": res.final.pureness, "publish_rate": res.publish_rate,
                     "total_energy": res.energy.totals()["total"]})
    return rows


def energy_reduction(baseline: RunResult, optimized: RunResult) -> float:
    """Fractional total-energy saving of ``optimized`` relative to ``baseline``."""
    e0 = baseline.energy.totals()["total"]
    e1 = optimized.energy.totals()["total"]
    return (e0 - e1) / e0 if e0 else math.nan
