"""CPU energy and time accounting for one client model update.

Dynamic CPU energy is modelled as ``C * cycles * f**2`` and time as
``cycles / f``. One update is split into four stages: obtaining two tips,
aggregating them, local training and (baseline only) the reference-model
search. The event-triggered variant skips the last stage entirely.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError

ACCOUNTING_MODES = ("formula", "measured")
STAGES = ("tip", "aggregation", "training", "reference")


@dataclass(frozen=True)
class CostParams:
    capacitance: float = 1e-2
    cpu_freq: float = 1.0
    eval_cycles: float = 10.0
    agg_cycles: float = 5.0
    train_cycles_per_sample: float = 1.0
    confidence_cycles: float = 2.0
    rating_cycles: float = 2.0
    walk_depth: int = 15
    avg_children: float = 2.0
    ref_walks: int = 5

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"cost parameter {f.name} must be a positive finite number, got {v!r}")


def tip_cycles(p: CostParams) -> float:
    return 2 * p.walk_depth * p.avg_children * p.eval_cycles


def reference_cycles(p: CostParams) -> float:
    return p.ref_walks * p.walk_depth * (
        p.avg_children * p.eval_cycles + p.confidence_cycles + p.avg_children * p.rating_cycles)


def training_cycles(p: CostParams, batch_size: int, batches: int, epochs: int) -> float:
    return batch_size * batches * epochs * p.train_cycles_per_sample


def tip_energy(p: CostParams) -> float:
    return p.capacitance * tip_cycles(p) * p.cpu_freq ** 2


def aggregation_energy(p: CostParams) -> float:
    return p.capacitance * p.agg_cycles * p.cpu_freq ** 2


def training_energy(p: CostParams, batch_size: int, batches: int, epochs: int) -> float:
    return p.capacitance * training_cycles(p, batch_size, batches, epochs) * p.cpu_freq ** 2


def reference_energy(p: CostParams) -> float:
    return p.capacitance * reference_cycles(p) * p.cpu_freq ** 2


def total_update_energy(p: CostParams, batch_size: int, batches: int, epochs: int,
                        include_reference: bool = True) -> float:
    total = tip_energy(p) + aggregation_energy(p) + training_energy(p, batch_size, batches, epochs)
    if include_reference:
        total += reference_energy(p)
    return total


def tip_time(p: CostParams) -> float:
    return tip_cycles(p) / p.cpu_freq


def cycles_time(p: CostParams, cycles: float) -> float:
    return cycles / p.cpu_freq


def cycles_energy(p: CostParams, cycles: float) -> float:
    return p.capacitance * cycles * p.cpu_freq ** 2


def calibrate_train_cycles(p: CostParams, batch_size: int, batches: int, epochs: int,
                           reference_share: float) -> float:
    """Per-sample training cycles that make the reference stage ``reference_share`` of one update.

    Solves ``ref / (tip + agg + train + ref) == reference_share`` for the
    training term.
    """
    if not 0 < reference_share < 1:
        raise ConfigError("reference_share must lie in (0, 1)")
    ref = reference_cycles(p)
    train = ref / reference_share - ref - tip_cycles(p) - p.agg_cycles
    if train <= 0:
        raise ConfigError(
            f"reference share {reference_share} unreachable: tip and aggregation already too large")
    return train / (batch_size * batches * epochs)


@dataclass
class UpdateCost:
    """Energy and time of one client update, split by stage."""
    round: int
    client: int
    e_tip: float
    e_agg: float
    e_train: float
    e_ref: float
    t_tip: float
    t_agg: float
    t_train: float
    t_ref: float

    @property
    def e_total(self) -> float:
        return self.e_tip + self.e_agg + self.e_train + self.e_ref

    @property
    def t_total(self) -> float:
        return self.t_tip + self.t_agg + self.t_train + self.t_ref


def update_cost(p: CostParams, round: int, client: int, batch_size: int, batches: int,
                epochs: int, include_reference: bool, measured: dict | None = None) -> UpdateCost:
    """Cost of one update.

    With ``measured`` (keys ``tip_evals``, ``ref_evals``, ``ref_steps``) the walk
    stages are charged by the evaluations actually performed instead of the
    expected ``d * l`` per walk.
    """
    if measured is None:
        c_tip = tip_cycles(p)
        c_ref = reference_cycles(p) if include_reference else 0.0
    else:
        c_tip = measured["tip_evals"] * p.eval_cycles
        c_ref = (measured["ref_evals"] * (p.eval_cycles + p.rating_cycles)
                 + measured["ref_steps"] * p.confidence_cycles) if include_reference else 0.0
    c_train = training_cycles(p, batch_size, batches, epochs)
    return UpdateCost(
        round, client,
        cycles_energy(p, c_tip), cycles_energy(p, p.agg_cycles),
        cycles_energy(p, c_train), cycles_energy(p, c_ref),
        cycles_time(p, c_tip), cycles_time(p, p.agg_cycles),
        cycles_time(p, c_train), cycles_time(p, c_ref),
    )


ENERGY_COLUMNS = ("round", "client", "e_tip", "e_agg", "e_train", "e_ref", "e_total", "t_tip")


@dataclass
class EnergyLedger:
    """Per-update cost rows plus running totals per client."""
    rows: list = field(default_factory=list)
    per_client: dict = field(default_factory=dict)

    def add(self, cost: UpdateCost) -> None:
        self.rows.append(cost)
        acc = self.per_client.setdefault(
            cost.client, {"tip": 0.0, "aggregation": 0.0, "training": 0.0, "reference": 0.0,
                          "time": 0.0})
        acc["tip"] += cost.e_tip
        acc["aggregation"] += cost.e_agg
        acc["training"] += cost.e_train
        acc["reference"] += cost.e_ref
        acc["time"] += cost.t_total

    def totals(self) -> dict:
        out = {k: math.fsum(getattr(r, a) for r in self.rows)
               for k, a in zip(STAGES, ("e_tip", "e_agg", "e_train", "e_ref"))}
        out["total"] = math.fsum(r.e_total for r in self.rows)
        out["time"] = math.fsum(r.t_total for r in self.rows)
        return out

    def round_totals(self) -> dict:
        """``{round: (energy, time)}`` summed over the clients updating in that round."""
        out: dict = {}
        for r in self.rows:
            e, t = out.get(r.round, (0.0, 0.0))
            out[r.round] = (e + r.e_total, t + r.t_total)
        return out

    def table(self):
        """Rows for ``energy.csv`` in :data:`ENERGY_COLUMNS` order."""
        for r in self.rows:
            yield (r.round, r.client, r.e_tip, r.e_agg, r.e_train, r.e_ref, r.e_total, r.t_tip)


def objective(ledger: EnergyLedger, final_loss: float) -> tuple[float, float]:
    """The pair (accumulated reference-search energy, final training loss) being minimised."""
    return ledger.totals()["reference"], float(final_loss)


def cost_dict(p: CostParams) -> dict:
    return asdict(p)
