"""CSV, JSON and SVG outputs of simulation runs."""
from __future__ import annotations

import csv
import dataclasses
import json
from importlib import resources
from pathlib import Path

from . import config, energy, svg
from .sim import ROUND_COLUMNS, SWEEP_COLUMNS, RunResult, energy_reduction

COMPARE_COLUMNS = ("round", "energy_sdagfl", "energy_esdagfl", "time_sdagfl", "time_esdagfl",
                   "e_ref_sdagfl", "e_ref_esdagfl", "accuracy_sdagfl", "accuracy_esdagfl")


def _write_csv(path, header, rows) -> None:
    # csv's default dialect already quotes per RFC 4180 and ends lines with CRLF
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_rounds(result: RunResult, path) -> None:
    _write_csv(path, ROUND_COLUMNS,
               (dataclasses.astuple(r) for r in result.records))


def write_energy(result: RunResult, path) -> None:
    _write_csv(path, energy.ENERGY_COLUMNS, result.energy.table())


def summary(result: RunResult, include_config: bool = True) -> dict:
    final = result.final
    totals = result.energy.totals()
    e_obj, f_loss = energy.objective(result.energy, final.mean_loss)
    out = {
        "config_hash": config.config_hash(result.config),
        "variant": result.config.variant,
        "seed": result.config.seed,
        "rounds": result.config.rounds,
        "final": {
            "round": final.round, "mean_accuracy": final.mean_accuracy,
            "mean_loss": final.mean_loss, "modularity": final.modularity,
            "modules": final.modules, "pureness": final.pureness,
            "publish_rate": result.publish_rate,
        },
        "energy": totals,
        "objective": {"reference_energy": e_obj, "final_loss": f_loss},
        "ledger": {
            "nodes": result.ledger.node_count(), "tips": len(result.ledger.tips()),
            "publishes": sum(d.published for d in result.decisions),
            "rejections": sum(not d.published for d in result.decisions),
        },
    }
    if include_config:
        out["config"] = config.to_dict(result.config)
    return out


def summary_schema() -> dict:
    return json.loads(resources.files("tanglefl").joinpath("schemas", "summary.schema.json").read_text())


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_curves(result: RunResult, path) -> None:
    xs = [r.round for r in result.records]
    name = result.config.variant

    def col(attr):
        return {name: (xs, [getattr(r, attr) for r in result.records])}

    svg.line_panels([("Accuracy", col("mean_accuracy")), ("Cross-entropy loss", col("mean_loss")),
                     ("Modularity", col("modularity")), ("Cumulative energy", col("energy_total"))],
                    path)


def write_run(result: RunResult, out_dir, curves: bool = True) -> dict:
    """Write rounds.csv, energy.csv, summary.json and curves.svg; returns the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_rounds(result, out / "rounds.csv")
    write_energy(result, out / "energy.csv")
    summ = summary(result)
    write_json(summ, out / "summary.json")
    if curves:
        write_curves(result, out / "curves.svg")
    return summ


def compare_rows(baseline: RunResult, optimized: RunResult):
    """Per-round energy/time of both variants (summed over that round's client updates)."""
    b, o = baseline.energy.round_totals(), optimized.energy.round_totals()
    bref, oref = _round_ref(baseline), _round_ref(optimized)
    bacc = {r.round: r.mean_accuracy for r in baseline.records}
    oacc = {r.round: r.mean_accuracy for r in optimized.records}
    for rnd in sorted(b):
        yield (rnd, b[rnd][0], o[rnd][0], b[rnd][1], o[rnd][1], bref.get(rnd, 0.0),
               oref.get(rnd, 0.0), bacc.get(rnd, ""), oacc.get(rnd, ""))


def _round_ref(result):
    out: dict = {}
    for r in result.energy.rows:
        out[r.round] = out.get(r.round, 0.0) + r.e_ref
    return out


def write_compare(baseline: RunResult, optimized: RunResult, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = list(compare_rows(baseline, optimized))
    _write_csv(out / "compare.csv", COMPARE_COLUMNS, rows)
    red = energy_reduction(baseline, optimized)
    eb, eo = baseline.energy.totals(), optimized.energy.totals()
    summ = {
        "energy_reduction": red,
        "time_reduction": (eb["time"] - eo["time"]) / eb["time"],
        "reference_energy_sdagfl": eb["reference"],
        "energy_difference": eb["total"] - eo["total"],
        "sdagfl": summary(baseline, include_config=False),
        "esdagfl": summary(optimized, include_config=False),
        "config": config.to_dict(optimized.config),
    }
    write_json(summ, out / "compare.json")
    xs = [r[0] for r in rows]
    svg.line_panels([
        ("Time per round", {"sdagfl": (xs, [r[3] for r in rows]), "esdagfl": (xs, [r[4] for r in rows])}),
        ("Energy per round", {"sdagfl": (xs, [r[1] for r in rows]), "esdagfl": (xs, [r[2] for r in rows])}),
    ], out / "duration.svg")
    return summ


def write_sweep(rows, path) -> None:
    _write_csv(path, SWEEP_COLUMNS, ([r[c] for c in SWEEP_COLUMNS] for r in rows))
