"""Command-line entry point: ``tanglefl {run,compare,sweep,export-ledger}``."""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import config, report, sim
from .data import generate, save_dataset
from .errors import ConfigError

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

EPILOG = """\
output files (CSV files have a header row, RFC 4180 quoting, CRLF line ends):
  rounds.csv   one row per evaluation round: round, mean_accuracy, mean_loss,
               modularity, modules, pureness, publish_rate (cumulative), nodes,
               energy_total, energy_reference, time_total (cumulative)
  energy.csv   one row per client update: round, client, e_tip, e_agg, e_train,
               e_ref, e_total, t_tip
  compare.csv  per round, summed over that round's updates: round,
               energy_sdagfl, energy_esdagfl, time_sdagfl, time_esdagfl,
               e_ref_sdagfl, e_ref_esdagfl, accuracy_sdagfl, accuracy_esdagfl
  sweep.csv    per threshold: threshold, final_accuracy, pureness,
               publish_rate, total_energy
  summary.json run summary (schema: tanglefl/schemas/summary.schema.json)

environment:
  TANGLEFL_THREADS  worker threads for client updates (0 = one per CPU,
                    default 1); results do not depend on it

exit codes: 0 ok, 2 config error, 3 I/O error
"""


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH",
                        help="JSON config file; a minimal one is {\"variant\": \"esdagfl\"}")
    common.add_argument("--out", required=True, metavar="DIR", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    p = argparse.ArgumentParser(prog="tanglefl", description=__doc__, epilog=EPILOG,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("run", "run one simulation"),
                        ("compare", "run sdagfl and esdagfl with the same seed and compare energy"),
                        ("export-ledger", "run one simulation and export its ledger and dataset")]:
        sub.add_parser(name, parents=[common], help=help_, epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    sw = sub.add_parser("sweep", parents=[common], help="event-trigger threshold sweep",
                        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sw.add_argument("--thresholds", required=True, metavar="CSV",
                    help="comma-separated thresholds, e.g. 0,0.008,0.12")
    return p


def parse_thresholds(text: str) -> list[float]:
    parts = [t.strip() for t in text.split(",") if t.strip()]
    if not parts:
        raise ConfigError("--thresholds: empty threshold list")
    out = []
    for t in parts:
        try:
            out.append(float(t))
        except ValueError:
            raise ConfigError(f"--thresholds: cannot parse {t!r} as a number") from None
        if not out[-1] >= 0:
            raise ConfigError(f"--thresholds: {t!r} must be >= 0")
    return out


def thread_count() -> int:
    raw = os.environ.get("TANGLEFL_THREADS", "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"TANGLEFL_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("TANGLEFL_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _say(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


def _progress(args, label):
    if args.quiet:
        return None

    def show(rec):
        print(f"[{label}] round {rec.round:4d}  acc {rec.mean_accuracy:.3f}  loss {rec.mean_loss:.4f}  "
              f"Q {rec.modularity:.3f}  modules {rec.modules}  pureness {rec.pureness:.3f}  "
              f"publish {rec.publish_rate:.2f}", file=sys.stderr)
    return show


def _execute(args) -> int:
    try:
        cfg = config.load(args.config)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    threads = thread_count()
    thresholds = parse_thresholds(args.thresholds) if args.command == "sweep" else None
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=sys.stderr)
        return EXIT_IO

    if args.command == "run":
        res = sim.run(cfg, threads, _progress(args, cfg.variant))
        summ = report.write_run(res, out)
        _say(args, f"final accuracy {summ['final']['mean_accuracy']:.4f}, "
                   f"total energy {summ['energy']['total']:.6g}")
    elif args.command == "compare":
        base = sim.run(cfg.replace(variant="sdagfl"), threads, _progress(args, "sdagfl"))
        opt = sim.run(cfg.replace(variant="esdagfl"), threads, _progress(args, "esdagfl"))
        summ = report.write_compare(base, opt, out)
        print(f"energy reduction: {100 * summ['energy_reduction']:.2f}%  "
              f"(sdagfl {summ['sdagfl']['energy']['total']:.6g}, "
              f"esdagfl {summ['esdagfl']['energy']['total']:.6g})")
    elif args.command == "sweep":
        rows = sim.sweep_threshold(cfg, thresholds, threads)
        report.write_sweep(rows, out / "sweep.csv")
        for r in rows:
            _say(args, f"threshold {r['threshold']:g}: accuracy {r['final_accuracy']:.3f}  "
                       f"pureness {r['pureness']:.3f}  publish rate {r['publish_rate']:.3f}")
    else:
        res = sim.run(cfg, threads, _progress(args, cfg.variant))
        res.ledger.export(out)
        save_dataset(generate(cfg.task, cfg.seed), out / "dataset")
        _say(args, f"exported {res.ledger.node_count()} nodes to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _execute(args)
    except ConfigError as exc:
        where = f"{args.config}:{exc.line}: " if exc.line is not None else f"{args.config}: "
        msg = str(exc)
        if exc.line is not None and msg.startswith(f"line {exc.line}: "):
            msg = msg[len(f"line {exc.line}: "):]
        print(f"error: {where}{msg}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
