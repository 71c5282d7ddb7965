"""Command-line entry point: ``ntiersim <command> [options]``.

Errors print one line, ``ntiersim: error: <message>``, and exit with 2
(usage, config or calibration problems) or 1 (runtime failures).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .calibration import CalibrationTable, MissingCalibration, bundled_path, characterize
from .config import ConfigError, load_config, preset_names
from .models.scoring import ScoringPolicy, TierRow, score_tiers
from .sim.experiment import ExperimentConfigError, run_experiment
from .sim.trace import TraceError, generate_trace, write_trace
from .tiers import MEDIA

PROG = "ntiersim"
WORKERS_ENV = "NTIERSIM_WORKERS"


class CliError(Exception):
    def __init__(self, message: str, code: int = 2):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message.replace("\n", " "))


def _load_calibration(path) -> CalibrationTable:
    p = Path(path) if path else bundled_path()
    if not p.exists():
        raise CliError(f"calibration file not found: {p}")
    try:
        return CalibrationTable.from_csv(p)
    except (ValueError, IndexError) as exc:
        raise CliError(f"bad calibration file {p}: {exc}") from None


def _config(args, required=True):
    if not args.config:
        if required:
            raise CliError("--config is required")
        return None
    try:
        return load_config(args.config[0] if isinstance(args.config, list) else args.config, args.seed)
    except FileNotFoundError as exc:
        raise CliError(str(exc)) from None
    except ConfigError as exc:
        raise CliError(str(exc)) from None


def worker_count(jobs: int) -> int:
    cap = os.environ.get(WORKERS_ENV)
    n = os.cpu_count() or 1
    if cap:
        try:
            n = int(cap)
        except ValueError:
            raise CliError(f"{WORKERS_ENV} must be an integer, got {cap!r}") from None
        if n < 1:
            raise CliError(f"{WORKERS_ENV} must be >= 1, got {n}")
    return max(1, min(n, jobs))


# -- commands ---------------------------------------------------------------

def cmd_characterize(args) -> int:
    loaded = _config(args)
    cfg = loaded.experiment
    pages = args.pages or loaded.characterize_pages
    out = Path(args.out or "calibration.csv")
    if not cfg.tiers:
        raise CliError("config defines no tiers to characterize")
    try:
        table = characterize(cfg.tiers, cfg.workload.data_profile, pages, min_pages=1)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    table.metadata["lzo"] = "LZO1X (lzokay)"
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out)
    print(f"wrote {len(table)} rows to {out}")
    return 0


def cmd_gen_trace(args) -> int:
    loaded = _config(args)
    cfg = loaded.experiment
    windows = args.windows if args.windows is not None else cfg.warmup_windows + cfg.windows
    out = Path(args.out or "trace.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    n = write_trace(out, generate_trace(cfg.workload, windows))
    print(f"wrote {n} records ({windows} windows) to {out}")
    return 0


def _run_one(cfg, calibration):
    return run_experiment(cfg, calibration)


def _experiment(loaded, args, calibration):
    cfg = loaded.experiment
    if getattr(args, "windows", None) is not None:
        cfg.windows = args.windows
    try:
        calibration.apply(cfg.tiers)
    except MissingCalibration as exc:
        raise CliError(str(exc)) from None
    errs = cfg.validate(calibration.apply(cfg.tiers))
    if errs:
        raise CliError(f"{loaded.source}: " + "; ".join(errs))
    return cfg


def cmd_simulate(args) -> int:
    loaded = _config(args)
    calibration = _load_calibration(args.calibration)
    cfg = _experiment(loaded, args, calibration)
    try:
        result = run_experiment(cfg, calibration)
    except (TraceError, ExperimentConfigError) as exc:
        raise CliError(str(exc)) from None
    jpath, cpath = result.write(args.out or "results")
    s = result.summary
    if s.get("empty"):
        print(f"{cfg.name}: no measured windows; wrote {jpath} and {cpath}")
    else:
        print(f"{cfg.name}: mean TCO savings {s['mean_tco_savings_pct']:.2f}%, "
              f"fault time {s['total_realized_fault_ns'] / 1e9:.3f} s, p99 {s['p99_ns']} ns; "
              f"wrote {jpath} and {cpath}")
    return 0


def cmd_compare(args) -> int:
    if not args.config or len(args.config) < 2:
        raise CliError("compare needs at least two configs")
    calibration = _load_calibration(args.calibration)
    loaded = []
    for c in args.config:
        try:
            loaded.append(load_config(c, args.seed))
        except (FileNotFoundError, ConfigError) as exc:
            raise CliError(str(exc)) from None
    seeds = {lc.experiment.workload.seed for lc in loaded}
    if len(seeds) != 1:
        raise CliError(f"configs use different workload seeds {sorted(seeds)}; pass --seed to align them")
    names = [lc.experiment.name for lc in loaded]
    if len(set(names)) != len(names):
        raise CliError(f"config names must be distinct, got {names}")
    cfgs = [_experiment(lc, args, calibration) for lc in loaded]
    workers = worker_count(len(cfgs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_run_one, cfgs, [calibration] * len(cfgs)))
    else:
        results = [run_experiment(c, calibration) for c in cfgs]

    out = Path(args.out or "compare")
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for r in results:
        r.write(out)
        s = r.summary
        if s.get("empty"):
            rows.append([r.name, "", "", ""])
            continue
        rows.append([r.name, f"{s['mean_tco_savings_pct']:.4f}", f"{s['slowdown_pct']:.4f}", str(s["p99_ns"])])
    with (out / "comparison.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config", "tco_savings_pct", "slowdown_pct", "p99_ns"])
        w.writerows(rows)
    with (out / "plot_data.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["config", "tco_savings_pct", "slowdown_pct"])
        w.writerows(r[:3] for r in rows)
    width = max(len(r[0]) for r in rows)
    print(f"{'config':<{width}}  savings%  slowdown%  p99_ns")
    for r in rows:
        print(f"{r[0]:<{width}}  {r[1]:>8}  {r[2]:>9}  {r[3]:>6}")
    return 0


def parse_weights(text: str) -> ScoringPolicy:
    parts = text.split(",")
    if len(parts) != 3:
        raise CliError(f"--weights needs three comma-separated numbers, got {text!r}")
    try:
        a, b, g = (float(p) for p in parts)
    except ValueError:
        raise CliError(f"--weights needs three comma-separated numbers, got {text!r}") from None
    try:
        return ScoringPolicy(a, b, g)
    except ValueError as exc:
        raise CliError(f"--weights: {exc}") from None


def calibration_rows(table: CalibrationTable, media=None) -> dict[str, TierRow]:
    """Score inputs per tier: ratio, access latency, USD per stored GB."""
    media = media or MEDIA
    by_tag = {m.tag: m for m in media.values()}
    rows = {}
    for row in table:
        tag = row.tier_id.rsplit("-", 1)[-1]
        m = by_tag.get(tag)
        if m is None:
            raise CliError(f"tier {row.tier_id}: unknown media tag {tag!r}")
        rows[row.tier_id] = TierRow(row.ratio, row.decomp_ns, m.cost_per_gb / row.ratio)
    return rows


def cmd_score_tiers(args) -> int:
    policy = parse_weights(args.weights)
    table = _load_calibration(args.calibration)
    rows = calibration_rows(table)
    if len(rows) < 2:
        raise CliError("scoring needs at least two tiers in the calibration table")
    ranked = score_tiers(rows, policy)
    width = max(len(t) for t in rows)
    print(f"rank  {'tier':<{width}}  score   ratio_sc  lat_sc  cost_sc  ratio  lat_ns  usd_per_gb")
    for i, s in enumerate(ranked, 1):
        r = rows[s.tier_id]
        print(f"{i:>4}  {s.tier_id:<{width}}  {s.score:.4f}  {s.ratio_sc:.4f}    {s.latency_sc:.4f}  "
              f"{s.cost_sc:.4f}   {r.ratio:.3f}  {int(r.latency):>6}  {r.cost:.4f}")
    return 0


def cmd_report(args) -> int:
    path = Path(args.metrics)
    if not path.exists():
        raise CliError(f"metrics file not found: {path}")
    try:
        doc = json.loads(path.read_text())
        summary, windows = doc["summary"], doc["windows"]
    except (ValueError, KeyError) as exc:
        raise CliError(f"{path}: not a metrics document ({exc})") from None
    lines = [f"experiment {doc.get('name', path.stem)}  tiers: {', '.join(doc.get('tiers', []))}"]
    if summary.get("empty"):
        lines.append("no measured windows")
    else:
        lines.append(f"mean TCO savings {summary['mean_tco_savings_pct']:.2f}%  "
                     f"fault time {summary['total_realized_fault_ns'] / 1e9:.3f} s  "
                     f"p99 {summary['p99_ns']} ns  migration tax {summary['total_migration_tax_ns'] / 1e9:.3f} s")
        sanity = summary.get("fault_sanity") or []
        lines.append("fault ordering: healthy" if not sanity else
                     "fault ordering: " + ", ".join(f"T{v['tier']} ({v['faults']} > {v['faster_tier_faults']})"
                                                    for v in sanity))
        lines.append("window  savings%   fault_ms  pred_tco  placement")
        for w in windows:
            plan = w.get("plan") or {}
            hist = " ".join(f"{k}={v}" for k, v in (plan.get("regions") or {}).items())
            approx = " (approx)" if plan.get("approximate") else ""
            lines.append(f"{w['window_index']:>6}  {w['tco_savings_pct']:8.2f}  {w['realized_fault_ns'] / 1e6:9.2f}"
                         f"  {w['predicted_tco_usd']:8.3f}  {hist}{approx}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="config file or bundled preset name")
    common.add_argument("--seed", type=int, help="override the workload and sampling seeds")
    common.add_argument("--out", help="output file or directory")

    parser = _Parser(prog=PROG, description="DRAM plus N compressed tiers: simulator and placement models")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("characterize", parents=[common], help="measure tiers, write a calibration CSV")
    p.add_argument("--pages", type=int, help="pages per tier (default from config)")
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("gen-trace", parents=[common], help="write the workload trace (CSV or .npy)")
    p.add_argument("--windows", type=int, help="number of windows (default warmup + measured)")
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("simulate", parents=[common], help="run one experiment")
    p.add_argument("--calibration", help="calibration CSV (default: bundled table)")
    p.add_argument("--windows", type=int, help="override the measured window count")
    p.set_defaults(func=cmd_simulate)

    cmp_common = _Parser(add_help=False)
    cmp_common.add_argument("--config", action="append", help="config file or preset (repeat)")
    cmp_common.add_argument("--seed", type=int)
    cmp_common.add_argument("--out")
    p = sub.add_parser("compare", parents=[cmp_common], help="run several experiments on one trace")
    p.add_argument("configs", nargs="*", help="more configs")
    p.add_argument("--calibration")
    p.add_argument("--windows", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("score-tiers", parents=[common], help="rank calibrated tiers")
    p.add_argument("--calibration", help="calibration CSV (default: bundled table)")
    p.add_argument("--weights", required=True, help="compressibility,latency,cost weights summing to 1")
    p.set_defaults(func=cmd_score_tiers)

    p = sub.add_parser("report", parents=[common], help="summarize a metrics JSON file")
    p.add_argument("metrics", help="metrics JSON written by simulate")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("presets", help="list bundled configs")
    p.set_defaults(func=lambda a: print("\n".join(preset_names())) or 0)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "compare":
            args.config = (args.config or []) + list(args.configs)
        return args.func(args)
    except CliError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return exc.code
    except MissingCalibration as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError, ValueError) as exc:
        print(f"{PROG}: error: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
