"""Experiment orchestration, summaries and metrics files."""
from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..calibration import CalibrationTable
from ..profiling import ProfilingConfig
from ..tiers import TierSpec, validate_tier_order
from .engine import ModelSpec, SimParams, SimState, WindowMetrics, percentile, run_window
from .trace import WorkloadSpec, generate_window, read_trace, split_windows


class ExperimentConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class ExperimentConfig:
    name: str
    tiers: list[TierSpec]
    model: ModelSpec
    workload: WorkloadSpec
    profiling: ProfilingConfig = field(default_factory=ProfilingConfig)
    windows: int = 20
    warmup_windows: int = 1
    trace_path: str | None = None
    params: SimParams = field(default_factory=SimParams)

    def validate(self, calibrated: list[TierSpec] | None = None) -> list[str]:
        errs = list(self.model.validate())
        if self.windows < 0:
            errs.append("experiment.windows: must be >= 0")
        if self.warmup_windows < 0:
            errs.append("experiment.warmup_windows: must be >= 0")
        if self.model.kind == "2T" and len(self.tiers) != 1:
            errs.append(f"model.kind: 2T needs exactly one compressed tier, {len(self.tiers)} configured")
        if self.model.kind != "none" and not self.tiers:
            errs.append("tiers: at least one compressed tier is required")
        if not 0 < self.params.rehome_fraction <= 1:
            errs.append("sim.rehome_fraction: must be in (0, 1]")
        if self.params.template_pages < 1:
            errs.append("sim.template_pages: must be >= 1")
        if abs(self.workload.window_seconds - self.profiling.window_seconds) > 1e-9:
            errs.append("workload.window_seconds: must equal profiling.window_seconds")
        errs.extend(f"tiers: {e}" for e in validate_tier_order(calibrated or self.tiers))
        return errs


@dataclass
class ExperimentResult:
    name: str
    windows: list[WindowMetrics]
    summary: dict
    tier_names: list[str]

    def to_json(self) -> str:
        doc = {"name": self.name, "tiers": self.tier_names, "summary": self.summary,
               "windows": [w.to_dict() for w in self.windows]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def csv_header(self) -> list[str]:
        n = len(self.tier_names)
        return (["window", "tco_usd", "savings_pct", "fault_ns", "p50", "p99", "tax_ns"]
                + [f"pages_T{i}" for i in range(1, n + 1)] + [f"faults_T{i}" for i in range(1, n + 1)])

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        jpath, cpath = out / f"{self.name}.json", out / f"{self.name}.csv"
        jpath.write_text(self.to_json())
        with cpath.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.csv_header())
            for m in self.windows:
                w.writerow([m.window_index, repr(m.realized_tco_usd), repr(m.tco_savings_pct),
                            m.realized_fault_ns, m.p50_ns, m.p99_ns, m.migration_tax_ns]
                           + m.pages_per_tier + m.faults_per_tier)
        return jpath, cpath


def summarize(windows: list[WindowMetrics], latency_counts: Counter | None = None) -> dict:
    if not windows:
        return {"empty": True, "windows": 0}
    accesses = sum(w.accesses for w in windows)
    fault_ns = sum(w.realized_fault_ns for w in windows)
    n = len(windows[0].faults_per_tier)
    return {
        "empty": False,
        "windows": len(windows),
        "mean_tco_savings_pct": float(np.mean([w.tco_savings_pct for w in windows])),
        "final_tco_savings_pct": windows[-1].tco_savings_pct,
        "total_realized_fault_ns": int(fault_ns),
        "total_accesses": int(accesses),
        "slowdown_pct": (float(sum(w.slowdown_pct * w.accesses for w in windows)) / accesses) if accesses else 0.0,
        "p50_ns": percentile(latency_counts, 50) if latency_counts else max(w.p50_ns for w in windows),
        "p99_ns": percentile(latency_counts, 99) if latency_counts else max(w.p99_ns for w in windows),
        "total_migration_tax_ns": int(sum(w.migration_tax_ns for w in windows)),
        "total_migration_bytes": int(sum(w.migration_bytes for w in windows)),
        "faults_per_tier": [int(sum(w.faults_per_tier[i] for w in windows)) for i in range(n)],
        "approximate_windows": sum(1 for w in windows if w.approximate_plan),
    }


def fault_sanity_check(history) -> list[dict]:
    """Tiers that faulted more than some faster tier.

    ``history`` is a list of WindowMetrics or of per-tier fault lists; the
    faults are summed over all windows first. Empty list means healthy.
    """
    totals = None
    for item in history:
        faults = item.faults_per_tier if isinstance(item, WindowMetrics) else list(item)
        totals = list(faults) if totals is None else [a + b for a, b in zip(totals, faults)]
    if not totals:
        return []
    out = []
    worst = totals[0]
    for i in range(1, len(totals)):
        if totals[i] > worst:
            out.append({"tier": i + 1, "faults": totals[i], "faster_tier_faults": worst})
        worst = min(worst, totals[i])
    return out


def load_windows(config: ExperimentConfig):
    """Per-window record arrays: generated on the fly or cut from a trace file."""
    total = config.warmup_windows + config.windows
    if config.trace_path:
        records = read_trace(config.trace_path)
        parts = split_windows(records, config.profiling.window_seconds, total)
        return iter(parts)
    return (generate_window(config.workload, w) for w in range(total))


def run_experiment(config: ExperimentConfig, calibration: CalibrationTable, windows=None) -> ExperimentResult:
    """Run warmup plus measured windows; ``windows`` overrides the trace source."""
    specs = calibration.apply(config.tiers)
    errs = config.validate(specs)
    if errs:
        raise ExperimentConfigError(errs)
    ratios = {s.id: calibration[s.name].ratio for s in specs}
    state = SimState(config.workload.footprint_bytes, specs, config.workload.data_profile,
                     config.profiling, config.params, ratios, seed=config.workload.seed)
    source = windows if windows is not None else load_windows(config)
    metrics = []
    for w, records in enumerate(source):
        warm = w < config.warmup_windows
        m = run_window(state, records, config.model, w, warmup=warm)
        if m is not None:
            metrics.append(m)
    summary = summarize(metrics, state.latency_counts)
    summary["fault_sanity"] = fault_sanity_check(metrics)
    return ExperimentResult(config.name, metrics, summary, [s.name for s in sorted(specs, key=lambda s: s.id)])
