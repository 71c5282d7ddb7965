"""Acceptance criteria 1-11, each printed as one pass/fail line."""
import time
from collections import Counter
from dataclasses import replace

import numpy as np
import pytest

from ntiersim.calibration import bundled_calibration, characterize
from ntiersim.codecs import Codec, DataProfile
from ntiersim.config import load_config
from ntiersim.models import ScoringPolicy, TierRow, analytical_place, compute_tco, score_tiers
from ntiersim.profiling import REGION_SIZE, ProfilingConfig, SampleEvent, TierFaultSummary, distribute_hotness, \
    make_regions
from ntiersim.sim import ModelSpec, SimState, generate_window, run_experiment, run_window
from ntiersim.tiers import DRAM, TierSpec, default_tiers, migrate

from helpers import (SizedCodec, analytical_instance, brute_force_min, hand_scores, instance_tables,
                     naive_distribute, record, sized_tier)

CAL = bundled_calibration()
HEADLINE = ["2T-C", "2T-M", "2T-A", "6T-WF-C", "6T-WF-M", "6T-WF-A", "6T-AM-0.1"]
SWEEP = ["6T-AM-1.0", "6T-AM-0.9", "6T-AM-0.5"]


class Runs:
    """Runs every acceptance experiment at most once per session."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.cache = {}

    @staticmethod
    def config(name):
        if name == "6T-AM-1.0":
            cfg = load_config("6T-AM-0.1").experiment
            return replace(cfg, name=name, model=replace(cfg.model, tco_knob=1.0))
        return load_config(name).experiment

    def get(self, name):
        if name not in self.cache:
            t0 = time.perf_counter()
            res = run_experiment(self.config(name), CAL)
            secs = time.perf_counter() - t0
            j, c = res.write(self.out_dir / "first")
            self.cache[name] = (res, secs, j.read_bytes(), c.read_bytes())
        return self.cache[name]


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    return Runs(tmp_path_factory.mktemp("acceptance"))


def test_c01_solver_matches_exhaustive_search():
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    bad = []
    n = 600
    for i in range(n):
        regions, tiers, model, cfg, hot = analytical_instance(rng)
        values, costs = instance_tables(regions, tiers, model, hot)
        plan = analytical_place(regions, tiers, model, cfg, hotness=hot)
        best = brute_force_min(values, costs, model.budget(cfg.tco_knob))
        if plan.predicted_perf_ovh != best or plan.approximate:
            bad.append(i)
    secs = time.perf_counter() - t0
    record(1, not bad and secs < 30,
           f"{n} instances (<=8 regions, <=4 tiers), {len(bad)} mismatches, {secs:.1f} s (limit 30 s)")


def test_c02_allocator_bounds():
    rng = np.random.default_rng(7)
    violations = []
    sequences = 1000
    for s in range(sequences):
        tiers = {a: (sized_tier(a, 1), sized_tier(a, 2)) for a in ("zbud", "z3fold", "zsmalloc")}
        next_id = 0
        for step in range(int(rng.integers(20, 120))):
            op = rng.choice(["store", "store", "load", "migrate"])
            if op == "store":
                size = int(rng.integers(8, 4200))
                for a, b in tiers.values():
                    a.store(next_id, SizedCodec.page(next_id, size))
                next_id += 1
            else:
                held = sorted(tiers["zbud"][0].objects)
                if not held:
                    continue
                pid = held[int(rng.integers(len(held)))]
                for a, b in tiers.values():
                    a.load(pid) if op == "load" else migrate(a, b, [pid])
            for k in (0, 1):
                zb, z3, zs = tiers["zbud"][k], tiers["z3fold"][k], tiers["zsmalloc"][k]
                if zb.stored_original_bytes > 2 * zb.pool_bytes:
                    violations.append((s, step, "zbud > 2x"))
                if z3.stored_original_bytes > 3 * z3.pool_bytes:
                    violations.append((s, step, "z3fold > 3x"))
                if zs.pool_bytes > zb.pool_bytes:
                    violations.append((s, step, "zsmalloc > zbud"))
    record(2, not violations, f"{sequences} store/load/migrate sequences, {len(violations)} violations")


def test_c03_characterization_orderings():
    specs = [TierSpec(i + 1, Codec(c), "zsmalloc", DRAM) for i, c in enumerate(("lz4", "lzo", "deflate"))]
    profile = DataProfile("text-like", 3.0)
    ok = 0
    runs_n = 20
    for _ in range(runs_n):
        t = characterize(specs, profile, 200, min_pages=1)
        l4, lo, de = t["ZS-L4-DR"], t["ZS-LO-DR"], t["ZS-DE-DR"]
        if de.ratio >= lo.ratio >= l4.ratio and l4.decomp_ns <= lo.decomp_ns <= de.decomp_ns:
            ok += 1
    record(3, ok >= 0.95 * runs_n, f"orderings held in {ok}/{runs_n} calibration runs (need >= 95%)")


def test_c04_waterfall_convergence():
    specs = CAL.apply(default_tiers())
    ratios = {s.id: CAL[s.name].ratio for s in specs}
    state = SimState(256 << 20, specs, DataProfile("text-like", 4.0), ProfilingConfig(), None, ratios)
    empty = generate_window(replace(load_config("6T-WF-M").experiment.workload, ops_per_window=0), 0)
    model = ModelSpec("NT-WF", coverage=0.45)
    n = state.n_tiers
    reached = None
    for w in range(1, n + 3):
        m = run_window(state, empty, model, w)
        if reached is None and m.pages_per_tier[-1] == state.npages:
            reached = w
    everything_last = {r.index: n for r in state.regions}
    expected = compute_tco(everything_last, state.regions, state.running_ratios(), state.tco_model())
    rel = abs(m.realized_tco_usd - expected) / expected
    record(4, reached == n and rel <= 1e-3,
           f"cold footprint reached tier {n} after {reached} windows; realized vs compute_tco rel diff {rel:.2e}")


def test_c05_knob_monotonicity(runs):
    sav = {name: runs.get(name)[0].summary["mean_tco_savings_pct"] for name in SWEEP + ["6T-AM-0.1"]}
    inc = sav["6T-AM-0.9"] < sav["6T-AM-0.5"] < sav["6T-AM-0.1"]
    record(5, inc and sav["6T-AM-1.0"] == 0.0,
           "savings alpha 1.0/0.9/0.5/0.1 = " + " / ".join(f"{sav[k]:.2f}%" for k in
                                                          ["6T-AM-1.0", "6T-AM-0.9", "6T-AM-0.5", "6T-AM-0.1"]))


def test_c06_two_tier_tradeoff(runs):
    s = {k: runs.get(k)[0].summary for k in ("2T-C", "2T-M", "2T-A")}
    sav = [s[k]["mean_tco_savings_pct"] for k in ("2T-C", "2T-M", "2T-A")]
    flt = [s[k]["total_realized_fault_ns"] for k in ("2T-C", "2T-M", "2T-A")]
    ok = sav[0] < sav[1] < sav[2] and flt[0] < flt[1] < flt[2]
    record(6, ok, "2T C/M/A savings " + "/".join(f"{x:.2f}%" for x in sav)
           + ", fault time " + "/".join(f"{x / 1e9:.2f}s" for x in flt))


def test_c07_n_tier_headline(runs):
    parts = []
    ok = True
    for p in ("C", "M", "A"):
        two, wf = runs.get(f"2T-{p}")[0].summary, runs.get(f"6T-WF-{p}")[0].summary
        good = (wf["mean_tco_savings_pct"] >= two["mean_tco_savings_pct"]
                and wf["total_realized_fault_ns"] <= 1.15 * two["total_realized_fault_ns"])
        ok &= good
        parts.append(f"{p}: WF {wf['mean_tco_savings_pct']:.2f}% vs 2T {two['mean_tco_savings_pct']:.2f}%, "
                     f"faults x{wf['total_realized_fault_ns'] / two['total_realized_fault_ns']:.2f}")
    am, two_a = runs.get("6T-AM-0.1")[0].summary, runs.get("2T-A")[0].summary
    ok &= am["mean_tco_savings_pct"] >= two_a["mean_tco_savings_pct"]
    wall = sum(runs.get(k)[1] for k in HEADLINE)
    cfg = runs.config("2T-A")
    scale = cfg.workload.footprint_bytes == 2 << 30 and cfg.windows == 20
    ok &= wall < 300 and scale
    record(7, ok, "; ".join(parts) + f"; AM-0.1 {am['mean_tco_savings_pct']:.2f}% vs 2T-A "
           f"{two_a['mean_tco_savings_pct']:.2f}%; 2 GiB x 20 windows, wall {wall:.0f} s (limit 300 s)")


def test_c08_fault_identity(runs):
    windows = bad = 0
    for name in HEADLINE + SWEEP:
        res = runs.get(name)[0]
        lat = [CAL[t].decomp_ns for t in res.tier_names]
        for w in res.windows:
            windows += 1
            if w.realized_fault_ns != sum(f * l for f, l in zip(w.faults_per_tier, lat)):
                bad += 1
    record(8, bad == 0 and windows > 0, f"{windows} windows over {len(HEADLINE + SWEEP)} experiments, {bad} mismatches")


def test_c09_determinism(runs, tmp_path):
    differ = []
    for name in HEADLINE + SWEEP:
        _, _, j0, c0 = runs.get(name)
        j, c = run_experiment(runs.config(name), CAL).write(tmp_path)
        if j.read_bytes() != j0 or c.read_bytes() != c0:
            differ.append(name)
    record(9, not differ, f"{len(HEADLINE + SWEEP)} experiments rerun, differing: {differ or 'none'}")


def test_c10_algorithm_fidelity():
    rng = np.random.default_rng(99)
    bad = 0
    fixtures = 50
    for _ in range(fixtures):
        n_regions = int(rng.integers(1, 40))
        regions = make_regions(n_regions * REGION_SIZE)
        n_tiers = int(rng.integers(1, 6))
        for r in regions:
            r.placement = int(rng.integers(0, n_tiers + 1))
        nr = Counter(r.placement for r in regions if r.placement)
        faults = {t: int(rng.integers(0, 500)) if nr[t] else 0 for t in range(1, n_tiers + 1)}
        events = [(int(rng.integers(0, n_regions * REGION_SIZE)), int(rng.integers(1, 100)))
                  for _ in range(int(rng.integers(0, 200)))]
        weight = float(rng.choice([0.0, 0.5, 1.0, 1.5]))
        distribute_hotness([SampleEvent(a, c) for a, c in events],
                           TierFaultSummary(faults, {t: nr[t] for t in faults}), regions,
                           ProfilingConfig(fault_weight=weight))
        spans = [(r.start_addr, r.end_addr, r.placement) for r in regions]
        if [r.hotness for r in regions] != naive_distribute(events, faults, nr, spans, weight):
            bad += 1
    record(10, bad == 0, f"{fixtures} randomized fixtures, {bad} mismatches with the naive reference")


def test_c11_scoring_fidelity():
    rng = np.random.default_rng(11)
    worst = 0.0
    tables = 20
    for _ in range(tables):
        n = int(rng.integers(2, 13))
        rows = {f"T{i}": TierRow(float(rng.uniform(1, 5)), float(rng.uniform(500, 30_000)),
                                 float(rng.uniform(0.1, 3))) for i in range(n)}
        w = rng.dirichlet([1, 1, 1])
        weights = (float(w[0]), float(w[1]), 1.0 - float(w[0]) - float(w[1]))
        expected = hand_scores({k: tuple(v) for k, v in rows.items()}, weights)
        for s in score_tiers(rows, ScoringPolicy(*weights)):
            worst = max(worst, abs(s.score - expected[s.tier_id]))
    record(11, worst <= 1e-9, f"{tables} random tier tables, max abs error {worst:.1e} (limit 1e-9)")
