"""One profile window: replay, profile, decide, migrate, measure."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field

import numpy as np

from ..codecs import PAGE_SIZE, DataProfile, MemoCodec, generate_pages
from ..models import (AnalyticalConfig, PlacementPlan, TcoModel, WaterfallConfig, analytical_place,
                      compute_tco, estimate_perf_ovh, migration_screen, threshold_for_coverage,
                      waterfall_step)
from ..models.analytical import region_hotness
from ..models.migration import BOOKKEEPING_NS
from ..profiling import (DRAM_PLACEMENT, PAGE_SHIFT, PAGES_PER_REGION, ProfilingConfig,
                         TierFaultSummary, distribute_hotness, make_regions, mean_hotness,
                         sample_accesses)
from ..tiers import DRAM, CompressedTier, Media, TierSpec, migrate

MODEL_KINDS = ("none", "2T", "NT-WF", "NT-AM")
CONTENT_STREAM = 0xC0
PERCENTILES = (50, 99)


class SimulationError(RuntimeError):
    pass


@dataclass
class ModelSpec:
    """Which placement model runs each window, and its knobs."""

    kind: str = "none"
    hotness_threshold: float | None = None
    coverage: float | None = None
    tco_knob: float | None = None
    k: dict[int, float] = field(default_factory=dict)
    hotness_source: str | None = None       # default: last for waterfall, mean for analytical
    migration_screen: bool | None = None    # default: off for waterfall, on for analytical
    region_cap: int = 5000
    node_limit: int = 200_000

    def validate(self) -> list[str]:
        errs = []
        if self.kind not in MODEL_KINDS:
            errs.append(f"model.kind: must be one of {', '.join(MODEL_KINDS)}, got {self.kind!r}")
            return errs
        if self.kind in ("2T", "NT-WF"):
            if (self.hotness_threshold is None) == (self.coverage is None):
                errs.append("model: waterfall models need exactly one of threshold and coverage")
            if self.hotness_threshold is not None and self.hotness_threshold < 0:
                errs.append("model.threshold: must be >= 0")
            if self.coverage is not None and not 0 <= self.coverage <= 1:
                errs.append("model.coverage: must be in [0, 1]")
        if self.kind == "NT-AM":
            if self.tco_knob is None or not 0 <= self.tco_knob <= 1:
                errs.append(f"model.tco_knob: must be in [0, 1], got {self.tco_knob}")
        if self.hotness_source not in (None, "mean", "last"):
            errs.append(f"model.hotness_source: must be mean or last, got {self.hotness_source!r}")
        for t, v in self.k.items():
            if v <= 0:
                errs.append(f"model.k.{t}: must be > 0")
        return errs

    @property
    def is_waterfall(self) -> bool:
        return self.kind in ("2T", "NT-WF")

    def waterfall_config(self, threshold: float) -> WaterfallConfig:
        return WaterfallConfig(hotness_threshold=threshold, hotness_source=self.hotness_source or "last",
                               migration_screen=bool(self.migration_screen))

    def analytical_config(self) -> AnalyticalConfig:
        screen = True if self.migration_screen is None else self.migration_screen
        return AnalyticalConfig(self.tco_knob, dict(self.k), self.hotness_source or "mean",
                                self.region_cap, self.node_limit, migration_screen=screen)


@dataclass
class SimParams:
    rehome_fraction: float = 0.5        # DRAM-resident share that sends a region home
    template_pages: int = 256           # distinct page contents drawn from the data profile
    bookkeeping_ns: int = BOOKKEEPING_NS
    dram: Media = DRAM


@dataclass
class WindowMetrics:
    window_index: int
    accesses: int
    realized_tco_usd: float
    tco_savings_pct: float
    predicted_tco_usd: float
    predicted_perf_ovh_ns: float
    realized_fault_ns: int
    slowdown_pct: float
    faults_per_tier: list[int]
    pages_per_tier: list[int]
    dram_pages: int
    migration_tax_ns: int
    migration_bytes: int
    p50_ns: int
    p99_ns: int
    approximate_plan: bool = False
    plan: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def percentile(counts: Counter, p: float) -> int:
    """Nearest-rank percentile over a value -> count histogram."""
    n = sum(counts.values())
    if n == 0:
        return 0
    rank = max(1, math.ceil(p / 100.0 * n))
    seen = 0
    for value in sorted(counts):
        seen += counts[value]
        if seen >= rank:
            return value
    return max(counts)


class SimState:
    """Everything that persists across windows."""

    def __init__(self, footprint_bytes: int, tiers: list[TierSpec], profile: DataProfile,
                 profiling: ProfilingConfig, params: SimParams | None = None,
                 calibration_ratios: dict[int, float] | None = None, seed: int = 0):
        self.params = params or SimParams()
        self.profiling = profiling
        self.specs = {t.id: t for t in sorted(tiers, key=lambda t: t.id)}
        self.n_tiers = len(self.specs)
        self.regions = make_regions(footprint_bytes, profiling.history_depth)
        self.npages = footprint_bytes // PAGE_SIZE
        self.page_tier = np.zeros(self.npages, dtype=np.int8)
        self.templates = generate_pages(profile, self.params.template_pages)
        rng = np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), CONTENT_STREAM]))
        self.page_template = rng.integers(0, len(self.templates), size=self.npages).tolist()
        memos: dict = {}
        self.tiers: dict[int, CompressedTier] = {}
        for tid, spec in self.specs.items():
            memo = memos.setdefault(spec.codec, MemoCodec(spec.codec))
            self.tiers[tid] = CompressedTier(spec, codec=memo)
        self.calibration_ratios = dict(calibration_ratios or {t: 1.0 for t in self.specs})
        self.latency_counts: Counter = Counter()
        self.measured = 0
        self.threshold: float | None = None

    def page(self, pid: int) -> bytes:
        return self.templates[self.page_template[pid]]

    def running_ratios(self) -> dict[int, float]:
        return {t: (tier.compression_ratio() if len(tier) else self.calibration_ratios[t])
                for t, tier in self.tiers.items()}

    def tco_model(self, ratios=None) -> TcoModel:
        return TcoModel.from_tiers(list(self.specs.values()), ratios or self.running_ratios(),
                                   self.npages, self.params.dram)

    def realized_tco(self) -> float:
        dram_pages = int(np.count_nonzero(self.page_tier == DRAM_PLACEMENT))
        total = dram_pages * self.params.dram.cost_per_page
        for t, tier in self.tiers.items():
            total += (tier.pool_bytes / PAGE_SIZE) * self.specs[t].media.cost_per_page
        return total

    def check_conservation(self):
        counts = np.bincount(self.page_tier, minlength=self.n_tiers + 1)
        for t, tier in self.tiers.items():
            if counts[t] != len(tier):
                raise SimulationError(f"tier {t}: page map says {counts[t]} pages, pool holds {len(tier)}")


def _replay(state: SimState, records: np.ndarray):
    """Serve every access; the first touch of a compressed page faults it
    back to DRAM. Returns (addrs, dram_mask, faults per tier, fault ns, latency histogram)."""
    addrs = records["virtual_addr"].astype(np.int64)
    if addrs.size and (addrs.min() < 0 or addrs.max() >= state.npages * PAGE_SIZE):
        bad = addrs[(addrs < 0) | (addrs >= state.npages * PAGE_SIZE)][0]
        raise SimulationError(f"trace address {int(bad):#x} outside the {state.npages * PAGE_SIZE} byte footprint")
    dram_lat = state.params.dram.read_latency_ns
    faults = {t: 0 for t in state.tiers}
    hist: Counter = Counter()
    dram_mask = np.ones(addrs.size, dtype=bool)
    fault_ns = 0
    for r in state.regions:
        r.window_faults = 0
    if addrs.size == 0:
        return addrs, dram_mask, faults, fault_ns, hist
    pages = addrs >> PAGE_SHIFT
    where = state.page_tier[pages]
    comp_idx = np.flatnonzero(where)
    if comp_idx.size:
        uniq, first = np.unique(pages[comp_idx], return_index=True)
        fault_acc = np.sort(comp_idx[first])
        dram_mask[fault_acc] = False
        fault_pages = pages[fault_acc].tolist()
        fault_tiers = where[fault_acc].tolist()
        regions = state.regions
        for pid, t in zip(fault_pages, fault_tiers):
            _, lat = state.tiers[t].load(pid)
            faults[t] += 1
            fault_ns += lat
            hist[dram_lat + lat] += 1
            regions[pid // PAGES_PER_REGION].window_faults += 1
        state.page_tier[pages[fault_acc]] = DRAM_PLACEMENT
    hist[dram_lat] += int(dram_mask.sum())
    return addrs, dram_mask, faults, fault_ns, hist


def _rehome(state: SimState) -> set[int]:
    """Regions whose pages are mostly back in DRAM return home."""
    dram = np.bincount(np.flatnonzero(state.page_tier == DRAM_PLACEMENT) // PAGES_PER_REGION,
                       minlength=len(state.regions))
    out = set()
    for r in state.regions:
        if r.placement != DRAM_PLACEMENT and dram[r.index] > state.params.rehome_fraction * r.npages:
            r.placement = DRAM_PLACEMENT
            out.add(r.index)
    return out


def _plan(state: SimState, model: ModelSpec, faulted: set[int]) -> PlacementPlan | None:
    if model.kind == "none":
        return None
    if model.is_waterfall:
        n = state.n_tiers
        if state.threshold is None:
            state.threshold = (model.hotness_threshold if model.hotness_threshold is not None else
                               threshold_for_coverage([r.hotness for r in state.regions], model.coverage))
        cfg = model.waterfall_config(state.threshold)
        hot = region_hotness(state.regions, cfg.hotness_source)
        plan = waterfall_step(state.regions, n, cfg, faulted, hot)
        lat = {t: s.access_latency_ns for t, s in state.specs.items()}
        plan.predicted_tco = compute_tco(plan.assignment, state.regions, None, state.tco_model())
        plan.predicted_perf_ovh = estimate_perf_ovh(plan.assignment, state.regions, lat, None, hot)
        return plan
    cfg = model.analytical_config()
    return analytical_place(state.regions, list(state.specs.values()), state.tco_model(), cfg)


def _execute(state: SimState, plan: PlacementPlan, screen: bool) -> tuple[int, int]:
    """Apply a plan region by region; returns (tax ns, bytes moved)."""
    tax = moved = 0
    pt = state.page_tier
    for r in state.regions:
        dst = plan.assignment[r.index]
        src = r.placement
        lo, hi = r.first_page, r.first_page + r.npages
        if dst == DRAM_PLACEMENT:
            # also clears compressed leftovers of a region that was sent home
            for t in np.unique(pt[lo:hi]).tolist():
                if t == DRAM_PLACEMENT:
                    continue
                tier = state.tiers[t]
                pids = (lo + np.flatnonzero(pt[lo:hi] == t)).tolist()
                for pid in pids:
                    tier.evict(pid)
                tax += len(pids) * tier.spec.access_latency_ns
                moved += len(pids) * PAGE_SIZE
                pt[pids] = DRAM_PLACEMENT
        elif src == DRAM_PLACEMENT:
            tier = state.tiers[dst]
            pids = (lo + np.flatnonzero(pt[lo:hi] == DRAM_PLACEMENT)).tolist()
            for pid in pids:
                moved += tier.store(pid, state.page(pid)).compressed_size
            tax += len(pids) * tier.spec.compress_latency_ns
            pt[pids] = dst
            for t in np.unique(pt[lo:hi]).tolist():
                if t != dst:
                    left = (lo + np.flatnonzero(pt[lo:hi] == t)).tolist()
                    receipt = migrate(state.tiers[t], tier, left)
                    tax += receipt.cost_ns
                    moved += receipt.bytes_moved
                    pt[left] = dst
        elif dst != src:
            if screen and state.specs[dst].access_latency_ns < state.specs[src].access_latency_ns:
                decision = migration_screen(r, src, dst, state.specs, mean_hotness(r),
                                            bookkeeping_ns=state.params.bookkeeping_ns)
                if not decision.approve:
                    continue
            pids = (lo + np.flatnonzero(pt[lo:hi] == src)).tolist()
            receipt = migrate(state.tiers[src], state.tiers[dst], pids)
            tax += receipt.cost_ns
            moved += receipt.bytes_moved
            pt[pids] = dst
        r.placement = dst
    return tax, moved


def run_window(state: SimState, records: np.ndarray, model: ModelSpec, window_index: int,
               warmup: bool = False) -> WindowMetrics | None:
    """Replay one window of records and move pages per the model.

    Warmup windows only replay accesses; nothing is sampled or decided and
    no metrics are produced.
    """
    addrs, dram_mask, faults, fault_ns, hist = _replay(state, records)
    if warmup:
        return None

    measured = state.measured
    state.measured += 1
    nr_regions = Counter(r.placement for r in state.regions if r.placement != DRAM_PLACEMENT)
    summary = TierFaultSummary(faults, {t: nr_regions.get(t, 0) for t in state.tiers})
    events = sample_accesses(addrs, state.profiling, window=measured, dram_mask=dram_mask)
    distribute_hotness(events, summary, state.regions, state.profiling)

    faulted = _rehome(state)
    plan = _plan(state, model, faulted)
    tax = moved = 0
    if plan is not None:
        screen = (model.migration_screen if model.migration_screen is not None
                  else model.kind == "NT-AM")
        tax, moved = _execute(state, plan, screen)
    state.check_conservation()

    lat = {t: s.access_latency_ns for t, s in state.specs.items()}
    expected_ns = sum(faults[t] * lat[t] for t in state.tiers)
    if expected_ns != fault_ns:
        raise SimulationError(f"fault time {fault_ns} != sum of faults x latency {expected_ns}")
    state.latency_counts.update(hist)

    tco_model = state.tco_model()
    realized = state.realized_tco()
    n = int(addrs.size)
    dram_pages = int(np.count_nonzero(state.page_tier == DRAM_PLACEMENT))
    tiers = sorted(state.tiers)
    return WindowMetrics(
        window_index=window_index,
        accesses=n,
        realized_tco_usd=realized,
        tco_savings_pct=100.0 * (1.0 - realized / tco_model.tco_max) if tco_model.tco_max else 0.0,
        predicted_tco_usd=plan.predicted_tco if plan else realized,
        predicted_perf_ovh_ns=plan.predicted_perf_ovh if plan else 0.0,
        realized_fault_ns=int(fault_ns),
        slowdown_pct=100.0 * fault_ns / (n * state.params.dram.read_latency_ns) if n else 0.0,
        faults_per_tier=[faults[t] for t in tiers],
        pages_per_tier=[len(state.tiers[t]) for t in tiers],
        dram_pages=dram_pages,
        migration_tax_ns=int(tax),
        migration_bytes=int(moved),
        p50_ns=percentile(hist, 50),
        p99_ns=percentile(hist, 99),
        approximate_plan=bool(plan.approximate) if plan else False,
        plan=plan.report(state.n_tiers) if plan else {},
    )
