"""Region hotness: sampled access events plus per-tier fault augmentation."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .codecs import PAGE_SIZE

REGION_SIZE = 2 << 20
PAGES_PER_REGION = REGION_SIZE // PAGE_SIZE
PAGE_SHIFT = 12
DRAM_PLACEMENT = 0

SAMPLING_STREAM = 0x5A


class AccountingError(ValueError):
    """A sampled address does not belong to any tracked region."""


@dataclass
class ProfilingConfig:
    window_seconds: float = 120.0
    sample_rate: float = 0.12
    fault_weight: float = 1.0
    history_depth: int = 4
    seed: int = 0
    # per-region fault counters instead of spreading tier faults evenly
    exact_fault_attribution: bool = False

    def __post_init__(self):
        if not 0 < self.sample_rate <= 1:
            raise ValueError(f"sample_rate must be in (0, 1], got {self.sample_rate}")
        if self.fault_weight < 0:
            raise ValueError("fault_weight must be >= 0")
        if self.history_depth < 1:
            raise ValueError("history_depth must be >= 1")
        if self.window_seconds <= 0:
            raise ValueError("window_seconds must be > 0")


@dataclass
class Region:
    index: int
    start_addr: int
    end_addr: int          # exclusive
    hotness: float = 0.0
    history: deque = field(default_factory=lambda: deque(maxlen=4))
    placement: int = DRAM_PLACEMENT
    window_faults: int = 0  # only used with exact fault attribution

    @property
    def first_page(self) -> int:
        return self.start_addr >> PAGE_SHIFT

    @property
    def npages(self) -> int:
        return (self.end_addr - self.start_addr) >> PAGE_SHIFT

    @property
    def first_window(self) -> bool:
        return not self.history

    def contains(self, addr: int) -> bool:
        return self.start_addr <= addr < self.end_addr


def make_regions(footprint_bytes: int, history_depth: int = 4) -> list[Region]:
    if footprint_bytes % REGION_SIZE:
        raise ValueError(f"footprint must be a whole number of 2 MiB regions, got {footprint_bytes}")
    return [Region(i, i * REGION_SIZE, (i + 1) * REGION_SIZE, history=deque(maxlen=history_depth))
            for i in range(footprint_bytes // REGION_SIZE)]


class SampleEvent(NamedTuple):
    addr: int
    count: int


class SampleBatch:
    """Sampled events aggregated per 4 KB page, held as parallel arrays."""

    def __init__(self, addrs=(), counts=()):
        self.addrs = np.asarray(addrs, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        if self.addrs.shape != self.counts.shape:
            raise ValueError("addrs and counts differ in length")
        if self.counts.size and self.counts.min() < 1:
            raise ValueError("event counts must be >= 1")

    def __len__(self):
        return int(self.addrs.size)

    def __iter__(self):
        for a, c in zip(self.addrs.tolist(), self.counts.tolist()):
            yield SampleEvent(a, c)

    def events(self) -> list[SampleEvent]:
        return list(self)

    @classmethod
    def from_events(cls, events: Iterable[SampleEvent]) -> "SampleBatch":
        events = list(events)
        return cls([e.addr for e in events], [e.count for e in events])


def _as_batch(events) -> SampleBatch:
    return events if isinstance(events, SampleBatch) else SampleBatch.from_events(events)


def sampling_rng(config: ProfilingConfig, window: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([config.seed & (2**64 - 1), SAMPLING_STREAM, window]))


def sample_accesses(addrs, config: ProfilingConfig, *, window: int = 0, dram_mask=None) -> SampleBatch:
    """Keep each DRAM access with probability ``sample_rate``; count per page.

    ``dram_mask`` marks which accesses were served from DRAM; the rest were
    compressed-tier faults and are never sampled.
    """
    addrs = np.asarray(addrs, dtype=np.int64)
    if dram_mask is not None:
        addrs = addrs[np.asarray(dram_mask, dtype=bool)]
    if addrs.size == 0:
        return SampleBatch()
    if config.sample_rate < 1.0:
        keep = sampling_rng(config, window).random(addrs.size) < config.sample_rate
        addrs = addrs[keep]
    pages, counts = np.unique(addrs >> PAGE_SHIFT, return_counts=True)
    return SampleBatch(pages << PAGE_SHIFT, counts)


class TierFaultSummary:
    """Faults seen by each tier in a window and how many regions it held."""

    def __init__(self, faults: dict[int, int], nr_regions: dict[int, int]):
        for tier, f in faults.items():
            if f < 0:
                raise ValueError(f"tier {tier}: negative fault count")
            if f > 0 and nr_regions.get(tier, 0) < 1:
                raise ValueError(f"tier {tier} has {f} faults but no regions")
        self.faults = dict(faults)
        self.nr_regions = dict(nr_regions)

    def per_region(self, tier: int) -> float:
        f = self.faults.get(tier, 0)
        return f / self.nr_regions[tier] if f else 0.0

    def __repr__(self):
        return f"TierFaultSummary({self.faults}, {self.nr_regions})"


def _region_of(addrs: np.ndarray, regions: list[Region]) -> np.ndarray:
    order = sorted(range(len(regions)), key=lambda i: regions[i].start_addr)
    starts = np.array([regions[i].start_addr for i in order], dtype=np.int64)
    ends = np.array([regions[i].end_addr for i in order], dtype=np.int64)
    pos = np.searchsorted(starts, addrs, side="right") - 1
    bad = (pos < 0) | (addrs >= ends[np.clip(pos, 0, None)])
    if bad.any():
        raise AccountingError(f"sampled address {int(addrs[bad][0]):#x} lies outside every region")
    return np.asarray(order, dtype=np.int64)[pos]


def distribute_hotness(events, fault_summary: TierFaultSummary, regions: list[Region],
                       config: ProfilingConfig) -> list[Region]:
    """Per-window region hotness: sampled counts plus the fault term.

    A region placed in compressed tier ``t`` gets
    ``fault_weight * faults[t] / nr_regions[t]`` added on top of its sampled
    count (or its own fault count in exact mode). The new value is pushed
    onto the region's history.
    """
    batch = _as_batch(events)
    sampled = np.zeros(len(regions), dtype=np.float64)
    if len(batch):
        idx = _region_of(batch.addrs, regions)
        np.add.at(sampled, idx, batch.counts)
    for i, r in enumerate(regions):
        hot = float(sampled[i])
        if r.placement != DRAM_PLACEMENT:
            if config.exact_fault_attribution:
                hot += config.fault_weight * r.window_faults
            else:
                hot += config.fault_weight * fault_summary.per_region(r.placement)
        r.hotness = hot
        r.history.append(hot)
    return regions


def mean_hotness(region: Region) -> float:
    """Mean over the stored history; 0 before the first window (see
    ``Region.first_window``)."""
    if not region.history:
        return 0.0
    return sum(region.history) / len(region.history)
