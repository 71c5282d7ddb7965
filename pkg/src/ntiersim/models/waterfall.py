"""Waterfall placement: cold DRAM regions drop into tier 1 and every
compressed region sinks one tier per window until it reaches tier N."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Collection, Mapping

from ..profiling import DRAM_PLACEMENT, Region
from .tco import PlacementPlan


@dataclass
class WaterfallConfig:
    hotness_threshold: float | None = None
    # fraction of regions to keep below the threshold; resolved per workload
    coverage: float | None = None
    hotness_source: str = "last"
    migration_screen: bool = False

    def __post_init__(self):
        if (self.hotness_threshold is None) == (self.coverage is None):
            raise ValueError("set exactly one of hotness_threshold and coverage")
        if self.hotness_threshold is not None and self.hotness_threshold < 0:
            raise ValueError("hotness_threshold must be >= 0")
        if self.coverage is not None and not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must be in [0, 1]")
        if self.hotness_source not in ("mean", "last"):
            raise ValueError(f"hotness_source must be 'mean' or 'last', got {self.hotness_source!r}")


def threshold_for_coverage(hotness: list[float], coverage: float) -> float:
    """Smallest threshold leaving at least ``coverage`` of the regions below it."""
    if not hotness:
        return 0.0
    values = sorted(hotness)
    want = int(round(coverage * len(values)))
    if want <= 0:
        return 0.0
    if want >= len(values):
        return values[-1] + 1.0
    lo, hi = values[want - 1], values[want]
    if hi > lo:
        return 0.5 * (lo + hi)
    # ties at the cut: include the whole tied block
    above = [v for v in values if v > lo]
    return 0.5 * (lo + above[0]) if above else lo + 1.0


def waterfall_step(regions: list[Region], n_tiers: int, config: WaterfallConfig,
                   faulted_regions: Collection[int] = (),
                   hotness: Mapping[int, float] | None = None) -> PlacementPlan:
    if config.hotness_threshold is None:
        raise ValueError("waterfall threshold not resolved")
    th = config.hotness_threshold
    faulted = set(faulted_regions)
    assignment = {}
    for r in regions:
        p = r.placement
        h = r.hotness if hotness is None else hotness[r.index]
        if r.index in faulted:
            new = DRAM_PLACEMENT
        elif p == DRAM_PLACEMENT:
            new = 1 if h < th else DRAM_PLACEMENT
        else:
            new = min(p + 1, n_tiers)
        assignment[r.index] = new
    return PlacementPlan(assignment, model=f"waterfall(threshold={th:g})")
