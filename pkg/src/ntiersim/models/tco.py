"""Memory TCO and estimated performance overhead of a placement."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from ..profiling import DRAM_PLACEMENT, Region
from ..tiers import DRAM, Media, TierSpec


class ConfigError(ValueError):
    pass


@dataclass
class PlacementPlan:
    assignment: dict[int, int]          # region index -> 0 (DRAM) or tier id
    predicted_tco: float = 0.0
    predicted_perf_ovh: float = 0.0
    approximate: bool = False
    model: str = ""
    notes: dict = field(default_factory=dict)

    def histogram(self, n_tiers: int) -> dict[str, int]:
        hist = {"DRAM": 0}
        hist.update({f"T{t}": 0 for t in range(1, n_tiers + 1)})
        for p in self.assignment.values():
            hist["DRAM" if p == DRAM_PLACEMENT else f"T{p}"] += 1
        return hist

    def report(self, n_tiers: int) -> dict:
        return {
            "model": self.model,
            "regions": self.histogram(n_tiers),
            "predicted_tco": self.predicted_tco,
            "predicted_perf_ovh": self.predicted_perf_ovh,
            "approximate": self.approximate,
        }


@dataclass
class TcoModel:
    """Per-page prices and the TCO envelope for a footprint.

    ``ratios`` holds the compressibility estimate C_Ty of every tier;
    ``usd_per_page`` is the media price of one 4 KB pool page.
    """

    usd_dram_per_page: float
    usd_per_page: dict[int, float]
    ratios: dict[int, float]
    total_pages: int

    @classmethod
    def from_tiers(cls, tiers: list[TierSpec], ratios: Mapping[int, float], total_pages: int,
                   dram: Media = DRAM) -> "TcoModel":
        return cls(dram.cost_per_page, {t.id: t.media.cost_per_page for t in tiers},
                   dict(ratios), total_pages)

    @property
    def last_tier(self) -> int:
        return max(self.usd_per_page)

    def page_cost(self, placement: int, ratios: Mapping[int, float] | None = None) -> float:
        if placement == DRAM_PLACEMENT:
            return self.usd_dram_per_page
        c = (ratios or self.ratios)[placement]
        if c <= 0:
            raise ConfigError(f"tier {placement}: compression ratio must be > 0, got {c}")
        return (1.0 / c) * self.usd_per_page[placement]

    @property
    def tco_max(self) -> float:
        return self.total_pages * self.usd_dram_per_page

    @property
    def tco_min(self) -> float:
        return self.total_pages * self.page_cost(self.last_tier)

    @property
    def mts(self) -> float:
        return self.tco_max - self.tco_min

    def budget(self, tco_knob: float) -> float:
        return self.tco_min + tco_knob * self.mts


def compute_tco(assignment: Mapping[int, int], regions: list[Region],
                ratios: Mapping[int, float] | None, tco_model: TcoModel) -> float:
    """DRAM pages at DRAM price plus, per tier, pages / C_Ty at the tier's media price."""
    ratios = tco_model.ratios if ratios is None else ratios
    pages: dict[int, int] = {}
    for r in regions:
        p = assignment[r.index]
        pages[p] = pages.get(p, 0) + r.npages
    total = pages.get(DRAM_PLACEMENT, 0) * tco_model.usd_dram_per_page
    for tier in sorted(pages):
        if tier == DRAM_PLACEMENT:
            continue
        c = ratios[tier]
        if c <= 0:
            raise ConfigError(f"tier {tier}: compression ratio must be > 0, got {c}")
        total += pages[tier] * (1.0 / c) * tco_model.usd_per_page[tier]
    return total


def estimate_perf_ovh(assignment: Mapping[int, int], regions: list[Region],
                      latencies: Mapping[int, float], k: Mapping[int, float] | None = None,
                      hotness: Mapping[int, float] | None = None) -> float:
    """Sum over tiers of k_y * (hotness placed in y) * Lat_y; DRAM adds nothing."""
    hot_sum: dict[int, float] = {}
    for r in regions:
        p = assignment[r.index]
        if p == DRAM_PLACEMENT:
            continue
        h = r.hotness if hotness is None else hotness[r.index]
        hot_sum[p] = hot_sum.get(p, 0.0) + h
    total = 0.0
    for tier in sorted(hot_sum):
        ky = 1.0 if k is None else k.get(tier, 1.0)
        total += ky * hot_sum[tier] * latencies[tier]
    return total


def tier_latencies(tiers: list[TierSpec]) -> dict[int, int]:
    missing = [t.name for t in tiers if t.access_latency_ns is None]
    if missing:
        raise ConfigError(f"uncalibrated tiers: {', '.join(missing)}")
    return {t.id: t.access_latency_ns for t in tiers}
