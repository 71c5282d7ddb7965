"""Cost/benefit screen for moving a region between compressed tiers."""
from __future__ import annotations

from typing import Mapping, NamedTuple

from ..profiling import DRAM_PLACEMENT, Region
from ..tiers import TierSpec

# page-table and tier-field updates per migrated page
BOOKKEEPING_NS = 500


class ScreenDecision(NamedTuple):
    approve: bool
    cost_ns: float
    benefit_ns: float


def _lat(tiers, placement):
    return 0 if placement == DRAM_PLACEMENT else tiers[placement].access_latency_ns


def migration_screen(region: Region | int, src: int, dst: int, tiers: Mapping[int, TierSpec],
                     expected_faults: float, *, bookkeeping_ns: float = BOOKKEEPING_NS) -> ScreenDecision:
    """cost = pages * (decompress(src) + compress(dst) + bookkeeping);
    benefit = (Lat(src) - Lat(dst)) * expected_faults.

    Demotions out of DRAM are always approved. Other moves pass only when
    the benefit beats the cost.
    """
    if src == dst:
        raise ValueError("source and destination are the same placement")
    pages = region if isinstance(region, int) else region.npages
    decomp = _lat(tiers, src)
    comp = 0 if dst == DRAM_PLACEMENT else tiers[dst].compress_latency_ns
    cost = pages * (decomp + comp + bookkeeping_ns)
    benefit = (_lat(tiers, src) - _lat(tiers, dst)) * expected_faults
    if src == DRAM_PLACEMENT:
        return ScreenDecision(True, cost, benefit)
    return ScreenDecision(benefit > cost, cost, benefit)
