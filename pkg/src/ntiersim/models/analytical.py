"""Analytical placement: minimize estimated fault overhead under a TCO budget."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from ..profiling import DRAM_PLACEMENT, Region, mean_hotness
from ..tiers import TierSpec
from .mckp import FEAS_RTOL, Infeasible, solve_mckp
from .tco import PlacementPlan, TcoModel, compute_tco, estimate_perf_ovh, tier_latencies


@dataclass
class AnalyticalConfig:
    tco_knob: float
    k: dict[int, float] = field(default_factory=dict)   # fault proportionality per tier
    hotness_source: str = "mean"                        # "mean" over history or "last"
    region_cap: int = 5000
    node_limit: int = 200_000
    allowed_tiers: tuple[int, ...] | None = None        # None = every tier
    migration_screen: bool = True

    def __post_init__(self):
        if not 0.0 <= self.tco_knob <= 1.0:
            raise ValueError(f"tco_knob must be in [0, 1], got {self.tco_knob}")
        for tier, ky in self.k.items():
            if ky <= 0:
                raise ValueError(f"k for tier {tier} must be > 0")
        if self.hotness_source not in ("mean", "last"):
            raise ValueError(f"hotness_source must be 'mean' or 'last', got {self.hotness_source!r}")


def region_hotness(regions: list[Region], source: str) -> dict[int, float]:
    if source == "last":
        return {r.index: r.hotness for r in regions}
    return {r.index: mean_hotness(r) for r in regions}


def analytical_place(regions: list[Region], tiers: list[TierSpec], tco_model: TcoModel,
                     config: AnalyticalConfig, hotness: Mapping[int, float] | None = None,
                     ratios: Mapping[int, float] | None = None) -> PlacementPlan:
    """Optimal region placement for the knob ``config.tco_knob``.

    Every region picks DRAM or one tier; the objective is the estimated
    fault overhead and the constraint is TCO <= tco_min + knob * mts.
    Among equally good plans, leftover budget goes to lower tier ids
    (DRAM first) and lower region ids.
    """
    if hotness is None:
        hotness = region_hotness(regions, config.hotness_source)
    if ratios is not None:
        tco_model = TcoModel(tco_model.usd_dram_per_page, tco_model.usd_per_page,
                             dict(ratios), tco_model.total_pages)
    lat = tier_latencies(tiers)
    ids = sorted(lat)
    allowed = set(ids if config.allowed_tiers is None else config.allowed_tiers)
    options = [DRAM_PLACEMENT] + ids
    unit_cost = [tco_model.page_cost(p) for p in options]

    weight = [0.0] + [config.k.get(t, 1.0) * lat[t] for t in ids]
    values, costs = [], []
    for r in regions:
        h = hotness[r.index]
        row_v, row_c = [0.0], [r.npages * unit_cost[0]]
        for t, w, uc in zip(ids, weight[1:], unit_cost[1:]):
            if t in allowed:
                row_v.append(h * w)
                row_c.append(r.npages * uc)
            else:
                row_v.append(math.inf)
                row_c.append(math.inf)
        values.append(row_v)
        costs.append(row_c)
    # equal-sized regions share one cost row: the product-form shortcut applies
    chain = None
    if len({r.npages for r in regions}) == 1:
        chain = ([hotness[r.index] for r in regions], weight)

    budget = tco_model.budget(config.tco_knob)
    try:
        res = solve_mckp(values, costs, budget, node_limit=config.node_limit,
                         exact_cap=config.region_cap, chain=chain)
    except Infeasible as exc:
        raise Infeasible(f"no placement fits the TCO budget: {exc}") from None
    choice = _spend_slack(values, costs, res.choice, budget)

    assignment = {r.index: options[j] for r, j in zip(regions, choice)}
    return PlacementPlan(
        assignment=assignment,
        predicted_tco=compute_tco(assignment, regions, None, tco_model),
        predicted_perf_ovh=estimate_perf_ovh(assignment, regions, lat, config.k, hotness),
        approximate=res.approximate,
        model=f"analytical(tco_knob={config.tco_knob})",
        notes={"budget": budget, "nodes": res.nodes},
    )


def _spend_slack(values, costs, choice, budget):
    """Move regions to lower-index options of identical value while the
    budget allows, region by region in index order."""
    limit = budget + FEAS_RTOL * max(1.0, abs(budget))
    choice = list(choice)
    spent = math.fsum(costs[i][j] for i, j in enumerate(choice))
    for i, row in enumerate(values):
        cur = choice[i]
        for j in range(cur):
            if row[j] != row[cur] or costs[i][j] == math.inf:
                continue
            new_spent = spent - costs[i][cur] + costs[i][j]
            if new_spent <= limit:
                choice[i] = j
                spent = new_spent
                break
    return choice
