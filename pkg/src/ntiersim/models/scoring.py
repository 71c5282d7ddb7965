"""Rank tiers by a weighted mix of compressibility, latency and cost."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, NamedTuple

WEIGHT_TOL = 1e-9


@dataclass(frozen=True)
class ScoringPolicy:
    alpha: float   # compressibility
    beta: float    # latency
    gamma: float   # cost

    def __post_init__(self):
        w = (self.alpha, self.beta, self.gamma)
        if any(x < 0 for x in w):
            raise ValueError(f"weights must be >= 0, got {w}")
        if abs(sum(w) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got {sum(w)!r}")


class TierRow(NamedTuple):
    ratio: float
    latency: float
    cost: float


class TierScore(NamedTuple):
    tier_id: object
    score: float
    ratio_sc: float
    latency_sc: float
    cost_sc: float


def minmax_scale(values: list[float]) -> list[float]:
    """(max - y) / (max - min): the largest value maps to 0, the smallest to 1.
    A constant column maps to 0.5."""
    hi, lo = max(values), min(values)
    if hi == lo:
        return [0.5] * len(values)
    span = hi - lo
    return [(hi - y) / span for y in values]


def score_tiers(rows: Mapping[object, TierRow], policy: ScoringPolicy) -> list[TierScore]:
    """Scores in descending order (ties: input order).

    Every column, ratio included, goes through the same inverted scaling:
    the column maximum scores 0 and the minimum scores 1.
    """
    if len(rows) < 2:
        raise ValueError("scoring needs at least two tiers")
    ids = list(rows)
    ratio = minmax_scale([float(rows[t].ratio) for t in ids])
    lat = minmax_scale([float(rows[t].latency) for t in ids])
    cost = minmax_scale([float(rows[t].cost) for t in ids])
    out = []
    for i, t in enumerate(ids):
        s = policy.alpha * ratio[i] + policy.beta * lat[i] + policy.gamma * cost[i]
        out.append(TierScore(t, s, ratio[i], lat[i], cost[i]))
    order = sorted(range(len(out)), key=lambda i: (-out[i].score, i))
    return [out[i] for i in order]
