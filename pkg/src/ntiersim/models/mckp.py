"""Multiple-choice knapsack: pick one option per group, minimize total
value under a single cost budget.

Exact depth-first branch-and-bound using the LP relaxation (greedy over the
lower convex hull of every group) as the bound, with Lagrangian
reduced-cost fixing up front. Large instances, or searches that blow the
node limit, fall back to the greedy incumbent and are flagged approximate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

INF = math.inf
FEAS_RTOL = 1e-9
OBJ_RTOL = 1e-11


class Infeasible(ValueError):
    pass


@dataclass
class MckpResult:
    choice: list[int]
    value: float
    cost: float
    approximate: bool
    nodes: int = 0


def _canonical_value(values, choice):
    return math.fsum(values[i][j] for i, j in enumerate(choice))


def _pareto(vals, costs):
    """Non-dominated options sorted by cost (ties: lower value, lower index)."""
    opts = [(c, v, j) for j, (v, c) in enumerate(zip(vals, costs)) if c < INF and v < INF]
    opts.sort()
    out = []
    for c, v, j in opts:
        if out and v >= out[-1][1]:
            continue
        out.append((c, v, j))
    return out


def _hull_steps(pareto):
    """Upgrade steps along the lower convex hull: (efficiency, dcost, gain, option)."""
    hull = [pareto[0]]
    for p in pareto[1:]:
        while len(hull) >= 2:
            (c1, v1, _), (c2, v2, _) = hull[-2], hull[-1]
            # drop hull[-1] if it lies on or above the segment hull[-2] -> p
            if (v1 - v2) * (p[0] - c1) <= (v1 - p[1]) * (c2 - c1):
                hull.pop()
            else:
                break
        hull.append(p)
    steps = []
    for a, b in zip(hull, hull[1:]):
        dc, gain = b[0] - a[0], a[1] - b[1]
        steps.append((gain / dc, dc, gain, b[2]))
    return steps


def solve_mckp(values, costs, budget, *, node_limit=200_000, exact_cap=5000,
               chain=None) -> MckpResult:
    """``values[i][j]`` and ``costs[i][j]`` for group i, option j (``inf`` =
    not allowed). Returns the minimum-value choice with cost <= budget.

    ``chain = (h, w)`` declares product structure: every group has the same
    cost row and ``values[i][j] == h[i] * w[j]`` with ``h[i] >= 0``. Then
    swapping options between a hotter and a colder group never hurts when
    the hotter one gets the smaller ``w``, so the search only visits
    assignments where ``w`` does not decrease as ``h`` falls.
    """
    n = len(values)
    limit = budget + FEAS_RTOL * max(1.0, abs(budget))
    if n == 0:
        if limit < 0:
            raise Infeasible("budget below zero")
        return MckpResult([], 0.0, 0.0, False)

    paretos = [_pareto(v, c) for v, c in zip(values, costs)]
    for i, p in enumerate(paretos):
        if not p:
            raise Infeasible(f"group {i} has no admissible option")
    min_cost = math.fsum(p[0][0] for p in paretos)
    if min_cost > limit:
        raise Infeasible(f"cheapest placement costs {min_cost:.6g}, budget {budget:.6g}")

    steps = [_hull_steps(p) for p in paretos]

    # LP relaxation over all groups -> multiplier and greedy incumbent
    flat = sorted(((-s[0], i, k) for i, st in enumerate(steps) for k, s in enumerate(st)))
    rem = limit - min_cost
    lam = 0.0
    taken = [0] * n
    base = [p[0][2] for p in paretos]
    choice = list(base)
    stalled = set()
    for neg_eff, i, k in flat:
        eff, dc, gain, opt = steps[i][k]
        if i in stalled:
            continue
        if taken[i] != k:
            continue
        if dc <= rem:
            rem -= dc
            taken[i] = k + 1
            choice[i] = opt
        else:
            if lam == 0.0:
                lam = eff
            stalled.add(i)
    incumbent = _fill(values, costs, choice, limit)
    best_value = _canonical_value(values, incumbent)
    result_approx = False

    if n > exact_cap:
        return MckpResult(incumbent, best_value, _cost(costs, incumbent), True)

    # Lagrangian bound L(lam) and reduced-cost fixing
    lagr = []
    for p in paretos:
        lagr.append(min(v + lam * c for c, v, _ in p))
    bound_all = math.fsum(lagr) - lam * limit
    tol = OBJ_RTOL * max(1.0, abs(best_value))
    cands = []
    for i, p in enumerate(paretos):
        keep = [(c, v, j) for c, v, j in p
                if bound_all + (v + lam * c - lagr[i]) <= best_value + tol]
        if not keep:
            keep = [(costs[i][incumbent[i]], values[i][incumbent[i]], incumbent[i])]
        keep.sort(key=lambda o: (o[1] + lam * o[0], o[2]))
        cands.append(keep)

    fixed = [i for i in range(n) if len(cands[i]) == 1]
    free = [i for i in range(n) if len(cands[i]) > 1]
    fixed_cost = math.fsum(cands[i][0][0] for i in fixed)
    fixed_value = math.fsum(cands[i][0][1] for i in fixed)
    cur = list(incumbent)
    for i in fixed:
        cur[i] = cands[i][0][2]

    # most spread-out groups first; identical groups end up adjacent so the
    # search can force non-decreasing choices among them (symmetry breaking)
    def key(i):
        vals = [o[1] for o in cands[i]]
        return (-(max(vals) - min(vals)), tuple(cands[i]), i)
    if chain is not None:
        hot, weight = chain
        free.sort(key=lambda i: (-hot[i], i))
        cand_w = [[weight[o[2]] for o in cands[i]] for i in free]
    else:
        free.sort(key=key)
        cand_w = None
    F = len(free)
    w_floor = [-INF] * (F + 1)
    same_prev = [cand_w is None and pos > 0 and cands[free[pos]] == cands[free[pos - 1]]
                 for pos in range(F)]
    picked = [0] * F
    fp = [_pareto([o[1] for o in cands[i]], [o[0] for o in cands[i]]) for i in free]
    fsteps = []
    for pos, p in enumerate(fp):
        for eff, dc, gain, _ in _hull_steps(p):
            fsteps.append((-eff, pos, dc, gain))
    fsteps.sort()
    suffix_cost = [0.0] * (F + 1)
    suffix_value = [0.0] * (F + 1)
    for pos in range(F - 1, -1, -1):
        suffix_cost[pos] = suffix_cost[pos + 1] + fp[pos][0][0]
        suffix_value[pos] = suffix_value[pos + 1] + fp[pos][0][1]

    def lp_bound(pos, budget_left):
        r = budget_left - suffix_cost[pos]
        if r < -FEAS_RTOL * max(1.0, abs(limit)):
            return INF
        val = suffix_value[pos]
        for neg_eff, p, dc, gain in fsteps:
            if p < pos:
                continue
            if dc <= r:
                r -= dc
                val -= gain
            else:
                if r > 0:
                    val += neg_eff * r
                break
        return val

    best = list(incumbent)
    nodes = 0
    stack = [[0, 0, fixed_cost, fixed_value]]
    while stack:
        frame = stack[-1]
        pos, k, cb, vb = frame
        if pos == F:
            stack.pop()
            if vb <= best_value + tol:
                cand_value = _canonical_value(values, cur)
                if cand_value < best_value and _cost(costs, cur) <= limit:
                    best_value = cand_value
                    best = list(cur)
                    tol = OBJ_RTOL * max(1.0, abs(best_value))
            continue
        if k == 0:
            nodes += 1
            if nodes > node_limit:
                result_approx = True
                break
            if vb + lp_bound(pos, limit - cb) >= best_value - tol:
                stack.pop()
                continue
            if same_prev[pos]:
                k = frame[1] = picked[pos - 1]
        opts = cands[free[pos]]
        if k >= len(opts):
            stack.pop()
            continue
        frame[1] = k + 1
        c, v, j = opts[k]
        if cb + c + suffix_cost[pos + 1] > limit:
            continue
        if cand_w is not None:
            wk = cand_w[pos][k]
            if wk < w_floor[pos]:
                continue
            w_floor[pos + 1] = wk
        cur[free[pos]] = j
        picked[pos] = k
        stack.append([pos + 1, 0, cb + c, vb + v])

    return MckpResult(best, best_value, _cost(costs, best), result_approx, nodes)


def _cost(costs, choice):
    return math.fsum(costs[i][j] for i, j in enumerate(choice))


def _fill(values, costs, choice, limit):
    """Spend leftover budget on single-group switches, biggest gain first."""
    choice = list(choice)
    spent = _cost(costs, choice)
    moves = []
    for i, row in enumerate(values):
        cv = row[choice[i]]
        for j, v in enumerate(row):
            if v < cv and costs[i][j] < INF:
                moves.append((v - cv, i, j))
    moves.sort()
    for _, i, j in moves:
        cur = choice[i]
        if values[i][j] >= values[i][cur]:
            continue
        c = spent - costs[i][cur] + costs[i][j]
        if c <= limit:
            spent = c
            choice[i] = j
    return choice
