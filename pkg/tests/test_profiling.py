import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ntiersim.profiling import (PAGE_SHIFT, REGION_SIZE, AccountingError, ProfilingConfig, Region, SampleBatch,
                                SampleEvent, TierFaultSummary, distribute_hotness, make_regions, mean_hotness,
                                sample_accesses)

from helpers import naive_distribute

CFG = ProfilingConfig()


def test_full_rate_counts_exact():
    rng = np.random.default_rng(0)
    addrs = rng.integers(0, 8 * REGION_SIZE, 5000)
    batch = sample_accesses(addrs, ProfilingConfig(sample_rate=1.0))
    expected = Counter((int(a) >> PAGE_SHIFT) << PAGE_SHIFT for a in addrs)
    assert dict(zip(batch.addrs.tolist(), batch.counts.tolist())) == expected


@pytest.mark.parametrize("seed", range(10))
def test_sampling_binomial(seed):
    addrs = np.full(10_000, 0x5000)
    batch = sample_accesses(addrs, ProfilingConfig(sample_rate=0.1, seed=seed))
    n, p = 10_000, 0.1
    sigma = math.sqrt(n * p * (1 - p))
    assert len(batch) == 1
    assert abs(int(batch.counts[0]) - n * p) <= 3 * sigma


def test_sampling_empty():
    assert len(sample_accesses([], CFG)) == 0
    assert sample_accesses(np.array([1, 2]), CFG, dram_mask=[False, False]).events() == []


def test_sampling_skips_faulting_accesses():
    addrs = np.array([0x1000] * 10 + [0x2000] * 10)
    mask = np.array([True] * 10 + [False] * 10)
    batch = sample_accesses(addrs, ProfilingConfig(sample_rate=1.0), dram_mask=mask)
    assert batch.events() == [SampleEvent(0x1000, 10)]


def test_sampling_deterministic():
    addrs = np.arange(0, 4 * REGION_SIZE, 64)
    a = sample_accesses(addrs, ProfilingConfig(seed=5), window=3)
    b = sample_accesses(addrs, ProfilingConfig(seed=5), window=3)
    c = sample_accesses(addrs, ProfilingConfig(seed=5), window=4)
    assert a.events() == b.events()
    assert a.events() != c.events()


def test_hotness_example_fault_share():
    regions = make_regions(4 * REGION_SIZE)
    regions[1].placement = 2
    regions[3].placement = 2
    summary = TierFaultSummary({2: 10}, {2: 2})
    distribute_hotness([SampleEvent(regions[1].start_addr + 4096, 5)], summary, regions, CFG)
    assert regions[1].hotness == 5 + 10 / 2 == 10
    assert regions[3].hotness == 5
    assert regions[0].hotness == 0


def test_hotness_dram_no_events_is_zero():
    regions = make_regions(2 * REGION_SIZE)
    distribute_hotness([], TierFaultSummary({1: 50}, {1: 1}), regions, CFG)
    assert [r.hotness for r in regions] == [0.0, 0.0]


def test_fault_weight_zero_gives_pure_counts():
    regions = make_regions(2 * REGION_SIZE)
    regions[0].placement = 1
    cfg = ProfilingConfig(fault_weight=0.0)
    distribute_hotness([SampleEvent(10, 3), SampleEvent(REGION_SIZE, 4)], TierFaultSummary({1: 99}, {1: 1}),
                       regions, cfg)
    assert [r.hotness for r in regions] == [3.0, 4.0]


def test_address_outside_regions_errors():
    regions = make_regions(2 * REGION_SIZE)
    with pytest.raises(AccountingError):
        distribute_hotness([SampleEvent(2 * REGION_SIZE, 1)], TierFaultSummary({}, {}), regions, CFG)


def test_region_ranges_half_open():
    regions = make_regions(3 * REGION_SIZE)
    distribute_hotness([SampleEvent(REGION_SIZE - 1, 1), SampleEvent(REGION_SIZE, 2)],
                       TierFaultSummary({}, {}), regions, CFG)
    assert [r.hotness for r in regions] == [1.0, 2.0, 0.0]
    assert not regions[0].contains(REGION_SIZE)
    assert regions[1].contains(REGION_SIZE)


def test_regions_tile_footprint():
    regions = make_regions(10 * REGION_SIZE)
    assert regions[0].start_addr == 0
    for a, b in zip(regions, regions[1:]):
        assert a.end_addr == b.start_addr
        assert a.end_addr - a.start_addr == REGION_SIZE
    assert regions[-1].end_addr == 10 * REGION_SIZE
    with pytest.raises(ValueError):
        make_regions(REGION_SIZE + 4096)


def test_fault_summary_needs_regions():
    with pytest.raises(ValueError):
        TierFaultSummary({1: 3}, {1: 0})
    with pytest.raises(ValueError):
        TierFaultSummary({1: -1}, {1: 1})


def test_exact_fault_attribution():
    regions = make_regions(2 * REGION_SIZE)
    for r in regions:
        r.placement = 1
    regions[0].window_faults = 6
    cfg = ProfilingConfig(exact_fault_attribution=True)
    distribute_hotness([], TierFaultSummary({1: 6}, {1: 2}), regions, cfg)
    assert [r.hotness for r in regions] == [6.0, 0.0]


@pytest.mark.parametrize("history,expected", [([10, 20, 30, 40], 25), ([7], 7), ([0, 0, 0, 0], 0)])
def test_mean_hotness(history, expected):
    r = make_regions(REGION_SIZE)[0]
    r.history.extend(history)
    assert mean_hotness(r) == expected


def test_mean_hotness_first_window():
    r = make_regions(REGION_SIZE)[0]
    assert r.first_window
    assert mean_hotness(r) == 0


def test_history_depth_bounded():
    regions = make_regions(REGION_SIZE, history_depth=4)
    for w in range(7):
        distribute_hotness([SampleEvent(0, w + 1)], TierFaultSummary({}, {}), regions, CFG)
    assert list(regions[0].history) == [4.0, 5.0, 6.0, 7.0]


def test_sample_event_count_positive():
    with pytest.raises(ValueError):
        SampleBatch([0], [0])


def test_config_validation():
    for bad in ({"sample_rate": 0}, {"sample_rate": 1.5}, {"fault_weight": -1}, {"history_depth": 0}):
        with pytest.raises(ValueError):
            ProfilingConfig(**bad)


# -- properties ---------------------------------------------------------------

N_REGIONS = 6
event_st = st.lists(st.tuples(st.integers(0, N_REGIONS * REGION_SIZE - 1), st.integers(1, 50)), max_size=30)
placement_st = st.lists(st.integers(0, 3), min_size=N_REGIONS, max_size=N_REGIONS)
fault_st = st.lists(st.integers(0, 200), min_size=3, max_size=3)


def _fixture(events, placements, faults):
    regions = make_regions(N_REGIONS * REGION_SIZE)
    for r, p in zip(regions, placements):
        r.placement = p
    nr = Counter(p for p in placements if p)
    fault_map = {t: (faults[t - 1] if nr[t] else 0) for t in (1, 2, 3)}
    return regions, TierFaultSummary(fault_map, {t: nr[t] for t in (1, 2, 3)}), fault_map, nr


@settings(max_examples=200, deadline=None)
@given(events=event_st, placements=placement_st, faults=fault_st, weight=st.sampled_from([0.0, 0.5, 1.0, 2.0]))
def test_matches_naive_reference(events, placements, faults, weight):
    regions, summary, fault_map, nr = _fixture(events, placements, faults)
    distribute_hotness([SampleEvent(a, c) for a, c in events], summary, regions, ProfilingConfig(fault_weight=weight))
    spans = [(r.start_addr, r.end_addr, r.placement) for r in regions]
    assert [r.hotness for r in regions] == naive_distribute(events, fault_map, nr, spans, weight)


@settings(max_examples=150, deadline=None)
@given(events=event_st, extra=event_st, placements=placement_st, faults=fault_st, more=fault_st)
def test_more_events_or_faults_never_cool(events, extra, placements, faults, more):
    regions, summary, *_ = _fixture(events, placements, faults)
    distribute_hotness([SampleEvent(a, c) for a, c in events], summary, regions, CFG)
    before = [r.hotness for r in regions]
    bigger = [f + m for f, m in zip(faults, more)]
    regions2, summary2, *_ = _fixture(events, placements, bigger)
    distribute_hotness([SampleEvent(a, c) for a, c in events + extra], summary2, regions2, CFG)
    assert all(b2 >= b1 for b1, b2 in zip(before, [r.hotness for r in regions2]))


@settings(max_examples=100, deadline=None)
@given(events=event_st, placements=placement_st)
def test_no_false_positives(events, placements):
    regions, _, _, nr = _fixture(events, placements, [0, 0, 0])
    distribute_hotness([SampleEvent(a, c) for a, c in events], TierFaultSummary({}, dict(nr)), regions,
                       ProfilingConfig(fault_weight=0.0))
    touched = {a // REGION_SIZE for a, _ in events}
    for r in regions:
        if r.index not in touched:
            assert r.hotness == 0.0
