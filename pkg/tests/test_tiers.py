import pytest
from hypothesis import given, settings, strategies as st

from ntiersim.codecs import PAGE_SIZE, Codec, DataProfile, compress_page, generate_pages
from ntiersim.tiers import (DRAM, OPTANE, BuddyPool, CompressedTier, DuplicatePage, PageNotFound, TierSpec,
                            ZsmallocPool, default_tiers, footprint, migrate, tier_stats, validate_tier_order)

from helpers import SizedCodec, sized_tier


def test_zbud_pairs_two_1800_byte_objects():
    t = sized_tier("zbud")
    t.store(1, SizedCodec.page(1, 1800))
    before = t.pool_bytes
    t.store(2, SizedCodec.page(2, 1800))
    assert before == 4096
    assert t.pool_bytes == 4096


def test_zbud_3000_byte_object_unpaired():
    t = sized_tier("zbud")
    t.store(1, SizedCodec.page(1, 3000))
    assert t.pool_bytes == 4096
    t.store(2, SizedCodec.page(2, 1800))
    assert t.pool_bytes == 8192


def test_zsmalloc_rounds_to_class():
    t = sized_tier("zsmalloc")
    t.store(1, SizedCodec.page(1, 1000))
    assert t.pool_bytes == 1024


def test_footprint_classes():
    assert footprint(1) == 64
    assert footprint(64) == 64
    assert footprint(65) == 128
    assert footprint(4032) == 4032
    assert footprint(4033) == 4096


def test_raw_store_when_incompressible():
    t = sized_tier("zsmalloc")
    t.store(1, SizedCodec.page(1, 4050))
    assert t.pool_bytes == PAGE_SIZE
    assert t.objects[1][1] is True
    page, _ = t.load(1)
    assert page == SizedCodec.page(1, 4050)


def test_store_load_round_trip_and_fault_count():
    spec = TierSpec(1, Codec("lz4"), "zbud", DRAM).calibrated(3880, 14000)
    t = CompressedTier(spec)
    page = generate_pages(DataProfile(), 1)[0]
    t.store(7, page)
    got, lat = t.load(7)
    assert got == page
    assert lat == 3880
    assert t.faults == 1


def test_load_twice_errors():
    t = sized_tier("zbud")
    t.store(1, SizedCodec.page(1, 100))
    t.load(1)
    with pytest.raises(PageNotFound):
        t.load(1)
    with pytest.raises(KeyError):
        t.load(1)


def test_duplicate_store_errors():
    t = sized_tier("zbud")
    t.store(1, SizedCodec.page(1, 100))
    with pytest.raises(DuplicatePage):
        t.store(1, SizedCodec.page(1, 100))


def test_zbud_buddies_load_restores_pool():
    t = sized_tier("zbud")
    t.store(0, SizedCodec.page(0, 500))
    prior = t.pool_bytes
    t.store(1, SizedCodec.page(1, 1800))
    t.store(2, SizedCodec.page(2, 1800))
    t.load(1)
    t.load(2)
    assert t.pool_bytes == prior


def test_migrate_same_codec_skips_recompression():
    src, dst = sized_tier("zbud", 1), sized_tier("zbud", 2, media=OPTANE)
    for pid in range(10):
        src.store(pid, SizedCodec.page(pid, 1200))
    receipt = migrate(src, dst, range(10))
    assert receipt.relocations == 10
    assert receipt.recompressed == 0
    assert receipt.cost_ns == 10 * src.spec.access_latency_ns
    assert len(src) == 0 and len(dst) == 10
    assert src.faults == 0 and dst.faults == 0


def test_migrate_nothing_is_free():
    src, dst = sized_tier("zbud", 1), sized_tier("zsmalloc", 2)
    assert tuple(migrate(src, dst, [])) == (0, 0, 0, 0)


def test_migrate_lz4_to_deflate_recompresses():
    tiers = [s.calibrated(1000 * s.id, 100) for s in default_tiers()]
    t1, t5 = CompressedTier(tiers[0]), CompressedTier(tiers[4])
    pages = generate_pages(DataProfile(), 20)
    for pid, p in enumerate(pages):
        t1.store(pid, p)
    receipt = migrate(t1, t5, range(20))
    assert receipt.recompressed == 20
    for pid, p in enumerate(pages):
        blob, raw = t5.objects[pid]
        assert not raw
        assert blob == compress_page(Codec("deflate"), p)


def test_migrate_missing_page_is_atomic():
    src, dst = sized_tier("zbud", 1), sized_tier("zbud", 2)
    src.store(1, SizedCodec.page(1, 100))
    with pytest.raises(PageNotFound):
        migrate(src, dst, [1, 2])
    assert 1 in src and len(dst) == 0


def test_tier_stats_empty():
    assert tuple(tier_stats(sized_tier("zsmalloc"))) == (0, 0, 0, 1.0)


def test_tier_stats_zero_pages_deflate():
    spec = TierSpec(1, Codec("deflate"), "zsmalloc", DRAM).calibrated(1, 1)
    t = CompressedTier(spec)
    for pid in range(100):
        t.store(pid, bytes(PAGE_SIZE))
    pages, pool, faults, ratio = tier_stats(t)
    assert pages == 100 and faults == 0
    assert ratio > 10


def test_tier_stats_fault_counter():
    t = sized_tier("zsmalloc")
    for pid in range(9):
        t.store(pid, SizedCodec.page(pid, 300))
    for pid in range(4):
        t.load(pid)
    assert tier_stats(t).faults == 4
    t.evict(5)
    assert tier_stats(t).faults == 4


def test_validate_tier_order():
    specs = [s.calibrated(1000 * s.id, 1) for s in default_tiers()]
    assert validate_tier_order(specs) == []
    swapped = [specs[1].__class__(**{**specs[1].__dict__, "id": 1}),
               specs[0].__class__(**{**specs[0].__dict__, "id": 2})] + specs[2:]
    assert any("tier 1" in e for e in validate_tier_order(swapped))
    assert any("dense" in e for e in validate_tier_order(specs[1:]))


def test_default_tier_names():
    assert [s.name for s in default_tiers()] == ["ZB-L4-DR", "ZB-L4-OP", "ZS-L4-OP", "ZS-LO-DR", "ZS-DE-OP"]


def test_media_prices():
    assert DRAM.cost_per_gb > OPTANE.cost_per_gb
    assert OPTANE.cost_per_gb == pytest.approx(DRAM.cost_per_gb / 3)


# -- allocator properties -----------------------------------------------------

sizes = st.integers(min_value=8, max_value=4200)
ops = st.lists(st.tuples(st.sampled_from(["store", "load", "migrate"]), sizes, st.integers(0, 10**6)),
               min_size=1, max_size=80)


def run_sequence(allocator, seq):
    """Apply a store/load/migrate sequence across two tiers of ``allocator``."""
    a, b = sized_tier(allocator, 1), sized_tier(allocator, 2)
    next_id = 0
    for op, size, pick in seq:
        if op == "store":
            a.store(next_id, SizedCodec.page(next_id, size))
            next_id += 1
        else:
            held = sorted(a.objects)
            if held:
                pid = held[pick % len(held)]
                if op == "load":
                    a.load(pid)
                else:
                    migrate(a, b, [pid])
        yield a, b


@settings(max_examples=300, deadline=None)
@given(seq=ops, allocator=st.sampled_from(["zbud", "z3fold"]))
def test_buddy_packing_bound(seq, allocator):
    slots = 2 if allocator == "zbud" else 3
    for a, b in run_sequence(allocator, seq):
        for t in (a, b):
            assert t.stored_original_bytes <= slots * t.pool_bytes


@settings(max_examples=300, deadline=None)
@given(objs=st.lists(sizes, min_size=1, max_size=60))
def test_zsmalloc_never_worse_than_zbud(objs):
    zs, zb, z3 = ZsmallocPool(), BuddyPool(2), BuddyPool(3)
    for i, s in enumerate(objs):
        for p in (zs, zb, z3):
            p.alloc(i, s)
        assert zs.pool_bytes <= zb.pool_bytes
    for i in range(0, len(objs), 2):
        for p in (zs, zb, z3):
            p.free(i)
        assert zs.pool_bytes <= zb.pool_bytes


@settings(max_examples=200, deadline=None)
@given(seq=ops, allocator=st.sampled_from(["zbud", "z3fold", "zsmalloc"]))
def test_conservation_across_ops(seq, allocator):
    stored = 0
    for op, *_ in seq:
        stored += op == "store"
    final = None
    for final in run_sequence(allocator, seq):
        pass
    a, b = final
    assert len(a) + len(b) + a.faults == stored
    assert a.stored_original_bytes == len(a) * PAGE_SIZE
    assert b.stored_original_bytes == len(b) * PAGE_SIZE
