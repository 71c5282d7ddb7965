"""Compressed memory tiers: pool allocators, backing media, per-tier state."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

from .codecs import PAGE_SIZE, Codec

GiB = 1 << 30
CHUNK = 64
# objects larger than this are kept uncompressed in a whole pool page
RAW_THRESHOLD = PAGE_SIZE - CHUNK

ALLOCATORS = ("zbud", "z3fold", "zsmalloc")
ALLOCATOR_TAGS = {"zbud": "ZB", "z3fold": "Z3", "zsmalloc": "ZS"}
# modeled object lookup/mapping cost on the access path
ALLOCATOR_OVERHEAD_NS = {"zbud": 50, "z3fold": 100, "zsmalloc": 300}


class TierError(Exception):
    pass


class DuplicatePage(TierError):
    pass


class PageNotFound(TierError, KeyError):
    pass


@dataclass(frozen=True)
class Media:
    name: str
    read_latency_ns: int
    cost_per_gb: float

    @property
    def tag(self) -> str:
        return "DR" if self.name == "DRAM" else "OP" if self.name == "Optane-like" else self.name[:2].upper()

    @property
    def cost_per_page(self) -> float:
        return self.cost_per_gb * PAGE_SIZE / GiB


DRAM = Media("DRAM", read_latency_ns=100, cost_per_gb=3.0)
OPTANE = Media("Optane-like", read_latency_ns=1000, cost_per_gb=1.0)
MEDIA = {m.name: m for m in (DRAM, OPTANE)}


@dataclass(frozen=True)
class TierSpec:
    """Static description of one compressed tier.

    ``access_latency_ns`` and ``compress_latency_ns`` come from a
    calibration table; they are ``None`` until calibrated.
    """

    id: int
    codec: Codec
    allocator: str
    media: Media
    access_latency_ns: int | None = None
    compress_latency_ns: int | None = None
    name: str = ""

    def __post_init__(self):
        if self.allocator not in ALLOCATORS:
            raise ValueError(f"unknown allocator {self.allocator!r}")
        if not self.name:
            object.__setattr__(self, "name", tier_name(self.allocator, self.codec, self.media))

    def calibrated(self, access_latency_ns: int, compress_latency_ns: int) -> "TierSpec":
        return replace(self, access_latency_ns=int(access_latency_ns),
                       compress_latency_ns=int(compress_latency_ns))


def tier_name(allocator: str, codec: Codec, media: Media) -> str:
    ctag = codec.tag
    if codec.level != Codec(codec.name).level:
        ctag += str(codec.level)
    return f"{ALLOCATOR_TAGS[allocator]}-{ctag}-{media.tag}"


def validate_tier_order(specs: list[TierSpec]) -> list[str]:
    """Problems with ids or latency ordering; empty list when valid."""
    errors = []
    ids = [s.id for s in specs]
    if sorted(ids) != list(range(1, len(specs) + 1)):
        errors.append(f"tier ids must be unique and dense 1..{len(specs)}, got {ids}")
    if any(s.access_latency_ns is None for s in specs):
        return errors
    by_id = sorted(specs, key=lambda s: s.id)
    lats = [s.access_latency_ns for s in by_id]
    if lats and lats[0] != min(lats):
        errors.append(f"tier 1 ({by_id[0].name}) must have the minimum access latency")
    if lats and lats[-1] != max(lats):
        errors.append(f"tier {len(lats)} ({by_id[-1].name}) must have the maximum access latency")
    return errors


def footprint(size: int) -> int:
    """Bytes an object of ``size`` occupies: 64-byte chunks, raw above the cutoff."""
    if size > RAW_THRESHOLD:
        return PAGE_SIZE
    return max(CHUNK, -(-size // CHUNK) * CHUNK)


class ZsmallocPool:
    """Dense size-class packing: pool bytes are the sum of class sizes."""

    def __init__(self):
        self.pool_bytes = 0
        self._fp: dict = {}

    def alloc(self, key, size: int) -> int:
        fp = footprint(size)
        self._fp[key] = fp
        self.pool_bytes += fp
        return fp

    def free(self, key) -> int:
        fp = self._fp.pop(key)
        self.pool_bytes -= fp
        return -fp


class BuddyPool:
    """zbud (two slots) / z3fold (three slots) pool page packing.

    A new object joins the open pool page with the largest free remainder
    if it fits there, otherwise it opens a new pool page. Open pages are
    bucketed by free 64-byte chunks.
    """

    NCHUNKS = PAGE_SIZE // CHUNK

    def __init__(self, slots: int):
        self.slots = slots
        self.pool_bytes = 0
        self._pages: dict[int, list[int]] = {}   # pool page -> [used chunks, objects]
        self._where: dict = {}                   # key -> (pool page, chunks)
        self._buckets: list[dict] = [dict() for _ in range(self.NCHUNKS + 1)]
        self._top = 0
        self._next = 0

    def _file(self, pid: int, page: list[int]):
        free = self.NCHUNKS - page[0]
        if page[1] < self.slots and free > 0:
            self._buckets[free][pid] = None
            if free > self._top:
                self._top = free

    def _unfile(self, pid: int, page: list[int]):
        free = self.NCHUNKS - page[0]
        if page[1] < self.slots and free > 0:
            del self._buckets[free][pid]

    def alloc(self, key, size: int) -> int:
        chunks = footprint(size) // CHUNK
        buckets = self._buckets
        while self._top > 0 and not buckets[self._top]:
            self._top -= 1
        if self._top >= chunks:
            bucket = buckets[self._top]
            pid = next(iter(bucket))
            del bucket[pid]
            page = self._pages[pid]
            page[0] += chunks
            page[1] += 1
            self._where[key] = (pid, chunks)
            self._file(pid, page)
            return 0
        pid = self._next
        self._next += 1
        page = self._pages[pid] = [chunks, 1]
        self._where[key] = (pid, chunks)
        self.pool_bytes += PAGE_SIZE
        self._file(pid, page)
        return PAGE_SIZE

    def free(self, key) -> int:
        pid, chunks = self._where.pop(key)
        page = self._pages[pid]
        self._unfile(pid, page)
        page[0] -= chunks
        page[1] -= 1
        if page[1] == 0:
            del self._pages[pid]
            self.pool_bytes -= PAGE_SIZE
            return -PAGE_SIZE
        self._file(pid, page)
        return 0

    @property
    def pool_pages(self) -> int:
        return len(self._pages)


def make_pool(allocator: str):
    if allocator == "zsmalloc":
        return ZsmallocPool()
    return BuddyPool(2 if allocator == "zbud" else 3)


class StoreReceipt(NamedTuple):
    compressed_size: int
    pool_delta: int


class MigrationReceipt(NamedTuple):
    relocations: int
    bytes_moved: int
    cost_ns: int
    recompressed: int


class TierStats(NamedTuple):
    pages: int
    pool_bytes: int
    faults: int
    ratio: float


@dataclass
class CompressedTier:
    """Runtime state of one compressed pool.

    ``objects`` maps page id to ``(blob, raw)``; raw objects hold the
    uncompressed page because the codec output did not fit a pool slot.
    ``codec`` may be any object with ``compress``/``decompress`` (the
    simulator passes a memoizing wrapper).
    """

    spec: TierSpec
    codec: object = None
    objects: dict = field(default_factory=dict)
    faults: int = 0
    stored_original_bytes: int = 0

    def __post_init__(self):
        if self.codec is None:
            self.codec = self.spec.codec
        self._pool = make_pool(self.spec.allocator)

    @property
    def pool_bytes(self) -> int:
        return self._pool.pool_bytes

    def __len__(self):
        return len(self.objects)

    def __contains__(self, page_id):
        return page_id in self.objects

    def compression_ratio(self) -> float:
        if not self.objects or not self.pool_bytes:
            return 1.0
        return self.stored_original_bytes / self.pool_bytes

    def _put(self, page_id, blob: bytes, raw: bool) -> StoreReceipt:
        size = PAGE_SIZE if raw else len(blob)
        delta = self._pool.alloc(page_id, size)
        self.objects[page_id] = (blob, raw)
        self.stored_original_bytes += PAGE_SIZE
        return StoreReceipt(size, delta)

    def store(self, page_id, page: bytes) -> StoreReceipt:
        if page_id in self.objects:
            raise DuplicatePage(f"page {page_id} already in tier {self.spec.id}")
        if len(page) != PAGE_SIZE:
            raise ValueError(f"page must be {PAGE_SIZE} bytes")
        blob = self.codec.compress(page)
        if len(blob) > RAW_THRESHOLD:
            return self._put(page_id, page, True)
        return self._put(page_id, blob, False)

    def _remove(self, page_id) -> tuple[bytes, bool]:
        try:
            entry = self.objects.pop(page_id)
        except KeyError:
            raise PageNotFound(f"page {page_id} not in tier {self.spec.id}") from None
        self._pool.free(page_id)
        self.stored_original_bytes -= PAGE_SIZE
        return entry

    def evict(self, page_id) -> bytes:
        """Remove a page without counting a fault (daemon-driven moves)."""
        blob, raw = self._remove(page_id)
        return blob if raw else self.codec.decompress(blob)

    def load(self, page_id) -> tuple[bytes, int]:
        """Fault a page back to DRAM: returns the page and the access latency."""
        page = self.evict(page_id)
        self.faults += 1
        return page, self.spec.access_latency_ns or 0


def same_codec(a: TierSpec, b: TierSpec) -> bool:
    return a.codec == b.codec


def migrate(src: CompressedTier, dst: CompressedTier, page_ids) -> MigrationReceipt:
    """Move pages between tiers; the whole batch fails if any id is missing."""
    page_ids = list(page_ids)
    missing = [p for p in page_ids if p not in src.objects]
    if missing:
        raise PageNotFound(f"{len(missing)} page(s) not in tier {src.spec.id}, e.g. {missing[0]}")
    dup = [p for p in page_ids if p in dst.objects]
    if dup:
        raise DuplicatePage(f"page {dup[0]} already in tier {dst.spec.id}")
    fast = same_codec(src.spec, dst.spec)
    per_page = (src.spec.access_latency_ns or 0) + (0 if fast else dst.spec.compress_latency_ns or 0)
    moved = 0
    recompressed = 0
    for pid in page_ids:
        blob, raw = src._remove(pid)
        if fast:
            receipt = dst._put(pid, blob, raw)
        else:
            receipt = dst.store(pid, blob if raw else src.codec.decompress(blob))
            recompressed += 1
        moved += receipt.compressed_size
    return MigrationReceipt(len(page_ids), moved, per_page * len(page_ids), recompressed)


def tier_stats(tier: CompressedTier) -> TierStats:
    return TierStats(len(tier.objects), tier.pool_bytes, tier.faults, tier.compression_ratio())


# Default five-tier set T1..T5 and the single tier used for the two-tier baseline.
def default_tiers() -> list[TierSpec]:
    rows = [("zbud", "lz4", DRAM), ("zbud", "lz4", OPTANE), ("zsmalloc", "lz4", OPTANE),
            ("zsmalloc", "lzo", DRAM), ("zsmalloc", "deflate", OPTANE)]
    return [TierSpec(i + 1, Codec(c), a, m) for i, (a, c, m) in enumerate(rows)]


def two_tier() -> list[TierSpec]:
    return [TierSpec(1, Codec("lzo"), "zsmalloc", DRAM)]


def characterization_tiers() -> list[TierSpec]:
    """The twelve characterized tiers, C1..C12."""
    specs = []
    for codec in ("lz4", "lzo", "deflate"):
        for alloc in ("zbud", "zsmalloc"):
            for media in (DRAM, OPTANE):
                specs.append(TierSpec(len(specs) + 1, Codec(codec), alloc, media))
    return specs
