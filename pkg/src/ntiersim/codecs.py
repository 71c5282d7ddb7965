"""Page codecs and synthetic page content.

Three codecs span the latency/ratio spectrum used by the compressed tiers:
lz4 (fast, low ratio), lzo (LZO1X via lzokay, middle) and raw deflate
(slow, best ratio).
"""
from __future__ import annotations

import functools
import zlib
from dataclasses import dataclass

import lz4.block
import numpy as np
from lzallright import LZOCompressor

PAGE_SIZE = 4096

CODEC_NAMES = ("lz4", "lzo", "deflate")
DEFAULT_LEVELS = {"lz4": 1, "lzo": 1, "deflate": 6}
LEVEL_RANGES = {"lz4": (1, 64), "lzo": (1, 1), "deflate": (1, 9)}

# Short aliases used in tier names (ZS-L4-DR etc.)
CODEC_TAGS = {"lz4": "L4", "lzo": "LO", "deflate": "DE"}

_lzo = LZOCompressor()


@dataclass(frozen=True)
class Codec:
    """A lossless codec with an effort level.

    ``level`` is the lz4 acceleration factor, the zlib level for deflate,
    and is fixed at 1 for lzo (lzokay has a single mode).
    """

    name: str
    level: int = 0

    def __post_init__(self):
        if self.name not in CODEC_NAMES:
            raise ValueError(f"unknown codec {self.name!r}")
        if self.level == 0:
            object.__setattr__(self, "level", DEFAULT_LEVELS[self.name])
        lo, hi = LEVEL_RANGES[self.name]
        if not lo <= self.level <= hi:
            raise ValueError(f"{self.name} level must be in [{lo}, {hi}], got {self.level}")

    @property
    def tag(self) -> str:
        return CODEC_TAGS[self.name]

    def compress(self, data: bytes) -> bytes:
        if self.name == "lz4":
            return lz4.block.compress(data, mode="fast", acceleration=self.level)
        if self.name == "lzo":
            # lzokay cannot round-trip its own encoding of b""
            return _lzo.compress(data) if data else b""
        c = zlib.compressobj(self.level, zlib.DEFLATED, -15)
        return c.compress(data) + c.flush()

    def decompress(self, blob: bytes) -> bytes:
        if self.name == "lz4":
            return lz4.block.decompress(blob)
        if self.name == "lzo":
            return LZOCompressor.decompress(blob, PAGE_SIZE) if blob else b""
        return zlib.decompress(blob, -15)


def compress_page(codec: Codec, page: bytes) -> bytes:
    if len(page) != PAGE_SIZE:
        raise ValueError(f"page must be {PAGE_SIZE} bytes, got {len(page)}")
    return codec.compress(page)


def decompress_page(codec: Codec, blob: bytes) -> bytes:
    return codec.decompress(blob)


class MemoCodec:
    """Memoizing wrapper around a :class:`Codec`.

    Page content in the simulator is immutable and drawn from a small pool,
    so compressing the same bytes object twice is wasted work. Results are
    identical to the wrapped codec.
    """

    def __init__(self, codec: Codec):
        self.codec = codec
        self.name = codec.name
        self.level = codec.level
        self._comp: dict[bytes, bytes] = {}
        self._decomp: dict[bytes, bytes] = {}

    def compress(self, data: bytes) -> bytes:
        blob = self._comp.get(data)
        if blob is None:
            blob = self.codec.compress(data)
            self._comp[data] = blob
            self._decomp[blob] = data
        return blob

    def decompress(self, blob: bytes) -> bytes:
        data = self._decomp.get(blob)
        if data is None:
            data = self.codec.decompress(blob)
        return data


# -- synthetic data ---------------------------------------------------------

DATA_KINDS = ("zeros", "text-like", "random", "mixed")
_KIND_CODE = {k: i for i, k in enumerate(DATA_KINDS)}
_SEED_MASK = (1 << 64) - 1

# mixed profile: fraction of zero pages and incompressible pages
MIXED_ZERO_FRACTION = 0.10
MIXED_RANDOM_FRACTION = 0.10

_VOCAB_SIZE = 1500
_TOKENS_PER_PAGE = 900
_LETTERS = np.frombuffer(b"etaoinshrdlucmfwypvbgkqjxz", dtype=np.uint8)
_LETTER_P = np.array([12.7, 9.1, 8.2, 7.5, 7.0, 6.7, 6.3, 6.1, 6.0, 4.3, 4.0, 2.8,
                      2.8, 2.4, 2.2, 2.4, 2.0, 2.0, 1.0, 1.5, 2.0, 0.8, 0.1, 0.2,
                      0.2, 0.1])
_LETTER_P = _LETTER_P / _LETTER_P.sum()
_PUNCT = [b" ", b" ", b" ", b" ", b" ", b" ", b", ", b". ", b"\n"]


@dataclass(frozen=True)
class DataProfile:
    kind: str = "text-like"
    target_ratio: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DATA_KINDS:
            raise ValueError(f"unknown data kind {self.kind!r}")
        if not self.target_ratio >= 1.0:
            raise ValueError(f"target_ratio must be >= 1, got {self.target_ratio}")


def _page_rng(profile: DataProfile, index: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence([profile.seed & _SEED_MASK, _KIND_CODE[profile.kind], stream, index])
    return np.random.default_rng(ss)


@functools.lru_cache(maxsize=32)
def _vocabulary(seed: int) -> tuple[list[bytes], np.ndarray, np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence([seed & _SEED_MASK, 0xC0DE]))
    lengths = rng.integers(2, 11, size=_VOCAB_SIZE)
    words = [bytes(rng.choice(_LETTERS, size=n, p=_LETTER_P)) for n in lengths]
    weights = 1.0 / np.arange(1, _VOCAB_SIZE + 1) ** 1.05
    # first-order chain: every word has a short list of favoured successors
    successors = rng.integers(0, _VOCAB_SIZE, size=(_VOCAB_SIZE, 4))
    return words, weights / weights.sum(), successors


def _text_page(seed: int, knob: float, rng: np.random.Generator) -> bytes:
    """One page of word-chain text.

    ``knob`` moves compressibility monotonically: in [-1, 0) the vocabulary
    shrinks, in [0, 1] words are replaced by novel letter strings, in (1, 2]
    a growing fraction of 16-byte chunks is overwritten with random bytes.
    """
    words, weights, successors = _vocabulary(seed)
    if knob < 0:
        k = max(2, int(round(_VOCAB_SIZE ** (1.0 + knob))))
        w = weights[:k] / weights[:k].sum()
    else:
        k, w = _VOCAB_SIZE, weights
    n = _TOKENS_PER_PAGE
    draws = rng.choice(k, size=n, p=w)
    follow = rng.random(n) < 0.5
    pick = rng.integers(0, 4, size=n)
    punct = rng.integers(0, len(_PUNCT), size=n)
    novel = rng.random(n) < min(max(knob, 0.0), 1.0)
    idx = draws.tolist()
    for i in range(1, n):
        if follow[i]:
            nxt = int(successors[idx[i - 1], pick[i]])
            if nxt < k:
                idx[i] = nxt
    letters = bytes(rng.choice(_LETTERS, size=10 * n, p=_LETTER_P))
    parts = []
    for i in range(n):
        word = words[idx[i]]
        if novel[i]:
            word = letters[10 * i:10 * i + len(word)]
        parts.append(word)
        parts.append(_PUNCT[punct[i]])
    buf = b"".join(parts)
    while len(buf) < PAGE_SIZE:
        buf += buf
    page = np.frombuffer(buf[:PAGE_SIZE], dtype=np.uint8).copy()
    if knob > 1.0:
        chunks = page.reshape(-1, 16)
        hit = rng.random(len(chunks)) < min(knob - 1.0, 1.0)
        chunks[hit] = rng.integers(0, 256, size=(int(hit.sum()), 16), dtype=np.uint8)
    return page.tobytes()


def _make_page(profile: DataProfile, knob: float, index: int, stream: int = 0) -> bytes:
    rng = _page_rng(profile, index, stream)
    kind = profile.kind
    if kind == "mixed":
        u = rng.random()
        if u < MIXED_ZERO_FRACTION:
            kind = "zeros"
        elif u < MIXED_ZERO_FRACTION + MIXED_RANDOM_FRACTION:
            kind = "random"
        else:
            kind = "text-like"
    if kind == "zeros":
        return bytes(PAGE_SIZE)
    if kind == "random":
        return rng.bytes(PAGE_SIZE)
    return _text_page(profile.seed, knob, rng)


def deflate_ratio(pages) -> float:
    """Aggregate ratio: total original bytes over total deflate output."""
    codec = Codec("deflate")
    total = sum(len(codec.compress(p)) for p in pages)
    return sum(len(p) for p in pages) / total if total else 1.0


_TUNE_PAGES = 12
_TUNE_STEPS = 14


@functools.lru_cache(maxsize=128)
def _tuned_knob(kind: str, target_ratio: float, seed: int) -> float:
    # bisection on a private sample stream; ratio falls as the knob rises
    probe = DataProfile(kind, target_ratio, seed)

    def ratio(knob):
        return deflate_ratio([_make_page(probe, knob, i, stream=1) for i in range(_TUNE_PAGES)])

    lo, hi = -1.0, 2.0
    if ratio(lo) <= target_ratio:
        return lo
    if ratio(hi) >= target_ratio:
        return hi
    for _ in range(_TUNE_STEPS):
        mid = 0.5 * (lo + hi)
        if ratio(mid) > target_ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate_pages(profile: DataProfile, count: int, start: int = 0) -> list[bytes]:
    """Deterministic pages for ``profile``; page ``i`` depends only on
    (profile, i), so ``generate_pages(p, n)[:k] == generate_pages(p, k)``."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if profile.kind in ("zeros", "random"):
        knob = 0.0
    else:
        knob = _tuned_knob(profile.kind, float(profile.target_ratio), profile.seed)
    return [_make_page(profile, knob, i) for i in range(start, start + count)]
