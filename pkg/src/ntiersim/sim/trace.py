"""Synthetic access traces and the on-disk trace format.

A trace record is ``(timestamp_us, op, virtual_addr)`` with op ``R`` or
``W``. Windows are cut on logical time: window ``w`` holds the records with
``w * T <= timestamp_us < (w + 1) * T`` for a window length ``T``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from ..codecs import PAGE_SIZE, DataProfile
from ..profiling import PAGE_SHIFT, REGION_SIZE

TRACE_DTYPE = np.dtype([("timestamp_us", "<u8"), ("op", "S1"), ("virtual_addr", "<u8")])
CSV_HEADER = ["timestamp_us", "op", "virtual_addr"]
DISTRIBUTIONS = ("gaussian", "uniform", "hotset")
TRACE_STREAM = 0x7A


class TraceError(ValueError):
    pass


@dataclass(frozen=True)
class AccessDistribution:
    """Where accesses land, as fractions of the footprint.

    gaussian: page index ~ Normal(center, sigma), wrapped modulo the footprint.
    hotset: a hot_fraction prefix of the pages receives hot_prob of accesses.
    """

    kind: str = "gaussian"
    center: float = 0.5
    sigma: float = 0.15
    hot_fraction: float = 0.2
    hot_prob: float = 0.8

    def __post_init__(self):
        if self.kind not in DISTRIBUTIONS:
            raise ValueError(f"unknown distribution {self.kind!r}")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if not 0 < self.hot_fraction < 1 or not 0 <= self.hot_prob <= 1:
            raise ValueError("hot_fraction must be in (0, 1) and hot_prob in [0, 1]")


@dataclass(frozen=True)
class WorkloadSpec:
    footprint_bytes: int
    distribution: AccessDistribution = field(default_factory=AccessDistribution)
    ops_per_window: int = 500_000
    read_fraction: float = 0.9
    data_profile: DataProfile = field(default_factory=DataProfile)
    seed: int = 0
    window_seconds: float = 120.0

    def __post_init__(self):
        if self.footprint_bytes <= 0 or self.footprint_bytes % REGION_SIZE:
            raise ValueError(f"footprint must be a positive multiple of 2 MiB, got {self.footprint_bytes}")
        if self.ops_per_window < 0:
            raise ValueError("ops_per_window must be >= 0")
        if not 0 <= self.read_fraction <= 1:
            raise ValueError("read_fraction must be in [0, 1]")

    @property
    def pages(self) -> int:
        return self.footprint_bytes // PAGE_SIZE


def window_us(window_seconds: float) -> int:
    return int(round(window_seconds * 1_000_000))


def _page_indices(dist: AccessDistribution, pages: int, n: int, rng) -> np.ndarray:
    if dist.kind == "uniform":
        return rng.integers(0, pages, size=n)
    if dist.kind == "gaussian":
        x = rng.normal(dist.center * pages, dist.sigma * pages, size=n)
        return np.floor(x).astype(np.int64) % pages
    hot = max(1, int(dist.hot_fraction * pages))
    in_hot = rng.random(n) < dist.hot_prob
    idx = rng.integers(hot, pages, size=n) if hot < pages else rng.integers(0, pages, size=n)
    idx[in_hot] = rng.integers(0, hot, size=int(in_hot.sum()))
    return idx


def generate_window(spec: WorkloadSpec, window: int) -> np.ndarray:
    """Records of one window; depends only on (spec, window)."""
    n = spec.ops_per_window
    out = np.empty(n, dtype=TRACE_DTYPE)
    if n == 0:
        return out
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed & (2**64 - 1), TRACE_STREAM, window]))
    pages = _page_indices(spec.distribution, spec.pages, n, rng)
    offsets = rng.integers(0, PAGE_SIZE // 8, size=n) * 8
    writes = rng.random(n) >= spec.read_fraction
    span = window_us(spec.window_seconds)
    out["timestamp_us"] = window * span + (np.arange(n, dtype=np.uint64) * span) // n
    out["op"] = np.where(writes, b"W", b"R")
    out["virtual_addr"] = (pages.astype(np.uint64) << PAGE_SHIFT) + offsets.astype(np.uint64)
    return out


def generate_trace(spec: WorkloadSpec, windows: int) -> Iterator[np.ndarray]:
    for w in range(windows):
        yield generate_window(spec, w)


def split_windows(records: np.ndarray, window_seconds: float, windows: int | None = None) -> list[np.ndarray]:
    """Cut a time-ordered record array into logical-time windows."""
    ts = records["timestamp_us"]
    if ts.size and np.any(ts[1:] < ts[:-1]):
        raise TraceError("trace timestamps are not sorted")
    span = window_us(window_seconds)
    if windows is None:
        windows = int(ts[-1] // span) + 1 if ts.size else 0
    bounds = np.searchsorted(ts, np.arange(windows + 1, dtype=np.uint64) * np.uint64(span), side="left")
    return [records[bounds[w]:bounds[w + 1]] for w in range(windows)]


def write_trace(path, windows, fmt: str | None = None) -> int:
    """Write windows (an iterable of record arrays) as CSV or binary .npy."""
    path = Path(path)
    fmt = fmt or ("npy" if path.suffix == ".npy" else "csv")
    total = 0
    if fmt == "npy":
        parts = list(windows)
        data = np.concatenate(parts) if parts else np.empty(0, dtype=TRACE_DTYPE)
        with path.open("wb") as fh:
            np.save(fh, data, allow_pickle=False)
        return int(data.size)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for part in windows:
            ops = part["op"].astype("U1")
            w.writerows(zip(part["timestamp_us"].tolist(), ops.tolist(), part["virtual_addr"].tolist()))
            total += part.size
    return total


def read_trace(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise TraceError(f"trace file not found: {path}")
    if path.suffix == ".npy":
        data = np.load(path, allow_pickle=False)
        if data.dtype != TRACE_DTYPE:
            raise TraceError(f"{path}: unexpected record layout {data.dtype}")
        return data
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise TraceError(f"{path}: expected header {','.join(CSV_HEADER)}, got {header}")
        rows = list(reader)
    out = np.empty(len(rows), dtype=TRACE_DTYPE)
    for i, (ts, op, addr) in enumerate(rows):
        if op not in ("R", "W"):
            raise TraceError(f"{path}:{i + 2}: op must be R or W, got {op!r}")
        out[i] = (int(ts), op.encode(), int(addr))
    return out
