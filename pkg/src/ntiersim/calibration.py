"""Per-tier latency / compression-ratio calibration.

``characterize`` runs the real codecs over synthetic pages and adds the
modeled allocator and media costs. The resulting table is frozen to CSV so
that simulations do not depend on the machine they run on.
"""
from __future__ import annotations

import csv
from importlib import resources
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

from .codecs import DataProfile, generate_pages
from .tiers import ALLOCATOR_OVERHEAD_NS, RAW_THRESHOLD, CompressedTier, TierSpec

CSV_HEADER = ["tier_id", "decomp_ns", "ratio", "comp_ns"]
MIN_PAGES = 1000
TIMING_PASSES = 3


class MissingCalibration(KeyError):
    def __init__(self, tier_id):
        super().__init__(tier_id)
        self.tier_id = tier_id

    def __str__(self):
        return f"no calibration row for tier {self.tier_id}"


@dataclass(frozen=True)
class CalibrationRow:
    tier_id: str
    decomp_ns: int
    ratio: float
    comp_ns: int

    def __post_init__(self):
        if self.decomp_ns <= 0 or self.comp_ns <= 0 or self.ratio <= 0:
            raise ValueError(f"calibration values must be positive: {self}")


@dataclass
class CalibrationTable:
    rows: dict[str, CalibrationRow] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)

    def add(self, row: CalibrationRow):
        if row.tier_id in self.rows:
            raise ValueError(f"duplicate calibration row for {row.tier_id}")
        self.rows[row.tier_id] = row

    def __getitem__(self, tier_id: str) -> CalibrationRow:
        try:
            return self.rows[tier_id]
        except KeyError:
            raise MissingCalibration(tier_id) from None

    def __contains__(self, tier_id):
        return tier_id in self.rows

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows.values())

    def apply(self, specs: list[TierSpec]) -> list[TierSpec]:
        """Return ``specs`` with latencies filled in from this table."""
        out = []
        for s in specs:
            row = self[s.name]
            out.append(s.calibrated(row.decomp_ns, row.comp_ns))
        return out

    def to_csv(self, path):
        path = Path(path)
        with path.open("w", newline="") as fh:
            for key, value in sorted(self.metadata.items()):
                fh.write(f"# {key}: {value}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in self.rows.values():
                w.writerow([r.tier_id, r.decomp_ns, repr(float(r.ratio)), r.comp_ns])

    @classmethod
    def from_csv(cls, path) -> "CalibrationTable":
        table = cls()
        with Path(path).open(newline="") as fh:
            lines = []
            for line in fh:
                if line.startswith("#"):
                    key, _, value = line[1:].partition(":")
                    table.metadata[key.strip()] = value.strip()
                elif line.strip():
                    lines.append(line)
        reader = csv.reader(lines)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}, got {header}")
        for rec in reader:
            table.add(CalibrationRow(rec[0], int(rec[1]), float(rec[2]), int(rec[3])))
        return table


def bundled_path() -> Path:
    """The calibration CSV shipped with the package."""
    return Path(str(resources.files("ntiersim") / "data" / "calibration.csv"))


def bundled_calibration() -> CalibrationTable:
    return CalibrationTable.from_csv(bundled_path())


def _time_per_page(fn, items) -> float:
    samples = []
    for _ in range(TIMING_PASSES):
        t0 = time.perf_counter_ns()
        for x in items:
            fn(x)
        samples.append((time.perf_counter_ns() - t0) / len(items))
    return statistics.median(samples)


def characterize(tier_specs: list[TierSpec], profile: DataProfile, pages: int = MIN_PAGES,
                 *, min_pages: int = MIN_PAGES, page_data: list[bytes] | None = None) -> CalibrationTable:
    """Measure every tier in ``tier_specs`` on pages drawn from ``profile``.

    Codec work (compress and decompress wall time) is measured once per
    distinct codec; each tier row adds its allocator overhead and media read
    latency. Ratios are pool-effective: original bytes over pool bytes after
    storing every page in a fresh tier.
    """
    if pages < min_pages:
        raise ValueError(f"characterize needs at least {min_pages} pages, got {pages}")
    data = page_data if page_data is not None else generate_pages(profile, pages)
    data = data[:pages]

    codec_cost: dict = {}
    for spec in tier_specs:
        if spec.codec in codec_cost:
            continue
        codec = spec.codec
        blobs = [codec.compress(p) for p in data]
        comp = _time_per_page(codec.compress, data)
        decomp = _time_per_page(codec.decompress, blobs)
        codec_cost[codec] = (comp, decomp, blobs)

    table = CalibrationTable(metadata={
        "profile": f"{profile.kind}/{profile.target_ratio}/{profile.seed}",
        "pages": str(len(data)),
    })
    for spec in tier_specs:
        comp, decomp, blobs = codec_cost[spec.codec]
        tier = CompressedTier(spec)
        for i, blob in enumerate(blobs):
            if len(blob) > RAW_THRESHOLD:
                tier._put(i, data[i], True)
            else:
                tier._put(i, blob, False)
        overhead = ALLOCATOR_OVERHEAD_NS[spec.allocator]
        table.add(CalibrationRow(
            tier_id=spec.name,
            decomp_ns=max(1, round(decomp + overhead + spec.media.read_latency_ns)),
            ratio=tier.compression_ratio(),
            comp_ns=max(1, round(comp + overhead)),
        ))
    return table
