"""YAML experiment configs: parse, validate, normalize, serialize.

Every problem is collected with its location (``section.key``) before
anything is raised, so a bad file reports all of its errors at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .codecs import CODEC_NAMES, DATA_KINDS, Codec, DataProfile
from .profiling import REGION_SIZE, ProfilingConfig
from .sim.engine import MODEL_KINDS, ModelSpec, SimParams
from .sim.experiment import ExperimentConfig
from .sim.trace import DISTRIBUTIONS, AccessDistribution, WorkloadSpec
from .tiers import ALLOCATORS, DRAM, OPTANE, Media, TierSpec

MiB = 1 << 20

SECTIONS = {"name", "tiers", "media", "workload", "profiling", "model", "experiment", "sim", "characterize"}
TIER_KEYS = {"id", "codec", "level", "allocator", "media", "cost_per_gb", "read_latency_ns"}
MEDIA_KEYS = {"read_latency_ns", "cost_per_gb"}
WORKLOAD_KEYS = {"footprint_mib", "distribution", "ops_per_window", "read_fraction", "data", "seed", "trace"}
DIST_KEYS = {"kind", "center", "sigma", "hot_fraction", "hot_prob"}
DATA_KEYS = {"kind", "target_ratio", "seed"}
PROFILING_KEYS = {"window_seconds", "sample_rate", "fault_weight", "history_depth", "seed",
                  "exact_fault_attribution"}
MODEL_KEYS = {"kind", "threshold", "coverage", "tco_knob", "k", "hotness_source", "migration_screen",
              "region_cap", "node_limit"}
EXPERIMENT_KEYS = {"windows", "warmup_windows"}
SIM_KEYS = {"rehome_fraction", "template_pages", "bookkeeping_ns"}
CHARACTERIZE_KEYS = {"pages"}
MEDIA_NAMES = {"DRAM": DRAM, "Optane-like": OPTANE}


class ConfigError(ValueError):
    def __init__(self, errors: list[str], source: str = ""):
        self.errors = list(errors)
        self.source = source
        prefix = f"{source}: " if source else ""
        super().__init__(prefix + "; ".join(self.errors))


@dataclass
class LoadedConfig:
    experiment: ExperimentConfig
    characterize_pages: int = 1000
    source: str = ""


def preset_names() -> list[str]:
    root = resources.files("ntiersim") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve_config_path(name_or_path) -> Path:
    """A file path, or the name of a bundled preset such as ``6T-WF-M``."""
    p = Path(name_or_path)
    if p.exists():
        return p
    bundled = resources.files("ntiersim") / "presets" / f"{name_or_path}.yaml"
    if bundled.is_file():
        return Path(str(bundled))
    raise FileNotFoundError(f"config not found: {name_or_path}")


class _Reader:
    """Typed access to one mapping, recording errors under a location prefix."""

    def __init__(self, data, where: str, allowed: set[str], errors: list[str]):
        self.where = where
        self.errors = errors
        if data is None:
            data = {}
        if not isinstance(data, dict):
            errors.append(f"{where or 'document'}: expected a mapping, got {type(data).__name__}")
            data = {}
        self.data = data
        for key in data:
            if key not in allowed:
                errors.append(f"{self._loc(key)}: unknown key")

    def _loc(self, key):
        return f"{self.where}.{key}" if self.where else key

    def get(self, key, kind, default=None, check=None, msg=""):
        if key not in self.data or self.data[key] is None:
            return default
        value = self.data[key]
        try:
            if kind is bool:
                if not isinstance(value, bool):
                    raise TypeError
            elif kind is int:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise TypeError
            elif kind is float:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise TypeError
                value = float(value)
            elif kind is str:
                if not isinstance(value, str):
                    raise TypeError
        except TypeError:
            self.errors.append(f"{self._loc(key)}: expected {kind.__name__}, got {value!r}")
            return default
        if check is not None and not check(value):
            self.errors.append(f"{self._loc(key)}: {msg}, got {value!r}")
            return default
        return value

    def sub(self, key, allowed):
        return _Reader(self.data.get(key), self._loc(key), allowed, self.errors)


def _media(root: _Reader) -> dict[str, Media]:
    out = dict(MEDIA_NAMES)
    sec = root.sub("media", set(MEDIA_NAMES))
    for name, base in MEDIA_NAMES.items():
        m = sec.sub(name, MEDIA_KEYS)
        lat = m.get("read_latency_ns", int, base.read_latency_ns, lambda v: v >= 0, "must be >= 0")
        cost = m.get("cost_per_gb", float, base.cost_per_gb, lambda v: v > 0, "must be > 0")
        out[name] = Media(name, lat, cost)
    return out


def _tiers(root: _Reader, media: dict[str, Media]) -> list[TierSpec]:
    raw = root.data.get("tiers", [])
    errors = root.errors
    if raw is None:
        raw = []
    if not isinstance(raw, list):
        errors.append("tiers: expected a list")
        return []
    out = []
    for i, item in enumerate(raw):
        t = _Reader(item, f"tiers[{i}]", TIER_KEYS, errors)
        before = len(errors)
        tid = t.get("id", int, i + 1, lambda v: v >= 1, "must be >= 1")
        codec = t.get("codec", str, None, lambda v: v in CODEC_NAMES, f"must be one of {', '.join(CODEC_NAMES)}")
        level = t.get("level", int, 0)
        alloc = t.get("allocator", str, None, lambda v: v in ALLOCATORS, f"must be one of {', '.join(ALLOCATORS)}")
        mname = t.get("media", str, None, lambda v: v in media, f"must be one of {', '.join(media)}")
        if codec is None and "codec" not in t.data:
            errors.append(f"tiers[{i}].codec: required")
        if alloc is None and "allocator" not in t.data:
            errors.append(f"tiers[{i}].allocator: required")
        if mname is None and "media" not in t.data:
            errors.append(f"tiers[{i}].media: required")
        if len(errors) > before:
            continue
        try:
            c = Codec(codec, level)
        except ValueError as exc:
            errors.append(f"tiers[{i}].level: {exc}")
            continue
        m = media[mname]
        lat = t.get("read_latency_ns", int, None, lambda v: v >= 0, "must be >= 0")
        cost = t.get("cost_per_gb", float, None, lambda v: v > 0, "must be > 0")
        if lat is not None or cost is not None:
            m = Media(m.name, m.read_latency_ns if lat is None else lat, m.cost_per_gb if cost is None else cost)
        out.append(TierSpec(tid, c, alloc, m))
    ids = [s.id for s in out]
    if len(out) == len(raw) and sorted(ids) != list(range(1, len(ids) + 1)):
        errors.append(f"tiers: ids must be unique and dense 1..{len(ids)}, got {ids}")
    return out


def parse_config(data, source: str = "", seed: int | None = None) -> LoadedConfig:
    """Validate a parsed YAML document and build the experiment config."""
    errors: list[str] = []
    root = _Reader(data, "", SECTIONS, errors)
    name = root.get("name", str, Path(source).stem if source else "experiment")
    media = _media(root)
    tiers = _tiers(root, media)

    w = root.sub("workload", WORKLOAD_KEYS)
    fp = w.get("footprint_mib", int, 2048, lambda v: v > 0 and (v * MiB) % REGION_SIZE == 0,
               "must be a positive multiple of 2")
    d = w.sub("distribution", DIST_KEYS)
    dkind = d.get("kind", str, "gaussian", lambda v: v in DISTRIBUTIONS, f"must be one of {', '.join(DISTRIBUTIONS)}")
    center = d.get("center", float, 0.5, lambda v: 0 <= v <= 1, "must be in [0, 1]")
    sigma = d.get("sigma", float, 0.15, lambda v: v > 0, "must be > 0")
    hot_fraction = d.get("hot_fraction", float, 0.2, lambda v: 0 < v < 1, "must be in (0, 1)")
    hot_prob = d.get("hot_prob", float, 0.8, lambda v: 0 <= v <= 1, "must be in [0, 1]")
    ops = w.get("ops_per_window", int, 500_000, lambda v: v >= 0, "must be >= 0")
    rf = w.get("read_fraction", float, 0.9, lambda v: 0 <= v <= 1, "must be in [0, 1]")
    dd = w.sub("data", DATA_KEYS)
    data_kind = dd.get("kind", str, "text-like", lambda v: v in DATA_KINDS, f"must be one of {', '.join(DATA_KINDS)}")
    target = dd.get("target_ratio", float, 4.0, lambda v: v >= 1, "must be >= 1")
    data_seed = dd.get("seed", int, 0)
    wseed = w.get("seed", int, 0)
    trace = w.get("trace", str)

    p = root.sub("profiling", PROFILING_KEYS)
    window_s = p.get("window_seconds", float, 120.0, lambda v: v > 0, "must be > 0")
    prof = dict(
        window_seconds=window_s,
        sample_rate=p.get("sample_rate", float, 0.12, lambda v: 0 < v <= 1, "must be in (0, 1]"),
        fault_weight=p.get("fault_weight", float, 1.0, lambda v: v >= 0, "must be >= 0"),
        history_depth=p.get("history_depth", int, 4, lambda v: v >= 1, "must be >= 1"),
        seed=p.get("seed", int, 0),
        exact_fault_attribution=p.get("exact_fault_attribution", bool, False),
    )

    m = root.sub("model", MODEL_KEYS)
    kind = m.get("kind", str, "none", lambda v: v in MODEL_KINDS, f"must be one of {', '.join(MODEL_KINDS)}")
    k_raw = m.data.get("k") or {}
    k = {}
    if not isinstance(k_raw, dict):
        errors.append("model.k: expected a mapping of tier id to weight")
    else:
        for tid, val in k_raw.items():
            if not isinstance(tid, int) or isinstance(val, bool) or not isinstance(val, (int, float)) or val <= 0:
                errors.append(f"model.k.{tid}: expected tier id -> positive number")
            else:
                k[tid] = float(val)
    model = ModelSpec(
        kind=kind,
        hotness_threshold=m.get("threshold", float, None, lambda v: v >= 0, "must be >= 0"),
        coverage=m.get("coverage", float, None, lambda v: 0 <= v <= 1, "must be in [0, 1]"),
        tco_knob=m.get("tco_knob", float, None, lambda v: 0 <= v <= 1, "must be in [0, 1]"),
        k=k,
        hotness_source=m.get("hotness_source", str, None, lambda v: v in ("mean", "last"), "must be mean or last"),
        migration_screen=m.get("migration_screen", bool, None),
        region_cap=m.get("region_cap", int, 5000, lambda v: v >= 1, "must be >= 1"),
        node_limit=m.get("node_limit", int, 200_000, lambda v: v >= 1, "must be >= 1"),
    )

    e = root.sub("experiment", EXPERIMENT_KEYS)
    windows = e.get("windows", int, 20, lambda v: v >= 0, "must be >= 0")
    warmup = e.get("warmup_windows", int, 1, lambda v: v >= 0, "must be >= 0")
    s = root.sub("sim", SIM_KEYS)
    params = SimParams(
        rehome_fraction=s.get("rehome_fraction", float, 0.5, lambda v: 0 < v <= 1, "must be in (0, 1]"),
        template_pages=s.get("template_pages", int, 256, lambda v: v >= 1, "must be >= 1"),
        bookkeeping_ns=s.get("bookkeeping_ns", int, 500, lambda v: v >= 0, "must be >= 0"),
        dram=media["DRAM"],
    )
    c = root.sub("characterize", CHARACTERIZE_KEYS)
    char_pages = c.get("pages", int, 1000, lambda v: v >= 1, "must be >= 1")

    if seed is not None:
        wseed = seed
        prof["seed"] = seed
    if not errors:
        errors.extend(model.validate())
        if kind == "2T" and len(tiers) != 1:
            errors.append(f"model.kind: 2T needs exactly one compressed tier, {len(tiers)} configured")
        if kind != "none" and not tiers:
            errors.append("tiers: at least one compressed tier is required")
    if errors:
        raise ConfigError(errors, source)

    workload = WorkloadSpec(
        footprint_bytes=fp * MiB,
        distribution=AccessDistribution(dkind, center, sigma, hot_fraction, hot_prob),
        ops_per_window=ops, read_fraction=rf,
        data_profile=DataProfile(data_kind, target, data_seed),
        seed=wseed, window_seconds=window_s,
    )
    exp = ExperimentConfig(name=name, tiers=tiers, model=model, workload=workload,
                           profiling=ProfilingConfig(**prof), windows=windows, warmup_windows=warmup,
                           trace_path=trace, params=params)
    return LoadedConfig(exp, char_pages, source)


def load_config(name_or_path, seed: int | None = None) -> LoadedConfig:
    path = resolve_config_path(name_or_path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([f"invalid YAML: {str(exc).splitlines()[0]}"], str(path)) from None
    return parse_config(data, str(path), seed)


def to_dict(loaded: LoadedConfig) -> dict:
    """Normalized document: every key explicit, defaults filled in."""
    cfg = loaded.experiment
    wl = cfg.workload
    dram = cfg.params.dram
    optane = next((t.media for t in cfg.tiers if t.media.name == "Optane-like"), OPTANE)
    tiers = []
    for t in sorted(cfg.tiers, key=lambda t: t.id):
        tiers.append({"id": t.id, "codec": t.codec.name, "level": t.codec.level, "allocator": t.allocator,
                      "media": t.media.name, "cost_per_gb": t.media.cost_per_gb,
                      "read_latency_ns": t.media.read_latency_ns})
    model = cfg.model
    m = {"kind": model.kind}
    for key, val in (("threshold", model.hotness_threshold), ("coverage", model.coverage),
                     ("tco_knob", model.tco_knob), ("hotness_source", model.hotness_source),
                     ("migration_screen", model.migration_screen)):
        if val is not None:
            m[key] = val
    if model.k:
        m["k"] = {int(t): float(v) for t, v in sorted(model.k.items())}
    m["region_cap"] = model.region_cap
    m["node_limit"] = model.node_limit
    d = wl.distribution
    workload = {
        "footprint_mib": wl.footprint_bytes // MiB,
        "distribution": {"kind": d.kind, "center": d.center, "sigma": d.sigma,
                         "hot_fraction": d.hot_fraction, "hot_prob": d.hot_prob},
        "ops_per_window": wl.ops_per_window,
        "read_fraction": wl.read_fraction,
        "data": {"kind": wl.data_profile.kind, "target_ratio": float(wl.data_profile.target_ratio),
                 "seed": wl.data_profile.seed},
        "seed": wl.seed,
    }
    if cfg.trace_path:
        workload["trace"] = cfg.trace_path
    pr = cfg.profiling
    return {
        "name": cfg.name,
        "media": {"DRAM": {"read_latency_ns": dram.read_latency_ns, "cost_per_gb": dram.cost_per_gb},
                  "Optane-like": {"read_latency_ns": optane.read_latency_ns, "cost_per_gb": optane.cost_per_gb}},
        "tiers": tiers,
        "workload": workload,
        "profiling": {"window_seconds": pr.window_seconds, "sample_rate": pr.sample_rate,
                      "fault_weight": pr.fault_weight, "history_depth": pr.history_depth, "seed": pr.seed,
                      "exact_fault_attribution": pr.exact_fault_attribution},
        "model": m,
        "experiment": {"windows": cfg.windows, "warmup_windows": cfg.warmup_windows},
        "sim": {"rehome_fraction": cfg.params.rehome_fraction, "template_pages": cfg.params.template_pages,
                "bookkeeping_ns": cfg.params.bookkeeping_ns},
        "characterize": {"pages": loaded.characterize_pages},
    }


def dump_config(loaded: LoadedConfig) -> str:
    return yaml.safe_dump(to_dict(loaded), sort_keys=False)
