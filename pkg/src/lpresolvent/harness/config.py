"""Campaign configuration: INI-style files with sections, parsed by :mod:`configparser`."""

from __future__ import annotations

import configparser
import os
import warnings
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from ..geometry import (
    DampingField,
    ModelGeometry,
    build_sphere_zonal,
    build_torus,
    constant_damping,
    cosine_damping,
)
from ..regions import Disk, admissible_p_range

__all__ = [
    "ConfigError",
    "GeometryConfig",
    "DampingConfig",
    "RegionConfig",
    "ScanConfig",
    "BoydConfig",
    "FlowConfig",
    "SharpnessConfig",
    "CampaignConfig",
    "load_config",
    "parse_config",
    "OUT_ENV",
    "seed_for",
]

OUT_ENV = "LPRESOLVENT_OUT"


class ConfigError(ValueError):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a rational number: {text!r}") from exc


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"not a list of numbers: {text!r}") from exc


def _optional_float(text: str | None) -> float | None:
    if text is None or not text.strip():
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _cosines(text: str) -> tuple[tuple[tuple[int, ...], float], ...]:
    """``"1 0 0 : 1.0; 0 1 0 : 0.5"`` -> ``(((1,0,0), 1.0), ((0,1,0), 0.5))``."""
    out = []
    for item in filter(None, (s.strip() for s in text.split(";"))):
        try:
            k, amp = item.split(":")
            out.append((tuple(int(v) for v in k.replace(",", " ").split()), float(amp)))
        except ValueError as exc:
            raise ConfigError(f"bad cosine term {item!r}; expected 'k1 k2 k3 : amplitude'") from exc
    return tuple(out)


def _disks(text: str) -> tuple[Disk, ...]:
    out = []
    for item in filter(None, (s.strip() for s in text.split(";"))):
        vals = _floats(item)
        if len(vals) != 3:
            raise ConfigError(f"bad disk {item!r}; expected 're im radius'")
        out.append(Disk(complex(vals[0], vals[1]), vals[2]))
    return tuple(out)


@dataclass(frozen=True)
class GeometryConfig:
    kind: str = "torus"
    n: int = 3
    N: int = 16
    K: int = 24
    n_theta: int | None = None

    def build(self) -> ModelGeometry:
        if self.kind == "torus":
            return build_torus(self.n, self.N)
        if self.kind == "sphere":
            return build_sphere_zonal(self.K, self.n_theta)
        raise ConfigError(f"unknown geometry kind {self.kind!r}")

    @property
    def dimension(self) -> int:
        return self.n if self.kind == "torus" else 3


@dataclass(frozen=True)
class DampingConfig:
    kind: str = "none"  # none | constant | cosines
    value: float = 0.0
    offset: float = 0.0
    cosines: tuple = ()

    def build(self, geom: ModelGeometry) -> DampingField:
        if self.kind == "none":
            return constant_damping(geom, 0.0)
        if self.kind == "constant":
            return constant_damping(geom, self.value)
        if self.kind == "cosines":
            return cosine_damping(geom, self.offset, self.cosines)
        raise ConfigError(f"unknown damping kind {self.kind!r}")


@dataclass(frozen=True)
class RegionConfig:
    kind: str = "half-plane"  # half-plane | parabolic | damped
    delta: float = 0.5
    L: float = 6.0
    A_plus: float | None = None
    A_minus: float | None = None
    v_source: str = "qep"  # qep | none
    v_radius: float = 0.1
    qep_truncation: int = 4
    disks: tuple = ()


@dataclass(frozen=True)
class ScanConfig:
    segment: str = "crucial-line"
    start: float = 2.0
    stop: float = 30.0
    count: int = 24
    p: Fraction = Fraction(6, 5)
    level: float | None = None
    slope_limit: float = 0.1

    @property
    def q(self) -> Fraction:
        return self.p / (self.p - 1)


@dataclass(frozen=True)
class BoydConfig:
    restarts: int = 8
    max_iters: int = 300
    rtol: float = 1e-8


@dataclass(frozen=True)
class FlowConfig:
    ladder: tuple = (4.0, 8.0, 16.0, 32.0, 64.0)
    directions: int = 256
    points: int = 16
    rational_height: int = 3


@dataclass(frozen=True)
class SharpnessConfig:
    c: float = 1.0
    k_start: int = 6
    k_stop: int = 20
    delta: float = 0.5
    offset: float = 1.5
    growth_min: float = 2.0


@dataclass(frozen=True)
class CampaignConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    damping: DampingConfig = field(default_factory=DampingConfig)
    region: RegionConfig = field(default_factory=RegionConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    boyd: BoydConfig = field(default_factory=BoydConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    sharpness: SharpnessConfig = field(default_factory=SharpnessConfig)
    seed: int = 0
    threads: int = 1
    out: Path = Path("results")
    expected: Path | None = None

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.scan.count < 2:
            raise ConfigError("a scan needs at least two points")
        if not self.scan.p > 1:
            raise ConfigError(f"p must exceed 1, got {self.scan.p}")
        lo, hi = admissible_p_range(self.geometry.dimension)
        if not lo <= self.scan.p <= hi:
            warnings.warn(f"p={self.scan.p} outside the admissible range [{lo}, {hi}]", stacklevel=2)

    def with_overrides(self, **changes) -> "CampaignConfig":
        """Copy with top-level fields or ``section__field`` keys replaced."""
        top, nested = {}, {}
        for key, value in changes.items():
            if value is None:
                continue
            if "__" in key:
                section, name = key.split("__", 1)
                nested.setdefault(section, {})[name] = value
            else:
                top[key] = value
        for section, vals in nested.items():
            top[section] = replace(getattr(self, section), **vals)
        return replace(self, **top)


_SECTIONS = {
    "geometry": GeometryConfig,
    "damping": DampingConfig,
    "region": RegionConfig,
    "scan": ScanConfig,
    "boyd": BoydConfig,
    "flow": FlowConfig,
    "sharpness": SharpnessConfig,
}

_PARSERS = {
    ("geometry", "n_theta"): lambda s: int(s) if s.strip() else None,
    ("damping", "cosines"): _cosines,
    ("region", "A_plus"): _optional_float,
    ("region", "A_minus"): _optional_float,
    ("region", "disks"): _disks,
    ("scan", "p"): _fraction,
    ("scan", "level"): _optional_float,
    ("flow", "ladder"): _floats,
}


def _convert(section: str, name: str, raw: str, default):
    parser = _PARSERS.get((section, name))
    try:
        if parser is not None:
            return parser(raw)
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[{section}] {name} = {raw!r}: {exc}") from exc


def parse_config(text: str, base: Path | None = None) -> CampaignConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str  # keep A_plus, N, K as written
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc

    unknown = set(cp.sections()) - set(_SECTIONS) - {"campaign"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    kwargs = {}
    for section, cls in _SECTIONS.items():
        if not cp.has_section(section):
            continue
        defaults = cls()
        names = {f.name for f in fields(cls)}
        vals = {}
        for name, raw in cp.items(section):
            if name not in names:
                raise ConfigError(f"unknown key {name!r} in [{section}]")
            vals[name] = _convert(section, name, raw, getattr(defaults, name))
        try:
            kwargs[section] = cls(**vals)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[{section}]: {exc}") from exc

    if cp.has_section("campaign"):
        sec = cp["campaign"]
        allowed = {"seed", "threads", "out", "expected"}
        extra = set(sec) - allowed
        if extra:
            raise ConfigError(f"unknown keys in [campaign]: {sorted(extra)}")
        try:
            if "seed" in sec:
                kwargs["seed"] = int(sec["seed"])
            if "threads" in sec:
                kwargs["threads"] = int(sec["threads"])
        except ValueError as exc:
            raise ConfigError(f"[campaign]: {exc}") from exc
        root = base or Path.cwd()
        if sec.get("out", "").strip():
            kwargs["out"] = root / sec["out"].strip()
        if sec.get("expected", "").strip():
            kwargs["expected"] = root / sec["expected"].strip()
    try:
        cfg = CampaignConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    env_out = os.environ.get(OUT_ENV)
    if env_out:
        cfg = replace(cfg, out=Path(env_out))
    return cfg


def load_config(path) -> CampaignConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base=path.parent)


def seed_for(campaign_seed: int, index: int, stream: int = 0) -> int:
    """Per-point seed from (campaign seed, stream, point index); independent of execution order."""
    state = np.random.SeedSequence([campaign_seed, stream, index]).generate_state(1, dtype=np.uint64)
    return int(state[0])
