"""Experiment configuration: one TOML file, validated field by field."""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .lattice_locus import (IndexSet, LatticeConfig, LocusError, OffsetCase, RadiiSchedule,
                            marked_points)

OUT_ENV = "AHLFORS_LAB_OUT"


class ConfigError(ValueError):
    pass


def _line_of(text: str, section: str, key: str | None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header), if present."""
    current = ""
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"^\[\[?\s*([^\]]+?)\s*\]\]?$", s)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section and re.match(rf"^{re.escape(key)}\s*=", s):
            return n
    return None


@dataclass(frozen=True)
class QuadratureConfig:
    spacing: float = 0.15
    n_radial: int | None = None
    n_angular: int | None = None
    refinement_radius: float = 1.0
    local_angular: int = 48


@dataclass(frozen=True)
class ProfilerConfig:
    log_m: float = 20.0
    eps_t: float = 0.1
    delta_prime: float = 0.4
    marked_classes: tuple[int, ...] = (1,)
    selectors: tuple[str, ...] = ("THIRD", "CASE(empty,odd)")
    probe_u0: complex = 0.5
    probe_eps: float = 0.1


@dataclass(frozen=True)
class TorusConfig:
    slope: float = 1.4142135623730951
    m1: complex = 1.0
    m2: complex = 0.0
    b1: complex = 0.0
    b2: complex = 0.0
    domain_radius: float = 0.71
    radii: tuple[float, ...] = (20.0, 40.0, 80.0)


@dataclass(frozen=True)
class ModelConfig:
    alpha: float = 0.05
    m: int = 4
    eps1: float = 0.1
    kappa_growth: float = 1.5


@dataclass(frozen=True)
class PsiScanConfig:
    re_min: float = -60.0
    re_max: float = 60.0
    im_min: float = -60.0
    im_max: float = 60.0
    n_re: int = 41
    n_im: int = 41


@dataclass(frozen=True)
class ExperimentConfig:
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    schedule: RadiiSchedule = field(
        default_factory=lambda: RadiiSchedule.desk(5, 2, labels=(1, 3)))
    cases: dict = field(default_factory=dict)
    marked_count: int = 16
    seed: int | None = None
    model: ModelConfig = field(default_factory=ModelConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    profiler: ProfilerConfig = field(default_factory=ProfilerConfig)
    torus: TorusConfig = field(default_factory=TorusConfig)
    scan_radii: tuple[float, ...] = (5.0, 10.0, 20.0, 40.0)
    eval_psi: PsiScanConfig = field(default_factory=PsiScanConfig)
    output_dir: str = "out"


class _Reader:
    """Typed access to one table, with errors pointing at file:line."""

    def __init__(self, data: dict, section: str, text: str, source: str):
        self.data = data.get(section, {}) if section else data
        self.section = section
        self.text = text
        self.source = source
        if not isinstance(self.data, dict):
            self.fail(None, "must be a table")

    def fail(self, key: str | None, msg: str):
        line = _line_of(self.text, self.section, key)
        where = f"{self.source}:{line}" if line else self.source
        name = f"[{self.section}] {key}" if key else f"[{self.section}]"
        raise ConfigError(f"{where}: {name}: {msg}")

    def get(self, key: str, kind: type, default: Any, check=None, why: str = "") -> Any:
        if key not in self.data:
            return default
        raw = self.data[key]
        try:
            if kind is float:
                if isinstance(raw, bool) or not isinstance(raw, (int, float)):
                    raise TypeError
                val = float(raw)
                if not math.isfinite(val):
                    raise ValueError
            elif kind is int:
                if isinstance(raw, bool) or not isinstance(raw, int):
                    raise TypeError
                val = raw
            elif kind is complex:
                val = _complex(raw)
            elif kind is str:
                if not isinstance(raw, str):
                    raise TypeError
                val = raw
            else:
                val = kind(raw)
        except (TypeError, ValueError):
            self.fail(key, f"expected {kind.__name__}, got {raw!r}")
        if check is not None and not check(val):
            self.fail(key, why or f"invalid value {raw!r}")
        return val

    def get_list(self, key: str, kind: type, default, check=None, why: str = ""):
        if key not in self.data:
            return default
        raw = self.data[key]
        if not isinstance(raw, list):
            self.fail(key, f"expected a list, got {raw!r}")
        out = []
        for item in raw:
            sub = _Reader({"_": item}, "", self.text, self.source)
            try:
                out.append(sub.get("_", kind, None))
            except ConfigError:
                self.fail(key, f"expected a list of {kind.__name__}, got {raw!r}")
        if check is not None and not check(out):
            self.fail(key, why or f"invalid value {raw!r}")
        return tuple(out)

    def unknown(self, allowed: set[str]):
        for k in self.data:
            if k not in allowed:
                self.fail(k, "unknown key")


def _complex(raw) -> complex:
    if isinstance(raw, bool):
        raise TypeError
    if isinstance(raw, (int, float)):
        return complex(float(raw), 0.0)
    if isinstance(raw, list) and len(raw) == 2 and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw):
        return complex(float(raw[0]), float(raw[1]))
    raise TypeError


def load_config(path: str | os.PathLike | None) -> ExperimentConfig:
    """Read and validate a config file; ``None`` gives the defaults."""
    if path is None:
        return _apply_env(ExperimentConfig())
    source = str(path)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{source}: cannot read: {exc.strerror}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return _apply_env(parse_config(data, text, source))


def _apply_env(cfg: ExperimentConfig) -> ExperimentConfig:
    out = os.environ.get(OUT_ENV)
    if out:
        return ExperimentConfig(**{**cfg.__dict__, "output_dir": out})
    return cfg


SECTIONS = {"lattice", "offsets", "model", "quadrature", "profiler", "torus", "scan",
            "eval_psi", "output"}


def parse_config(data: dict, text: str = "", source: str = "<config>") -> ExperimentConfig:
    for k in data:
        if k not in SECTIONS:
            line = _line_of(text, k, None)
            raise ConfigError(f"{source}:{line or '?'}: unknown section [{k}]")
    pos = lambda x: x > 0

    lat = _Reader(data, "lattice", text, source)
    lat.unknown({"c", "base_multiplier", "growth_law", "growth", "count", "labels", "radii"})
    c = lat.get("c", int, 5, lambda x: x >= 5, "c must be an integer >= 5")
    base = lat.get("base_multiplier", float, 8.0, pos, "must be positive")
    law = lat.get("growth_law", str, "factor", lambda x: x in ("factor", "power"),
                  "growth_law is 'factor' or 'power'")
    growth = lat.get("growth", float, 4.0)
    count = lat.get("count", int, 2, lambda x: x >= 0, "count must be >= 0")
    labels = lat.get_list("labels", int, None)
    radii = lat.get_list("radii", float, None)
    if radii is None:
        if law == "factor":
            radii = tuple(base * c * growth**k for k in range(count))
        else:
            radii = [base * c]
            for _ in range(count - 1):
                radii.append(radii[-1] ** growth)
            radii = tuple(radii[:count])
    if labels is None:
        labels = (1, 3)[:len(radii)] if len(radii) <= 2 else tuple(range(1, len(radii) + 1))
    try:
        cfg_lat = LatticeConfig(c)
        schedule = RadiiSchedule(tuple(radii), law, growth, base, tuple(labels))
        schedule.validate_for(cfg_lat)
    except LocusError as exc:
        key = "labels" if "label" in str(exc) else "radii" if "radi" in str(exc) else "growth"
        lat.fail(key if key in lat.data else None, str(exc))

    off = _Reader(data, "offsets", text, source)
    off.unknown({"marked_count", "seed", "case"})
    marked_count = off.get("marked_count", int, 16, lambda x: 1 <= x <= 64,
                           "marked_count must lie in [1, 64]")
    seed = off.get("seed", int, None)
    cases = {}
    ys = tuple(complex(y) for y in marked_points(marked_count))
    raw_cases = off.data.get("case", [])
    if not isinstance(raw_cases, list):
        off.fail("case", "use [[offsets.case]] tables")
    for entry in raw_cases:
        rd = _Reader({"x": entry}, "x", text, source)
        rd.section = "offsets.case"
        label = rd.get("label", int, None, lambda x: x >= 1, "label must be >= 1")
        if label is None:
            rd.fail("label", "missing")
        tag = rd.get("tag", str, None)
        iset = rd.get("index_set", str, "empty")
        weights = rd.get_list("weights", float, ())
        try:
            if tag is None:
                cases[label] = OffsetCase.for_label(label, ys)
            else:
                cases[label] = OffsetCase(tag, IndexSet.parse(iset), tuple(weights), ys)
        except LocusError as exc:
            rd.fail("tag", str(exc))

    mod = _Reader(data, "model", text, source)
    mod.unknown({"alpha", "m", "c", "eps1", "kappa_growth"})
    if "c" in mod.data and mod.data["c"] != c:
        mod.fail("c", f"disagrees with [lattice] c = {c}")
    model = ModelConfig(
        mod.get("alpha", float, 0.05, pos, "alpha must be positive"),
        mod.get("m", int, 4, pos, "m must be a positive integer"),
        mod.get("eps1", float, 0.1, lambda x: 0 < x <= 1, "eps1 must lie in (0, 1]"),
        mod.get("kappa_growth", float, 1.5, pos, "must be positive"),
    )
    if not model.m * model.alpha - model.kappa_growth / c**2 > 0:
        mod.fail("alpha", "need m * alpha > kappa_growth / c^2")

    q = _Reader(data, "quadrature", text, source)
    q.unknown({"spacing", "n_radial", "n_angular", "refinement_radius", "local_angular"})
    quad = QuadratureConfig(
        q.get("spacing", float, 0.15, lambda x: 0 < x <= 2, "spacing must lie in (0, 2]"),
        q.get("n_radial", int, None, pos, "must be positive"),
        q.get("n_angular", int, None, pos, "must be positive"),
        q.get("refinement_radius", float, 1.0, lambda x: 0 < x <= 1.2,
              "refinement_radius must lie in (0, 1.2]"),
        q.get("local_angular", int, 48, lambda x: x >= 8, "local_angular must be >= 8"),
    )
    if (quad.n_radial is None) != (quad.n_angular is None):
        q.fail("n_radial", "give both n_radial and n_angular or neither")

    p = _Reader(data, "profiler", text, source)
    p.unknown({"log_M", "M", "eps_t", "delta_prime", "marked_classes", "selectors",
               "probe_u0", "probe_eps"})
    if "M" in p.data:
        log_m = math.log(p.get("M", float, None, lambda x: x > 1, "M must exceed 1"))
    else:
        log_m = p.get("log_M", float, 20.0, pos, "log_M must be positive")
    prof = ProfilerConfig(
        log_m,
        p.get("eps_t", float, 0.1, lambda x: 0 < x < 0.5, "eps_t must lie in (0, 1/2)"),
        p.get("delta_prime", float, 0.4, lambda x: 0 < x < 1, "delta_prime must lie in (0, 1)"),
        p.get_list("marked_classes", int, (1,),
                   lambda xs: all(1 <= x <= marked_count for x in xs),
                   f"marked classes must lie in [1, {marked_count}]"),
        p.get_list("selectors", str, ("THIRD", "CASE(empty,odd)")),
        p.get("probe_u0", complex, 0.5),
        p.get("probe_eps", float, 0.1, pos, "must be positive"),
    )
    from .current_profiler import SubsequenceSelector
    for s in prof.selectors:
        try:
            SubsequenceSelector.parse(s)
        except Exception as exc:
            p.fail("selectors", str(exc))

    t = _Reader(data, "torus", text, source)
    t.unknown({"slope", "m1", "m2", "b1", "b2", "domain_radius", "radii"})
    tor = TorusConfig(
        t.get("slope", float, 1.4142135623730951),
        t.get("m1", complex, 1.0), t.get("m2", complex, 0.0),
        t.get("b1", complex, 0.0), t.get("b2", complex, 0.0),
        t.get("domain_radius", float, 0.71, pos, "must be positive"),
        t.get_list("radii", float, (20.0, 40.0, 80.0), lambda xs: all(x >= 1 for x in xs),
                   "torus radii must be >= 1"),
    )
    from .torus_examples import TorusLineModel, TorusModelError
    try:
        TorusLineModel(tor.slope, tor.m1, tor.m2, tor.b1, tor.b2, tor.domain_radius)
    except TorusModelError as exc:
        t.fail("slope" if "slope" in str(exc) else "m1", str(exc))

    sc = _Reader(data, "scan", text, source)
    sc.unknown({"radii"})
    scan = sc.get_list("radii", float, (5.0, 10.0, 20.0, 40.0),
                       lambda xs: all(x >= 1 for x in xs), "scan radii must be >= 1")

    e = _Reader(data, "eval_psi", text, source)
    e.unknown({"re_min", "re_max", "im_min", "im_max", "n_re", "n_im"})
    ev = PsiScanConfig(
        e.get("re_min", float, -60.0), e.get("re_max", float, 60.0),
        e.get("im_min", float, -60.0), e.get("im_max", float, 60.0),
        e.get("n_re", int, 41, pos, "must be positive"),
        e.get("n_im", int, 41, pos, "must be positive"),
    )
    if ev.re_max < ev.re_min:
        e.fail("re_max", "re_max < re_min")
    if ev.im_max < ev.im_min:
        e.fail("im_max", "im_max < im_min")

    o = _Reader(data, "output", text, source)
    o.unknown({"dir"})
    out_dir = o.get("dir", str, "out")

    return ExperimentConfig(cfg_lat, schedule, cases, marked_count, seed, model, quad, prof,
                            tor, scan, ev, out_dir)
