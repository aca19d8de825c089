"""Run configuration files.

Grammar, one statement per line::

    # comment
    [section]
    key = value

Section and key names are ``[a-z_][a-z0-9_]*``. Values are kept as strings
and interpreted by the consumer; lists are whitespace separated. Known
sections are ``run``, ``source``, ``quadrature`` and ``nearfield``.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path

from . import fields as fld
from . import nearfield as nf
from .functionals import electron_preset
from .sources import (
    HarmonicBall, Ring, RotatingBall, RotatingShell, Source, SourceError, StaticBall,
    read_grid, GRID_MAGIC)

SECTIONS = ("run", "source", "quadrature", "nearfield")
FORMATS = ("json", "jsonl", "csv", "table", "plot")
PRESETS = ("electron", "harmonic", "ball")
EXECUTION_ONLY = ("output", "workers")
_NAME = re.compile(r"^[a-z_][a-z0-9_]*$")


class ConfigError(ValueError):
    """Invalid configuration; the message names the file, line and key."""


@dataclass(frozen=True)
class Entry:
    value: str
    line: int


def parse_config(text: str, source: str = "<string>") -> dict[str, dict[str, Entry]]:
    out: dict[str, dict[str, Entry]] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or not _NAME.match(line[1:-1].strip()):
                raise ConfigError(f"{source}:{lineno}: bad section header {raw.strip()!r}")
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"{source}:{lineno}: unknown section [{section}]")
            if section in out:
                raise ConfigError(f"{source}:{lineno}: duplicate section [{section}]")
            out[section] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        if section is None:
            raise ConfigError(f"{source}:{lineno}: key outside of any [section]")
        key, value = (s.strip() for s in line.split("=", 1))
        if not _NAME.match(key):
            raise ConfigError(f"{source}:{lineno}: bad key {key!r}")
        if key in out[section]:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} in [{section}]")
        if not value:
            raise ConfigError(f"{source}:{lineno}: empty value for {key!r}")
        out[section][key] = Entry(value, lineno)
    return out


class _Reader:
    """Typed access to one section, with line-numbered errors."""

    def __init__(self, entries: dict[str, Entry], section: str, source: str):
        self.entries = entries
        self.section = section
        self.source = source
        self.used: set[str] = set()

    def _where(self, key: str) -> str:
        e = self.entries.get(key)
        line = f":{e.line}" if e else ""
        return f"{self.source}{line}: [{self.section}] {key}"

    def has(self, key: str) -> bool:
        return key in self.entries

    def str(self, key: str, default=None):
        self.used.add(key)
        if key not in self.entries:
            if default is None:
                raise ConfigError(f"{self._where(key)} is required")
            return default
        return self.entries[key].value

    def float(self, key: str, default=None) -> float:
        v = self.str(key, None if default is None else repr(default))
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{self._where(key)}: expected a number, got {v!r}") from None

    def int(self, key: str, default=None) -> int:
        v = self.str(key, None if default is None else str(default))
        try:
            return int(v)
        except ValueError:
            raise ConfigError(f"{self._where(key)}: expected an integer, got {v!r}") from None

    def floats(self, key: str, n: int | None = None, default=None) -> tuple[float, ...]:
        if key not in self.entries and default is not None:
            self.used.add(key)
            return tuple(default)
        v = self.str(key)
        try:
            vals = tuple(float(s) for s in v.replace(",", " ").split())
        except ValueError:
            raise ConfigError(f"{self._where(key)}: expected numbers, got {v!r}") from None
        if n is not None and len(vals) != n:
            raise ConfigError(f"{self._where(key)}: expected {n} numbers, got {len(vals)}")
        return vals

    def finish(self) -> None:
        extra = sorted(set(self.entries) - self.used)
        if extra:
            raise ConfigError(f"{self._where(extra[0])}: unknown key")


# --------------------------------------------------------------------------
# sources


def _source_from_section(r: _Reader, base: Path | None) -> Source:
    kind = r.str("kind")
    system = r.str("system", "geometrized")
    center = r.floats("center", 3, (0.0, 0.0, 0.0))
    try:
        if kind in PRESETS and not (set(r.entries) - {"kind"}):
            src = preset(kind)
        elif kind in ("ball", "harmonic"):
            pressure = r.str("pressure", "isotropic")
            if pressure not in ("isotropic", "dust"):
                pressure = r.floats("pressure", 3)
            R = r.float("radius")
            if r.has("mass"):
                eps = r.float("mass") / (4.0 / 3.0 * math.pi * R ** 3)
            else:
                eps = r.float("energy_density")
            if kind == "ball":
                src = StaticBall(eps, R, pressure, center, system)
            else:
                omega = r.float("omega", eps * 4.0 / 3.0 * math.pi * R ** 3)
                src = HarmonicBall(eps, R, pressure, center, system,
                                   omega=omega, phase=r.float("phase", 0.0))
        elif kind == "rotating_ball":
            src = RotatingBall(r.float("energy_density"), r.float("radius"),
                               r.float("angular_speed"), center, system)
        elif kind == "rotating_shell":
            src = RotatingShell(r.float("surface_density"), r.float("radius"),
                                r.float("angular_speed"), center, system)
        elif kind == "ring":
            if r.has("mass"):
                src = Ring.with_mass(r.float("mass"), r.float("radius"), r.float("speed"),
                                     thickness=r.float("thickness", 0.0), center=center,
                                     system=system)
            else:
                src = Ring(r.float("line_density"), r.float("radius"), r.float("speed"),
                           r.float("thickness", 0.0), center, system)
        elif kind == "electron":
            src = electron_preset()
        elif kind == "grid":
            path = Path(r.str("file"))
            if base is not None and not path.is_absolute():
                path = base / path
            src = read_grid(path)
        else:
            raise ConfigError(f"{r._where('kind')}: unknown source kind {kind!r}")
    except SourceError as exc:
        raise ConfigError(f"{r.source}: [source]: {exc}") from None
    r.finish()
    return src


def preset(name: str) -> Source:
    if name == "electron":
        return electron_preset()
    if name == "harmonic":
        return nf.default_harmonic()
    if name == "ball":
        return StaticBall(1.0, 1.0)
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def load_source(spec: str) -> Source:
    """A preset name, a grid file, or a config file with a [source] section."""
    if spec in PRESETS:
        return preset(spec)
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"source {spec!r} is neither a preset ({', '.join(PRESETS)}) nor a file")
    with open(path, "r", errors="replace") as fh:
        first = fh.readline().strip()
    if first == GRID_MAGIC:
        return read_grid(path)
    parsed = parse_config(path.read_text(), str(path))
    if "source" not in parsed:
        raise ConfigError(f"{path}: no [source] section")
    return _source_from_section(_Reader(parsed["source"], "source", str(path)), path.parent)


# --------------------------------------------------------------------------
# run config


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on besides the constants file contents."""

    subcommand: str = ""
    source: str = ""
    system: str = "geometrized"
    output: str = "-"
    format: str = "json"
    constants: str = ""
    workers: int = 1
    radial_nodes: int = 24
    angular_nodes: int = 24
    tolerance: float = 1e-10
    max_refine: int = 3
    grid_near: int = 2
    extra: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def quadrature(self) -> fld.QuadratureConfig:
        return fld.QuadratureConfig(self.radial_nodes, self.angular_nodes, self.tolerance,
                                    self.max_refine, self.grid_near)

    def as_record(self) -> dict:
        """Fields that can change results; output path and worker count cannot."""
        skip = ("extra",) + EXECUTION_ONLY
        rec = {f.name: getattr(self, f.name) for f in dc_fields(self) if f.name not in skip}
        rec["extra"] = {k: v for k, v in self.extra}
        return rec

    def to_text(self, execution: bool = True) -> str:
        """Canonical config text; parsing it back gives an equal RunConfig."""
        lines = ["[run]"]
        keys = ("subcommand", "source", "system", "output", "format", "constants", "workers")
        for k in keys:
            if not execution and k in EXECUTION_ONLY:
                continue
            v = getattr(self, k)
            if v != "":
                lines.append(f"{k} = {v}")
        lines.append("[quadrature]")
        for k in ("radial_nodes", "angular_nodes", "tolerance", "max_refine", "grid_near"):
            lines.append(f"{k} = {getattr(self, k)!r}")
        if self.extra:
            lines.append("[nearfield]")
            lines.extend(f"{k} = {v}" for k, v in self.extra)
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text(execution=False).encode()).hexdigest()


def run_config_from_text(text: str, source: str = "<string>") -> RunConfig:
    parsed = parse_config(text, source)
    kw: dict = {}
    if "run" in parsed:
        r = _Reader(parsed["run"], "run", source)
        for k in ("subcommand", "source", "system", "output", "format", "constants"):
            if r.has(k):
                kw[k] = r.str(k)
        if r.has("workers"):
            kw["workers"] = r.int("workers")
        r.finish()
        if kw.get("format", "json") not in FORMATS:
            raise ConfigError(f"{r._where('format')}: must be one of {', '.join(FORMATS)}")
        if kw.get("system", "geometrized") not in ("cgs", "natural", "geometrized"):
            raise ConfigError(f"{r._where('system')}: unknown unit system")
        if kw.get("workers", 1) < 1:
            raise ConfigError(f"{r._where('workers')}: must be >= 1")
    if "quadrature" in parsed:
        q = _Reader(parsed["quadrature"], "quadrature", source)
        for k in ("radial_nodes", "angular_nodes", "max_refine", "grid_near"):
            if q.has(k):
                kw[k] = q.int(k)
                if kw[k] < (0 if k in ("max_refine", "grid_near") else 2):
                    raise ConfigError(f"{q._where(k)}: out of range")
        if q.has("tolerance"):
            kw["tolerance"] = q.float("tolerance")
            if not kw["tolerance"] > 0:
                raise ConfigError(f"{q._where('tolerance')}: must be > 0")
        q.finish()
    if "nearfield" in parsed:
        kw["extra"] = tuple((k, e.value) for k, e in parsed["nearfield"].items())
    return RunConfig(**kw)


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return run_config_from_text(text, str(path))


__all__ = [
    "ConfigError", "PRESETS", "RunConfig", "load_run_config", "load_source", "parse_config",
    "preset", "run_config_from_text",
]
