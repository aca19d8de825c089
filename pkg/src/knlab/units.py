"""Dimension bookkeeping for the three unit systems used throughout knlab.

Quantities live in one of

* ``cgs``          CGS-Gaussian (g, cm, s, esu),
* ``natural``      hbar = c = 1, every dimension collapses to a power of mass (grams),
* ``geometrized``  G = c = 1, every dimension collapses to a power of length (cm).

Charge is carried as its own exponent. Under the Gaussian convention one esu
is g^1/2 cm^3/2 s^-1, so e^2 has the dimensions of erg*cm; conversions out of
cgs need that convention to eliminate the charge exponent.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Union

SYSTEMS = ("cgs", "natural", "geometrized")

Exponent = Union[int, Fraction]


class UnitError(ValueError):
    """Raised for incompatible systems, dimensions, or conversions."""


@dataclass(frozen=True)
class DimVec:
    mass: Fraction = Fraction(0)
    length: Fraction = Fraction(0)
    time: Fraction = Fraction(0)
    charge: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("mass", "length", "time", "charge"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))

    def __add__(self, other: DimVec) -> DimVec:
        return DimVec(self.mass + other.mass, self.length + other.length,
                      self.time + other.time, self.charge + other.charge)

    def __sub__(self, other: DimVec) -> DimVec:
        return self + (-other)

    def __neg__(self) -> DimVec:
        return DimVec(-self.mass, -self.length, -self.time, -self.charge)

    def scale(self, k: Exponent) -> DimVec:
        k = Fraction(k)
        return DimVec(self.mass * k, self.length * k, self.time * k, self.charge * k)

    @property
    def dimensionless(self) -> bool:
        return self == DIMENSIONLESS

    def gaussian(self) -> DimVec:
        """Eliminate charge using esu = g^1/2 cm^3/2 s^-1."""
        q = self.charge
        return DimVec(self.mass + q / 2, self.length + 3 * q / 2, self.time - q, 0)

    def as_tuple(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.mass, self.length, self.time, self.charge)

    def __str__(self) -> str:
        parts = []
        for sym, exp in zip(("g", "cm", "s", "esu"), self.as_tuple()):
            if exp == 1:
                parts.append(sym)
            elif exp != 0:
                parts.append(f"{sym}^{exp}")
        return "*".join(parts) or "1"


DIMENSIONLESS = DimVec()
MASS = DimVec(mass=1)
LENGTH = DimVec(length=1)
TIME = DimVec(time=1)
CHARGE = DimVec(charge=1)
ENERGY = DimVec(mass=1, length=2, time=-2)


def _check_system(system: str) -> None:
    if system not in SYSTEMS:
        raise UnitError(f"unknown unit system {system!r}; expected one of {SYSTEMS}")


@dataclass(frozen=True)
class DimQuantity:
    """A float value with dimensions and a unit-system tag.

    ``cgs_dims`` remembers the CGS signature of a quantity after it has been
    collapsed into natural or geometrized units, which is what makes the
    conversion back to cgs well defined.
    """

    value: float
    dims: DimVec = DIMENSIONLESS
    system: str = "cgs"
    cgs_dims: DimVec | None = None

    def __post_init__(self):
        _check_system(self.system)
        object.__setattr__(self, "value", float(self.value))
        if self.system == "cgs":
            object.__setattr__(self, "cgs_dims", self.dims)

    def _same_system(self, other: DimQuantity) -> None:
        if self.system != other.system:
            raise UnitError(f"system mismatch: {self.system} vs {other.system}")

    def _combine_cgs(self, other: DimQuantity, sign: int) -> DimVec | None:
        if self.cgs_dims is None or other.cgs_dims is None:
            return None
        return self.cgs_dims + (other.cgs_dims if sign > 0 else -other.cgs_dims)

    def __mul__(self, other):
        if isinstance(other, DimQuantity):
            self._same_system(other)
            return DimQuantity(self.value * other.value, self.dims + other.dims,
                               self.system, self._combine_cgs(other, +1))
        return DimQuantity(self.value * other, self.dims, self.system, self.cgs_dims)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, DimQuantity):
            self._same_system(other)
            return DimQuantity(self.value / other.value, self.dims - other.dims,
                               self.system, self._combine_cgs(other, -1))
        return DimQuantity(self.value / other, self.dims, self.system, self.cgs_dims)

    def __rtruediv__(self, other):
        return DimQuantity(other / self.value, -self.dims, self.system,
                           None if self.cgs_dims is None else -self.cgs_dims)

    def __pow__(self, k: Exponent) -> DimQuantity:
        k = Fraction(k)
        return DimQuantity(self.value ** float(k), self.dims.scale(k), self.system,
                           None if self.cgs_dims is None else self.cgs_dims.scale(k))

    def sqrt(self) -> DimQuantity:
        return self ** Fraction(1, 2)

    def __add__(self, other: DimQuantity) -> DimQuantity:
        self._same_system(other)
        if self.dims != other.dims:
            raise UnitError(f"cannot add {self.dims} and {other.dims}")
        return DimQuantity(self.value + other.value, self.dims, self.system, self.cgs_dims)

    def __sub__(self, other: DimQuantity) -> DimQuantity:
        return self + (-other)

    def __neg__(self) -> DimQuantity:
        return DimQuantity(-self.value, self.dims, self.system, self.cgs_dims)

    def __float__(self) -> float:
        return self.value

    def to(self, target: str, registry: ConstantsRegistry | None = None,
           gaussian: bool = True) -> DimQuantity:
        return convert(self, target, registry, gaussian)

    def as_record(self) -> dict:
        return {"value": self.value, "unit": str(self.dims), "system": self.system}


def _factor_exponents(dims: DimVec, target: str) -> dict[str, Fraction]:
    """Exponents of (G, hbar, c) that rescale a cgs value into ``target``.

    ``dims`` must already be charge free.
    """
    a, b, c = dims.mass, dims.length, dims.time
    if target == "natural":
        # M^a L^b T^c * hbar^x c^y  with length and time exponents cancelled
        return {"G": Fraction(0), "hbar": -(b + c), "c": b + 2 * c}
    if target == "geometrized":
        return {"G": a, "hbar": Fraction(0), "c": c - 2 * a}
    return {"G": Fraction(0), "hbar": Fraction(0), "c": Fraction(0)}


def _collapsed(dims: DimVec, target: str) -> DimVec:
    a, b, c = dims.mass, dims.length, dims.time
    if target == "natural":
        return DimVec(mass=a - b - c)
    if target == "geometrized":
        return DimVec(length=a + b + c)
    return dims


def convert(q: DimQuantity, target: str, registry: ConstantsRegistry | None = None,
            gaussian: bool = True) -> DimQuantity:
    """Convert ``q`` into ``target`` using G, hbar and c from ``registry``."""
    _check_system(target)
    if q.system == target:
        return q
    registry = registry or default_registry()

    cgs_dims = q.cgs_dims
    if cgs_dims is None:
        if not q.dims.dimensionless:
            raise UnitError(
                f"{q.system} quantity with dims {q.dims} has no recorded cgs signature; "
                "cannot convert unambiguously")
        cgs_dims = DIMENSIONLESS

    if cgs_dims.charge != 0:
        if not gaussian:
            raise UnitError(
                "charge dimension cannot be expressed in "
                f"{target if q.system == 'cgs' else q.system} units without the "
                "Gaussian convention (esu = g^1/2 cm^3/2 s^-1); pass gaussian=True")
    mlt = cgs_dims.gaussian()

    consts = {"G": registry.value("G"), "hbar": registry.value("hbar"), "c": registry.value("c")}

    def factor(system: str) -> float:
        f = 1.0
        for name, exp in _factor_exponents(mlt, system).items():
            if exp:
                f *= consts[name] ** float(exp)
        return f

    value = q.value
    if q.system != "cgs":
        value = value / factor(q.system)
    if target != "cgs":
        value = value * factor(target)
    dims = cgs_dims if target == "cgs" else _collapsed(mlt, target)
    return DimQuantity(value, dims, target, cgs_dims)


@dataclass(frozen=True)
class DimensionReport:
    consistent: bool
    difference: DimVec

    def as_record(self) -> dict:
        return {"consistent": self.consistent,
                "difference": {k: str(v) for k, v in zip(
                    ("mass", "length", "time", "charge"), self.difference.as_tuple())}}


def check_dimensions(lhs: DimQuantity, rhs: DimQuantity,
                     gaussian: bool = True) -> DimensionReport:
    """Compare dimensions of two quantities tagged with the same system.

    With ``gaussian`` the charge exponent is expanded into mass, length and
    time first, so e^2 and G m^2 compare equal.
    """
    if lhs.system != rhs.system:
        raise UnitError(f"system mismatch: {lhs.system} vs {rhs.system}")
    a, b = lhs.dims, rhs.dims
    if gaussian:
        a, b = a.gaussian(), b.gaussian()
    diff = a - b
    return DimensionReport(diff.dimensionless, diff)


# --------------------------------------------------------------------------
# constants registry

_BASE_UNITS = {
    "g": MASS,
    "cm": LENGTH,
    "s": TIME,
    "esu": CHARGE,
    "erg": ENERGY,
}
_TOKEN = re.compile(r"^([A-Za-z]+)(?:\^(-?\d+(?:/\d+)?))?$")


def parse_unit(text: str) -> DimVec:
    """Parse a unit string such as ``cm^3*g^-1*s^-2`` into a DimVec."""
    text = text.strip()
    if text == "1":
        return DIMENSIONLESS
    dims = DIMENSIONLESS
    for token in text.split("*"):
        m = _TOKEN.match(token.strip())
        if not m or m.group(1) not in _BASE_UNITS:
            raise UnitError(f"bad unit token {token!r} in {text!r}")
        exp = Fraction(m.group(2)) if m.group(2) else Fraction(1)
        dims = dims + _BASE_UNITS[m.group(1)].scale(exp)
    return dims


@dataclass(frozen=True)
class ConstantsRegistry:
    """Immutable table of CGS constants.

    Lookups return cgs-tagged quantities; derived entries are ``m_planck``
    (sqrt(hbar c / G)) and ``alpha`` (e^2 / hbar c).
    """

    entries: Mapping[str, DimQuantity]
    version: str = "unversioned"
    digest: str = ""
    source: str = "<memory>"

    def __post_init__(self):
        for name, q in self.entries.items():
            if q.system != "cgs":
                raise UnitError(f"constant {name} must be stored in cgs")
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def __getitem__(self, name: str) -> DimQuantity:
        if name in self.entries:
            return self.entries[name]
        if name == "m_planck":
            return (self["hbar"] * self["c"] / self["G"]).sqrt()
        if name == "alpha":
            return self["e"] ** 2 / (self["hbar"] * self["c"])
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return name in self.entries or name in ("m_planck", "alpha")

    def value(self, name: str) -> float:
        return self[name].value

    def names(self) -> list[str]:
        return list(self.entries)

    def with_overrides(self, **values: float) -> ConstantsRegistry:
        """Copy with some values replaced; dimensions are kept."""
        entries = dict(self.entries)
        for name, v in values.items():
            entries[name] = DimQuantity(v, entries[name].dims, "cgs")
        blob = repr(sorted((k, q.value) for k, q in entries.items())).encode()
        return ConstantsRegistry(entries, self.version + "+override",
                                 hashlib.sha256(blob).hexdigest(), "<override>")


def parse_constants(text: str, source: str = "<string>") -> ConstantsRegistry:
    entries: dict[str, DimQuantity] = {}
    version = "unversioned"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("#"):
            m = re.match(r"#\s*version:\s*(\S+)", line)
            if m:
                version = m.group(1)
            continue
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise UnitError(f"{source}:{lineno}: expected 'name value unit', got {raw!r}")
        name, value, unit = parts
        try:
            v = float(value)
        except ValueError:
            raise UnitError(f"{source}:{lineno}: bad value {value!r}") from None
        try:
            dims = parse_unit(unit)
        except UnitError as exc:
            raise UnitError(f"{source}:{lineno}: {exc}") from None
        if name in entries:
            raise UnitError(f"{source}:{lineno}: duplicate constant {name!r}")
        entries[name] = DimQuantity(v, dims, "cgs")
    missing = {"G", "hbar", "c", "e", "m_e", "m_p"} - set(entries)
    if missing:
        raise UnitError(f"{source}: missing constants {sorted(missing)}")
    digest = hashlib.sha256(text.encode()).hexdigest()
    return ConstantsRegistry(entries, version, digest, source)


def load_constants(path: str | Path | None = None) -> ConstantsRegistry:
    if path is None:
        text = resources.files("knlab.data").joinpath("constants.txt").read_text()
        return parse_constants(text, "constants.txt")
    path = Path(path)
    return parse_constants(path.read_text(), str(path))


_DEFAULT: ConstantsRegistry | None = None


def default_registry() -> ConstantsRegistry:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_constants()
    return _DEFAULT


def log10_ratio(a: float, b: float) -> float:
    """log10(a/b), guarded against non-positive inputs."""
    if not (a > 0 and b > 0):
        raise UnitError(f"log10 ratio undefined for {a!r} / {b!r}")
    return math.log10(a) - math.log10(b)
