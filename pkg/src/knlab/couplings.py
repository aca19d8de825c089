"""Order-of-magnitude relations between coupling constants and masses.

Each relation compares a computed left-hand side with a target and reports
the discrepancy in dex (log10 of lhs/rhs) or, for the pion ratio, as a
relative error. Every sub-check is evaluated twice, once in cgs and once
after converting both sides to natural units, and the two discrepancies
must agree.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .units import (
    DIMENSIONLESS, ConstantsRegistry, DimQuantity, UnitError, check_dimensions,
    default_registry, log10_ratio)

SYSTEM_AGREEMENT = 1e-10
UNITS_UNCLEAR = "paper-units-unclear"


@dataclass(frozen=True)
class SubCheck:
    label: str
    lhs: DimQuantity
    rhs: DimQuantity
    tolerance: float
    kind: str = "dex"          # "dex" or "relative"
    informational: bool = False
    discrepancy: float = math.nan
    natural_discrepancy: float = math.nan
    units_consistent: bool = True
    passed: bool = False

    def as_record(self) -> dict:
        return {
            "label": self.label, "kind": self.kind,
            "lhs": self.lhs.as_record(), "rhs": self.rhs.as_record(),
            "discrepancy": _clean(self.discrepancy),
            "natural_discrepancy": _clean(self.natural_discrepancy),
            "tolerance": self.tolerance, "units_consistent": self.units_consistent,
            "informational": self.informational, "passed": self.passed,
        }


@dataclass(frozen=True)
class RelationEntry:
    id: str
    description: str
    target_log10: float
    tolerance_log10: float
    subs: tuple[SubCheck, ...] = ()
    flags: tuple[str, ...] = ()
    error: str | None = None

    @property
    def lhs(self) -> DimQuantity | None:
        return self.subs[0].lhs if self.subs else None

    @property
    def rhs(self) -> DimQuantity | None:
        return self.subs[0].rhs if self.subs else None

    @property
    def evaluated_log10_discrepancy(self) -> float:
        """Discrepancy of the first sub-check, which carries the headline target."""
        return self.subs[0].discrepancy if self.subs else math.nan

    @property
    def passed(self) -> bool:
        gated = [s for s in self.subs if not s.informational]
        return self.error is None and bool(gated) and all(s.passed for s in gated)

    def as_record(self) -> dict:
        return {
            "id": self.id, "description": self.description,
            "target_log10": self.target_log10, "tolerance_log10": self.tolerance_log10,
            "evaluated_log10_discrepancy": _clean(self.evaluated_log10_discrepancy),
            "flags": list(self.flags), "error": self.error, "passed": self.passed,
            "subs": [s.as_record() for s in self.subs],
        }


def _clean(x: float):
    return None if x is None or not math.isfinite(x) else x


def _discrepancy(lhs: DimQuantity, rhs: DimQuantity, kind: str) -> float:
    if kind == "relative":
        if rhs.value == 0:
            raise UnitError("relative error against zero target")
        return lhs.value / rhs.value - 1.0
    return log10_ratio(lhs.value, rhs.value)


def evaluate(label: str, lhs: DimQuantity, rhs: DimQuantity, tolerance: float,
             registry: ConstantsRegistry, kind: str = "dex",
             informational: bool = False, units_flagged: bool = False) -> SubCheck:
    """Score one comparison in cgs and again in natural units."""
    consistent = check_dimensions(lhs, rhs).consistent
    if not consistent and not units_flagged:
        raise UnitError(f"{label}: lhs {lhs.dims} and rhs {rhs.dims} differ")
    d = _discrepancy(lhs, rhs, kind)
    dn = _discrepancy(lhs.to("natural", registry), rhs.to("natural", registry), kind)
    ok = abs(d) <= tolerance and abs(d - dn) < SYSTEM_AGREEMENT
    return SubCheck(label, lhs, rhs, tolerance, kind, informational, d, dn, consistent, ok)


def _q(v: float) -> DimQuantity:
    return DimQuantity(v, DIMENSIONLESS, "cgs")


def _grams(v: float, registry: ConstantsRegistry) -> DimQuantity:
    return registry["m_e"] * (v / registry.value("m_e"))


def _guard(entry_id: str, description: str, target: float, tol: float, flags=()):
    """Run a builder and turn arithmetic failures into an errored entry."""
    def wrap(fn):
        def run(registry: ConstantsRegistry | None = None) -> RelationEntry:
            registry = registry or default_registry()
            try:
                subs = tuple(fn(registry))
                return RelationEntry(entry_id, description, target, tol, subs, tuple(flags))
            except (UnitError, ZeroDivisionError, ValueError, OverflowError, KeyError) as exc:
                return RelationEntry(entry_id, description, target, tol, (), tuple(flags),
                                     f"{type(exc).__name__}: {exc}")
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


def planck_mass_scale(registry: ConstantsRegistry) -> DimQuantity:
    """m* = sqrt(e^2/G), the mass at which e^2 = G m^2."""
    e, G = registry["e"], registry["G"]
    if e.value == 0 or G.value <= 0:
        raise UnitError("e and G must be nonzero to form sqrt(e^2/G)")
    return (e ** 2 / G).sqrt()


@_guard("R1", "e^2 ~ G m^2 fixes m ~ 1e-5 g", -5.0, 1.0)
def eval_planck_unification(registry):
    """m* = sqrt(e^2/G) against 1e-5 g."""
    m_star = planck_mass_scale(registry)
    return [evaluate("sqrt(e^2/G) vs 1e-5 g", m_star, _grams(1e-5, registry), 1.0, registry)]


@_guard("R2", "e^2/(G m_p^2) ~ 1e40 with m_p ~ 1e-20 m", 40.0, 2.5)
def eval_ratio_1e40(registry):
    """(a) m_p defined as 1e-20 m*, (b) the physical proton mass."""
    e2, G = registry["e"] ** 2, registry["G"]
    m_star = planck_mass_scale(registry)
    m_p_def = m_star * 1e-20
    m_p = registry["m_p"]
    ratio_a = e2 / (G * m_p_def ** 2)
    ratio_b = e2 / (G * m_p ** 2)
    hbar_c = registry["hbar"] * registry["c"]
    return [
        evaluate("(a) m_p = 1e-20 sqrt(e^2/G)", ratio_a, _q(1e40), 1e-9, registry),
        evaluate("(b) physical proton mass", ratio_b, _q(1e40), 2.5, registry),
        # not gated: shows which combination lands near 1e38
        evaluate("hbar c/(G m_p^2), for reference", hbar_c / (G * m_p ** 2), _q(1e40), 2.5,
                 registry, informational=True),
    ]


def _alpha_natural(registry: ConstantsRegistry) -> float:
    """e^2 expressed in hbar = c = 1 units, i.e. the fine-structure constant."""
    a = (registry["e"] ** 2).to("natural", registry)
    if a.value <= 0:
        raise UnitError("e^2 must be positive")
    return a.value


@_guard("R3", "e^2 -> e^2/10 gives a quark mass ~ 1e3 m_e", 3.0, 0.5)
def eval_quark_mass(registry):
    """m_q = m_e / (e^2/10)."""
    a = _alpha_natural(registry)
    m_e = registry["m_e"]
    return [evaluate("m_e/(e^2/10) vs 1e3 m_e", m_e * (10.0 / a), m_e * 1e3, 0.5, registry)]


@_guard("R4", "intermediary mass 2 m_e/e^2 ~ 274 m_e; factor 2 from the 2 G m_e prefactor",
        math.log10(274.0), math.log10(1.01))
def eval_pion_mass(registry):
    """m_int = 2 m_e / e^2 against 274 m_e and against the physical pion mass."""
    a = _alpha_natural(registry)
    m_e = registry["m_e"]
    m_int = m_e * (2.0 / a)
    subs = [evaluate("2 m_e/e^2 vs 274 m_e", m_int, m_e * 274.0, 0.01, registry, "relative")]
    if "m_pi" in registry:
        subs.append(evaluate("2 m_e/e^2 vs physical m_pi", m_int, registry["m_pi"], 0.01,
                             registry, "relative"))
    subs.append(evaluate("m_e/e^2 without the factor 2", m_e * (1.0 / a), m_e * 274.0, 0.01,
                         registry, "relative", informational=True))
    return subs


@_guard("R5", "G_w = g^2/m_w^2 ~ 1e-5/m_p^2 ~ 1e43 g^-2 with g^2 ~ 0.1, m_w ~ 100 m_p",
        43.0, 1.0, flags=(UNITS_UNCLEAR,))
def eval_weak_coupling(registry):
    """(a) the round inputs against 1e-5/m_p^2, (b) the magnitude against 1e43 g^-2."""
    g2 = 0.1
    m_p = registry["m_p"]
    if m_p.value <= 0:
        raise UnitError("proton mass must be positive")
    lhs = g2 / (m_p * 100.0) ** 2
    rhs_a = 1e-5 / m_p ** 2
    rhs_b = 1e43 / _grams(1.0, registry) ** 2
    return [
        evaluate("(a) g^2/m_w^2 vs 1e-5/m_p^2", lhs, rhs_a, 1e-12, registry, units_flagged=True),
        evaluate("(b) g^2/m_w^2 vs 1e43 g^-2", lhs, rhs_b, 1.0, registry, units_flagged=True),
    ]


RELATIONS = (eval_planck_unification, eval_ratio_1e40, eval_quark_mass, eval_pion_mass,
             eval_weak_coupling)


@dataclass(frozen=True)
class Ledger:
    entries: tuple[RelationEntry, ...]
    version: str
    digest: str
    conventions: dict = field(default_factory=lambda: {
        "charge": "gaussian", "discrepancy": "log10(lhs/rhs)",
        "systems_compared": ["cgs", "natural"]})

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def summary(self) -> dict:
        return {"total": len(self.entries),
                "passed": sum(e.passed for e in self.entries),
                "failed": [e.id for e in self.entries if not e.passed],
                "errors": [e.id for e in self.entries if e.error]}

    def as_record(self) -> dict:
        return {"constants_version": self.version, "constants_digest": self.digest,
                "conventions": self.conventions, "summary": self.summary(),
                "entries": [e.as_record() for e in self.entries]}


def ledger_report(registry: ConstantsRegistry | None = None) -> Ledger:
    registry = registry or default_registry()
    return Ledger(tuple(fn(registry) for fn in RELATIONS), registry.version, registry.digest)


def _rows(ledger: Ledger):
    for e in ledger.entries:
        if e.error:
            yield [e.id, "", "", "", "", "", "error", "", e.error]
            continue
        for s in e.subs:
            status = "info" if s.informational else ("pass" if s.passed else "FAIL")
            yield [e.id, s.label, repr(s.lhs.value), repr(s.rhs.value), str(s.lhs.dims),
                   repr(_clean(s.discrepancy)), status, repr(s.tolerance) + " " + s.kind,
                   ";".join(e.flags)]


HEADER = ["id", "check", "lhs", "rhs", "unit", "discrepancy", "status", "tolerance", "flags"]


def format_ledger(ledger: Ledger, fmt: str = "table") -> str:
    if fmt == "json":
        return json.dumps(ledger.as_record(), sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(_rows(ledger))
        return buf.getvalue()
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"{'id':<4} {'check':<36} {'discrepancy':>12} {'tolerance':>16}  status"]
    for e in ledger.entries:
        if e.error:
            lines.append(f"{e.id:<4} {'(error)':<36} {'':>12} {'':>16}  error: {e.error}")
            continue
        for s in e.subs:
            status = "info" if s.informational else ("pass" if s.passed else "FAIL")
            d = f"{s.discrepancy:+.4f}" if math.isfinite(s.discrepancy) else "nan"
            tol = f"{s.tolerance:g} {s.kind}"
            flag = f" [{','.join(e.flags)}]" if e.flags else ""
            lines.append(f"{e.id:<4} {s.label[:36]:<36} {d:>12} {tol:>16}  {status}{flag}")
    summ = ledger.summary()
    lines.append(f"{summ['passed']}/{summ['total']} relations pass")
    return "\n".join(lines) + "\n"


__all__ = [
    "Ledger", "RELATIONS", "RelationEntry", "SubCheck", "UNITS_UNCLEAR", "eval_pion_mass",
    "eval_planck_unification", "eval_quark_mass", "eval_ratio_1e40", "eval_weak_coupling",
    "evaluate", "format_ledger", "ledger_report", "planck_mass_scale",
]
