"""Integral functionals of a source: mass, spin, the far-field gravitational
potential, the electrostatic potential built from the spatial stresses, and
the charge fraction left when only some spatial dimensions are retained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fields
from .sources import Ring, Source, measure
from .units import (
    DIMENSIONLESS, ENERGY, MASS, ConstantsRegistry, DimQuantity, DimVec,
    _collapsed, default_registry)

ANGULAR_MOMENTUM = DimVec(mass=1, length=2, time=-1)

# Phi = -(1/2)(g^00 - eta^00) with g^00 = 1 - h_00 gives +2m/r for the field
# prefactor 4; multiplying by -1/2 restores the Newtonian -m/r.
POTENTIAL_CALIBRATION = -0.5

CONVENTIONS = {
    "signature": "+---",
    "field_prefactor": 4,
    "potential_calibration": POTENTIAL_CALIBRATION,
    "inverse_metric": "first order: g^mn = eta^mn - h^mn",
    "spatial_contraction": "magnitude",
}


class FunctionalError(ValueError):
    pass


def quantity(value: float, cgs_dims: DimVec, system: str) -> DimQuantity:
    """Tag a bare number computed in ``system`` with its physical dimensions."""
    if system == "cgs":
        return DimQuantity(value, cgs_dims, "cgs")
    return DimQuantity(value, _collapsed(cgs_dims.gaussian(), system), system, cgs_dims)


def _check_compact(source: Source) -> None:
    r = source.support_radius
    if not (math.isfinite(r) and r > 0):
        raise FunctionalError("source is not compact")


def mass(source: Source, t: float = 0.0) -> DimQuantity:
    """Integral of T^00 over the source at time t."""
    _check_compact(source)
    m = float(measure(source, lambda p, T: T[:, 0, 0], t))
    return quantity(m, MASS, source.system)


def centroid(source: Source, t: float = 0.0) -> np.ndarray:
    m = float(measure(source, lambda p, T: T[:, 0, 0], t))
    if m == 0:
        return np.zeros(3)
    return measure(source, lambda p, T: p * T[:, 0, 0][:, None], t) / m


def spin(source: Source, t: float = 0.0) -> list[DimQuantity]:
    """S_k = integral eps_klm (x - x_c)^l T^{m0} about the energy centroid."""
    _check_compact(source)
    xc = centroid(source, t)

    def density(p, T):
        # T^{m0} = -T_{m0}
        mom = -T[:, 1:, 0]
        return np.cross(p - xc, mom)

    S = measure(source, density, t)
    return [quantity(float(v), ANGULAR_MOMENTUM, source.system) for v in S]


def spin_vector(source: Source, t: float = 0.0) -> np.ndarray:
    return np.array([s.value for s in spin(source, t)])


@dataclass(frozen=True)
class PotentialResult:
    r: float
    phi: DimQuantity
    phi_raw: float
    mass: float
    remainder_coefficient: float
    quadrature_error: float
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))

    def as_record(self) -> dict:
        return {"r": self.r, "phi": self.phi.as_record(), "phi_raw": self.phi_raw,
                "mass": self.mass, "remainder_coefficient": self.remainder_coefficient,
                "quadrature_error": self.quadrature_error, "conventions": self.conventions,
                "note": "raw -(1/2)(g^00 - eta^00) equals +2m/r; calibrated to -m/r"}


def grav_potential(source: Source, r: float, direction=(0.0, 0.0, 1.0),
                   cfg: fields.QuadratureConfig | None = None) -> PotentialResult:
    """Phi at distance r from the source center along ``direction``.

    Also returns |Phi + m/r| r^3, which tends to a constant when the leading
    correction is quadrupolar.
    """
    if r <= source.support_radius:
        raise FunctionalError(
            f"r = {r} lies inside the support (radius {source.support_radius}); "
            "use fields.retarded_h for interior points")
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    x = np.asarray(source.center) + r * u
    h, err, _ = fields.retarded_h_all(source, 0.0, x, cfg)
    ginv = fields.inverse_metric_first_order(h)
    phi_raw = -0.5 * (ginv[0, 0] - 1.0)
    phi = POTENTIAL_CALIBRATION * phi_raw
    m = mass(source).value
    return PotentialResult(
        float(r), quantity(phi, DIMENSIONLESS, source.system), float(phi_raw), m,
        abs(phi + m / r) * r ** 3, float(abs(POTENTIAL_CALIBRATION) * 0.5 * err[0, 0]))


def _stress_integrals(source: Source) -> np.ndarray:
    """Integrals of T_11, T_22, T_33; refuses off-diagonal stresses."""
    off = measure(source, lambda p, T: np.abs(T[:, 1:, 1:] * (1 - np.eye(3))).sum(axis=(1, 2)))
    diag = measure(source, lambda p, T: np.stack([T[:, i, i] for i in (1, 2, 3)], axis=1))
    if float(off) > 1e-12 * max(float(np.abs(diag).sum()), 1e-300):
        raise FunctionalError("sources with off-diagonal stresses are not supported")
    return np.asarray(diag, dtype=float)


def em_potential(source: Source, r: float, signed: bool = False) -> DimQuantity:
    """A_0 = 2 m * (integral of the contracted spatial stress) / r.

    The contraction uses |eta^ij| = delta^ij unless ``signed``, in which case
    eta^ij = -delta^ij and A_0 comes out negative for positive pressures.
    """
    if r <= source.support_radius:
        raise FunctionalError(f"r = {r} lies inside the support")
    P = float(_stress_integrals(source).sum())
    if signed:
        P = -P
    m = mass(source).value
    return quantity(2.0 * m * P / r, ENERGY, source.system)


@dataclass(frozen=True)
class ChargeResult:
    retained_dimensions: int
    fraction: float
    reference_charge: DimQuantity

    @property
    def charge(self) -> DimQuantity:
        return self.reference_charge * self.fraction

    def as_record(self) -> dict:
        return {"retained_dimensions": self.retained_dimensions, "fraction": self.fraction,
                "charge": self.charge.as_record()}


def charge_fraction(source: Source, d: int,
                    registry: ConstantsRegistry | None = None) -> ChargeResult:
    """Share of the summed diagonal stress carried by the first d axes."""
    if d not in (1, 2, 3):
        raise FunctionalError(f"retained dimensions must be 1, 2 or 3, got {d}")
    registry = registry or default_registry()
    P = _stress_integrals(source)
    total = P[0] + P[1] + P[2]
    if total == 0:
        raise FunctionalError("total pressure integral is zero; charge fraction undefined")
    part = total if d == 3 else float(P[:d].sum())
    frac = part / total
    if not 0.0 <= frac <= 1.0:
        raise FunctionalError(f"charge fraction {frac} outside [0, 1] (mixed-sign stresses)")
    return ChargeResult(d, float(frac), registry["e"])


# --------------------------------------------------------------------------
# electron preset


def electron_preset(registry: ConstantsRegistry | None = None) -> Ring:
    """Ring of mass m_e and radius hbar/(2 m_e c) moving at c, in G = c = 1 units.

    This is the simplest distribution whose spin is exactly hbar/2; the mass
    and radius are geometrized lengths (cm).
    """
    registry = registry or default_registry()
    G, hbar, c, m_e = (registry.value(k) for k in ("G", "hbar", "c", "m_e"))
    m_geo = G * m_e / c ** 2
    radius = hbar / (2.0 * m_e * c)
    return Ring.with_mass(m_geo, radius, 1.0, system="geometrized")


def electron_checks(registry: ConstantsRegistry | None = None) -> dict:
    registry = registry or default_registry()
    ring = electron_preset(registry)
    m = mass(ring).to("cgs", registry)
    S = [s.to("cgs", registry) for s in spin(ring)]
    half_hbar = 0.5 * registry.value("hbar")
    return {
        "mass_g": m.value,
        "mass_rel_error": abs(m.value / registry.value("m_e") - 1.0),
        "spin_erg_s": [s.value for s in S],
        "spin_rel_error": abs(math.sqrt(sum(s.value ** 2 for s in S)) / half_hbar - 1.0),
    }


__all__ = [
    "CONVENTIONS", "ChargeResult", "FunctionalError", "POTENTIAL_CALIBRATION", "PotentialResult",
    "centroid", "charge_fraction", "electron_checks", "electron_preset", "em_potential",
    "grav_potential", "mass", "quantity", "spin", "spin_vector",
]
