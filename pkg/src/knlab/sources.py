"""Stress-energy sources T_{mu nu}(t, x).

All families are expressed with c = 1 and signature (+,-,-,-); tensors are
returned with lower indices, so T_{0i} = -T^{0i} while T_{00} and T_{ij}
equal their upper-index counterparts. Parameters are plain floats in the
unit system named by ``system``.

Thin sources (``Ring`` with zero thickness, ``RotatingShell``) are
distributions: evaluated on their support they return line or surface
densities, and their quadrature nodes carry arc-length or area weights.

Rotating families carry the O(v) momentum density only. Their kinetic
stress is taken as balanced by internal (hoop) tension, so T_{ij} = 0; for a
ring this is exact and keeps the family conserved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .units import SYSTEMS

ETA = np.diag([1.0, -1.0, -1.0, -1.0])
COMPONENTS: tuple[tuple[int, int], ...] = (
    (0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))
COMPONENT_INDEX = {c: i for i, c in enumerate(COMPONENTS)}
ON_SUPPORT_RTOL = 1e-9


class SourceError(ValueError):
    pass


class GridFormatError(SourceError):
    pass


def component_key(mu: int, nu: int) -> int:
    return COMPONENT_INDEX[(min(mu, nu), max(mu, nu))]


def parse_component(text: str) -> tuple[int, int]:
    text = text.strip()
    if len(text) != 2 or not text.isdigit() or max(text) > "3":
        raise SourceError(f"bad component {text!r}; expected two digits 0-3 such as 00 or 13")
    mu, nu = int(text[0]), int(text[1])
    return (min(mu, nu), max(mu, nu))


def raise_index(lower: np.ndarray) -> np.ndarray:
    """T^{mu nu} from T_{mu nu} for arrays shaped (..., 4, 4)."""
    return ETA @ lower @ ETA


# --------------------------------------------------------------------------
# quadrature helpers


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gl_interval(n: int, a, b):
    """Gauss-Legendre nodes and weights mapped onto [a, b] (broadcasts)."""
    x, w = gauss_legendre(n)
    a = np.asarray(a, dtype=float)[..., None]
    b = np.asarray(b, dtype=float)[..., None]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def frame(axis) -> np.ndarray:
    """Rows e1, e2, e3 of a right-handed orthonormal frame with e3 along ``axis``."""
    e3 = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(e3)
    if norm == 0:
        return np.eye(3)
    e3 = e3 / norm
    helper = np.array([1.0, 0.0, 0.0]) if abs(e3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(helper, e3)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(e3, e1)
    return np.array([e1, e2, e3])


def sphere_directions(n_mu: int, n_phi: int, axis=None):
    """Unit vectors and solid-angle weights: GL in cos(theta), trapezoid in phi."""
    mu, wmu = gauss_legendre(n_mu)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    sin = np.sqrt(1.0 - mu ** 2)
    local = np.stack([
        np.outer(sin, np.cos(phi)).ravel(),
        np.outer(sin, np.sin(phi)).ravel(),
        np.repeat(mu, n_phi),
    ], axis=1)
    weights = np.repeat(wmu, n_phi) * (2.0 * math.pi / n_phi)
    if axis is not None:
        local = local @ frame(axis)
    return local, weights


@dataclass(frozen=True)
class Nodes:
    pos: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.weights)


# --------------------------------------------------------------------------
# source families


def _vec3(v) -> tuple[float, float, float]:
    arr = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise SourceError(f"non-finite vector {v!r}")
    return tuple(float(a) for a in arr)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SourceError(msg)


class Source:
    """Common interface of all source families."""

    kind = "volume"
    omega = 0.0
    phase = 0.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    system = "geometrized"

    @property
    def static(self) -> bool:
        return True

    @property
    def support_radius(self) -> float:
        """Radius of a sphere about ``center`` containing the support."""
        raise NotImplementedError

    def parts(self) -> tuple[Source, ...]:
        return (self,)

    def profile(self, pos: np.ndarray) -> np.ndarray:
        """Time-independent amplitude of T_{mu nu} at points shaped (N, 3)."""
        raise NotImplementedError

    def time_factor(self, t: float) -> float:
        return 1.0

    def stress(self, t: float, pos: np.ndarray) -> np.ndarray:
        return self.profile(pos) * self.time_factor(t)

    def nodes(self, n_r: int = 32, n_a: int = 32, axis=None) -> Nodes:
        """Quadrature rule for the source's own measure (volume, area or length)."""
        raise NotImplementedError

    def inside(self, pos: np.ndarray) -> np.ndarray | None:
        """Sharp-support indicator, or None for smooth or thin sources."""
        return None

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center)
        return c - self.support_radius, c + self.support_radius


def _check_common(src) -> None:
    _require(src.system in SYSTEMS, f"unknown unit system {src.system!r}")
    object.__setattr__(src, "center", _vec3(src.center))


def _rigid_velocity(rel: np.ndarray, angular_speed: float) -> np.ndarray:
    """Velocity of rigid rotation about the z axis."""
    v = np.zeros_like(rel)
    v[:, 0] = -angular_speed * rel[:, 1]
    v[:, 1] = angular_speed * rel[:, 0]
    return v


def _dust_momentum(density: np.ndarray, vel: np.ndarray) -> np.ndarray:
    out = np.zeros((len(density), 4, 4))
    out[:, 0, 0] = density
    # lower-index T_{0i} = -T^{0i}
    out[:, 0, 1:] = -density[:, None] * vel
    out[:, 1:, 0] = out[:, 0, 1:]
    return out


def _ball_nodes(center, radius, n_r, n_a, axis):
    r, wr = gl_interval(n_r, 0.0, radius)
    dirs, wd = sphere_directions(n_a, n_a, axis)
    pos = (r[:, None, None] * dirs[None, :, :]).reshape(-1, 3) + np.asarray(center)
    w = (wr * r ** 2)[:, None] * wd[None, :]
    return Nodes(pos, w.ravel())


def _pressures(model, energy_density: float) -> tuple[float, float, float]:
    if isinstance(model, str):
        if model == "isotropic":
            p = energy_density / 3.0
            return (p, p, p)
        if model == "dust":
            return (0.0, 0.0, 0.0)
        raise SourceError(f"unknown pressure model {model!r}")
    p = tuple(float(v) for v in model)
    _require(len(p) == 3 and all(math.isfinite(v) for v in p),
             f"diagonal pressure needs three finite values, got {model!r}")
    return p


@dataclass(frozen=True)
class StaticBall(Source):
    """Uniform ball with T_00 = energy_density and diagonal pressures."""

    energy_density: float
    radius: float
    pressure: str | tuple[float, float, float] = "isotropic"
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    system: str = "geometrized"

    def __post_init__(self):
        _check_common(self)
        _require(math.isfinite(self.energy_density) and self.energy_density >= 0,
                 "energy density must be finite and >= 0")
        _require(math.isfinite(self.radius) and self.radius > 0, "radius must be > 0")
        _pressures(self.pressure, self.energy_density)

    @property
    def support_radius(self) -> float:
        return self.radius

    @property
    def pressures(self) -> tuple[float, float, float]:
        return _pressures(self.pressure, self.energy_density)

    @property
    def mass(self) -> float:
        return 4.0 / 3.0 * math.pi * self.radius ** 3 * self.energy_density

    def inside(self, pos):
        rel = np.asarray(pos) - np.asarray(self.center)
        return (rel ** 2).sum(axis=1) <= self.radius ** 2

    def _amplitude(self) -> np.ndarray:
        amp = np.zeros((4, 4))
        amp[0, 0] = self.energy_density
        amp[1, 1], amp[2, 2], amp[3, 3] = self.pressures
        return amp

    def profile(self, pos):
        pos = np.atleast_2d(pos)
        return self.inside(pos)[:, None, None] * self._amplitude()[None]

    def nodes(self, n_r=32, n_a=32, axis=None):
        return _ball_nodes(self.center, self.radius, n_r, n_a, axis)


@dataclass(frozen=True)
class HarmonicBall(StaticBall):
    """StaticBall whose whole tensor oscillates as cos(omega t + phase)."""

    omega: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        super().__post_init__()
        _require(math.isfinite(self.omega) and math.isfinite(self.phase),
                 "omega and phase must be finite")

    @classmethod
    def with_mass(cls, mass: float, radius: float, omega: float | None = None,
                  hbar: float = 1.0, **kw) -> HarmonicBall:
        """Ball of amplitude mass ``mass``; omega defaults to mass/hbar (c = 1)."""
        if omega is None:
            omega = mass / hbar
        eps = mass / (4.0 / 3.0 * math.pi * radius ** 3)
        return cls(eps, radius, omega=omega, **kw)

    @property
    def static(self) -> bool:
        return self.omega == 0.0

    def time_factor(self, t):
        return math.cos(self.omega * t + self.phase)


@dataclass(frozen=True)
class RotatingBall(Source):
    """Uniform ball in rigid rotation about z."""

    energy_density: float
    radius: float
    angular_speed: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    system: str = "geometrized"

    def __post_init__(self):
        _check_common(self)
        _require(self.energy_density >= 0 and math.isfinite(self.energy_density),
                 "energy density must be finite and >= 0")
        _require(self.radius > 0, "radius must be > 0")
        _require(abs(self.angular_speed) * self.radius <= 1.0,
                 "equatorial speed exceeds c")

    @classmethod
    def with_mass(cls, mass, radius, angular_speed, **kw):
        return cls(mass / (4.0 / 3.0 * math.pi * radius ** 3), radius, angular_speed, **kw)

    @property
    def support_radius(self):
        return self.radius

    def inside(self, pos):
        rel = np.asarray(pos) - np.asarray(self.center)
        return (rel ** 2).sum(axis=1) <= self.radius ** 2

    def profile(self, pos):
        pos = np.atleast_2d(pos)
        rel = pos - np.asarray(self.center)
        dens = np.where(self.inside(pos), self.energy_density, 0.0)
        return _dust_momentum(dens, _rigid_velocity(rel, self.angular_speed))

    def nodes(self, n_r=32, n_a=32, axis=None):
        return _ball_nodes(self.center, self.radius, n_r, n_a, axis)


@dataclass(frozen=True)
class RotatingShell(Source):
    """Thin spherical shell in rigid rotation about z (surface density)."""

    kind = "surface"

    surface_density: float
    radius: float
    angular_speed: float
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    system: str = "geometrized"

    def __post_init__(self):
        _check_common(self)
        _require(self.surface_density >= 0, "surface density must be >= 0")
        _require(self.radius > 0, "radius must be > 0")
        _require(abs(self.angular_speed) * self.radius <= 1.0, "equatorial speed exceeds c")

    @property
    def support_radius(self):
        return self.radius

    def profile(self, pos):
        pos = np.atleast_2d(pos)
        rel = pos - np.asarray(self.center)
        on = np.abs(np.sqrt((rel ** 2).sum(axis=1)) - self.radius) <= ON_SUPPORT_RTOL * self.radius
        dens = np.where(on, self.surface_density, 0.0)
        return _dust_momentum(dens, _rigid_velocity(rel, self.angular_speed))

    def nodes(self, n_r=32, n_a=32, axis=None):
        dirs, wd = sphere_directions(n_a, n_a, axis)
        return Nodes(self.radius * dirs + np.asarray(self.center), self.radius ** 2 * wd)


@dataclass(frozen=True)
class Ring(Source):
    """Circular ring in the z = 0 plane (about ``center``) moving tangentially.

    ``thickness`` = 0 gives an ideal line source. A positive value spreads
    the ring into a tube of that minor radius with the C2 cross-section
    profile (1 - a^2/thickness^2)^3, rotating rigidly with angular speed
    speed/radius.
    """

    kind = "line"

    line_density: float
    radius: float
    speed: float
    thickness: float = 0.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    system: str = "geometrized"

    def __post_init__(self):
        _check_common(self)
        _require(self.line_density >= 0 and math.isfinite(self.line_density),
                 "line density must be finite and >= 0")
        _require(self.radius > 0, "radius must be > 0")
        _require(abs(self.speed) <= 1.0, "tangential speed exceeds c")
        _require(0 <= self.thickness < self.radius,
                 "tube thickness must satisfy 0 <= thickness < radius")
        if self.thickness > 0:
            object.__setattr__(self, "kind", "volume")

    @classmethod
    def with_mass(cls, mass, radius, speed, **kw):
        return cls(mass / (2.0 * math.pi * radius), radius, speed, **kw)

    @property
    def support_radius(self):
        return self.radius + self.thickness

    @property
    def mass(self) -> float:
        return 2.0 * math.pi * self.radius * self.line_density

    def thickened(self, thickness: float) -> Ring:
        return Ring(self.line_density, self.radius, self.speed, thickness, self.center, self.system)

    def bounding_box(self):
        c = np.asarray(self.center)
        half = np.array([self.support_radius, self.support_radius, self.thickness])
        return c - half, c + half

    def profile(self, pos):
        pos = np.atleast_2d(pos)
        rel = pos - np.asarray(self.center)
        rho = np.hypot(rel[:, 0], rel[:, 1])
        omega = self.speed / self.radius
        if self.thickness == 0:
            tol = ON_SUPPORT_RTOL * self.radius
            on = (np.abs(rho - self.radius) <= tol) & (np.abs(rel[:, 2]) <= tol)
            dens = np.where(on, self.line_density, 0.0)
        else:
            u = ((rho - self.radius) ** 2 + rel[:, 2] ** 2) / self.thickness ** 2
            norm = math.pi * self.thickness ** 2 / 4.0
            dens = np.where(u < 1.0, self.line_density * (1.0 - u) ** 3 / norm, 0.0)
        return _dust_momentum(dens, _rigid_velocity(rel, omega))

    def nodes(self, n_r=32, n_a=32, axis=None):
        c = np.asarray(self.center)
        n_phi = 4 * n_a
        phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
        if self.thickness == 0:
            pos = np.stack([self.radius * np.cos(phi), self.radius * np.sin(phi),
                            np.zeros(n_phi)], axis=1) + c
            return Nodes(pos, np.full(n_phi, 2.0 * math.pi * self.radius / n_phi))
        a, wa = gl_interval(n_r, 0.0, self.thickness)
        psi = 2.0 * math.pi * np.arange(n_a) / n_a
        A, PSI, PHI = np.meshgrid(a, psi, phi, indexing="ij")
        rho = self.radius + A * np.cos(PSI)
        pos = np.stack([rho * np.cos(PHI), rho * np.sin(PHI), A * np.sin(PSI)], axis=-1)
        w = (wa[:, None, None] * A * rho) * (2.0 * math.pi / n_a) * (2.0 * math.pi / n_phi)
        return Nodes(pos.reshape(-1, 3) + c, w.ravel())


@dataclass(frozen=True)
class Superposition(Source):
    """Sum of sources; linear operations act part by part."""

    components: tuple[Source, ...] = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple(self.components)
        _require(len(comps) > 0, "superposition needs at least one part")
        systems = {c.system for c in comps}
        _require(len(systems) == 1, f"parts use different unit systems: {sorted(systems)}")
        flat = []
        for c in comps:
            flat.extend(c.parts())
        object.__setattr__(self, "components", tuple(flat))

    @property
    def system(self):
        return self.components[0].system

    @property
    def static(self):
        return all(c.static for c in self.components)

    @property
    def center(self):
        lo, hi = self.bounding_box()
        return tuple(float(v) for v in 0.5 * (lo + hi))

    @property
    def support_radius(self):
        return max(float(np.linalg.norm(np.asarray(c.center) - np.asarray(self.center)))
                   + c.support_radius for c in self.components)

    def bounding_box(self):
        boxes = [c.bounding_box() for c in self.components]
        return (np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0))

    def parts(self):
        return self.components

    def profile(self, pos):
        raise SourceError("a superposition has no single time dependence; use stress()")

    def stress(self, t, pos):
        return sum(c.stress(t, pos) for c in self.components)

    def inside(self, pos):
        masks = [c.inside(pos) for c in self.components]
        if any(m is None for m in masks):
            return None
        return np.logical_or.reduce(masks)

    def nodes(self, n_r=32, n_a=32, axis=None):
        raise SourceError("integrate a superposition part by part")


@dataclass(frozen=True, eq=False)
class GridSource(Source):
    """Piecewise-constant T_{mu nu} on a cell-centered lattice.

    ``values`` has shape (10, nx, ny, nz) in :data:`COMPONENTS` order.
    Queries outside the box return the zero tensor.
    """

    spacing: float
    origin: tuple[float, float, float]
    values: np.ndarray
    system: str = "geometrized"

    def __post_init__(self):
        _require(self.system in SYSTEMS, f"unknown unit system {self.system!r}")
        _require(self.spacing > 0 and math.isfinite(self.spacing), "spacing must be > 0")
        object.__setattr__(self, "origin", _vec3(self.origin))
        vals = np.array(self.values, dtype=float)
        _require(vals.ndim == 4 and vals.shape[0] == 10,
                 f"grid values must have shape (10, nx, ny, nz), got {vals.shape}")
        _require(bool(np.all(np.isfinite(vals))), "grid values must be finite")
        _require(bool(np.all(vals[0] >= 0)), "grid energy density must be >= 0")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(self.values.shape[1:])

    @property
    def center(self):
        lo, hi = self.bounding_box()
        return tuple(0.5 * (lo + hi))

    @property
    def support_radius(self):
        lo, hi = self.bounding_box()
        return float(0.5 * np.linalg.norm(hi - lo))

    def bounding_box(self):
        lo = np.asarray(self.origin)
        return lo, lo + self.spacing * np.asarray(self.shape)

    def cell_centers(self) -> list[np.ndarray]:
        return [self.origin[d] + (np.arange(n) + 0.5) * self.spacing
                for d, n in enumerate(self.shape)]

    def component(self, mu: int, nu: int) -> np.ndarray:
        return self.values[component_key(mu, nu)]

    def full_values(self) -> np.ndarray:
        """(4, 4, nx, ny, nz) lower-index tensor field."""
        out = np.empty((4, 4) + self.shape)
        for (mu, nu), i in COMPONENT_INDEX.items():
            out[mu, nu] = self.values[i]
            out[nu, mu] = self.values[i]
        return out

    def profile(self, pos):
        pos = np.atleast_2d(np.asarray(pos, dtype=float))
        idx = np.floor((pos - np.asarray(self.origin)) / self.spacing).astype(int)
        ok = np.all((idx >= 0) & (idx < np.asarray(self.shape)), axis=1)
        out = np.zeros((len(pos), 4, 4))
        if ok.any():
            i, j, k = idx[ok].T
            vals = self.values[:, i, j, k].T
            sub = np.zeros((len(vals), 4, 4))
            for (mu, nu), c in COMPONENT_INDEX.items():
                sub[:, mu, nu] = vals[:, c]
                sub[:, nu, mu] = vals[:, c]
            out[ok] = sub
        return out

    def nodes(self, n_r=32, n_a=32, axis=None):
        xs, ys, zs = np.meshgrid(*self.cell_centers(), indexing="ij")
        pos = np.stack([xs.ravel(), ys.ravel(), zs.ravel()], axis=1)
        return Nodes(pos, np.full(len(pos), self.spacing ** 3))


# --------------------------------------------------------------------------
# operations


def evaluate(source: Source, t: float, x: Sequence[float]) -> np.ndarray:
    """T_{mu nu}(t, x) as a symmetric 4x4 array."""
    x = np.asarray(x, dtype=float).reshape(3)
    if not (np.all(np.isfinite(x)) and math.isfinite(t)):
        raise SourceError("evaluate() needs finite t and x")
    return source.stress(t, x[None, :])[0]


def measure(source: Source, fn, t: float = 0.0, n_r: int = 48, n_a: int = 48):
    """Sum of ``fn(pos, T)`` times node weights over every part of ``source``."""
    total = None
    for part in source.parts():
        nodes = part.nodes(n_r, n_a)
        T = part.stress(t, nodes.pos)
        contrib = np.tensordot(nodes.weights, fn(nodes.pos, T), axes=(0, 0))
        total = contrib if total is None else total + contrib
    return total


def _box_arrays(box) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = (np.asarray(b, dtype=float).reshape(3) for b in box)
    if np.any(hi <= lo):
        raise SourceError(f"empty box {box!r}")
    return lo, hi


def clipped_fraction(source: Source, box) -> float:
    """Fraction of the energy lying outside ``box``."""
    lo, hi = _box_arrays(box)
    total = outside = 0.0
    for part in source.parts():
        if isinstance(part, GridSource):
            plo, phi = part.bounding_box()
            if np.all(plo >= lo - 1e-12) and np.all(phi <= hi + 1e-12):
                total += float(part.values[0].sum())
                continue
        nodes = part.nodes(24, 24)
        dens = part.stress(0.0, nodes.pos)[:, 0, 0] * nodes.weights
        out = np.any((nodes.pos < lo) | (nodes.pos > hi), axis=1)
        total += abs(float(dens.sum()))
        outside += abs(float(dens[out].sum()))
    return outside / total if total > 0 else 0.0


def default_box(source: Source, margin: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = source.bounding_box()
    return lo - margin, hi + margin


def discretize(source: Source, spacing: float, box=None, t: float = 0.0) -> GridSource:
    """Sample ``source`` on a cell-centered lattice.

    Volume sources are sampled at cell centers (a cell is inside iff its
    center is). Line and surface sources are deposited by assigning each of
    their quadrature nodes to the cell that contains it, which keeps the
    total energy exact.
    """
    _require(spacing > 0 and math.isfinite(spacing), "spacing must be > 0")
    if box is None:
        box = default_box(source, spacing)
    lo, hi = _box_arrays(box)
    frac = clipped_fraction(source, (lo, hi))
    if frac > 1e-12:
        raise SourceError(f"box excludes part of the support: clipped energy fraction {frac:.3e}")
    shape = tuple(int(math.ceil((hi[d] - lo[d]) / spacing - 1e-9)) for d in range(3))
    values = np.zeros((10,) + shape)
    centers = [lo[d] + (np.arange(shape[d]) + 0.5) * spacing for d in range(3)]
    cell = spacing ** 3
    for part in source.parts():
        if part.kind == "volume":
            yy, zz = np.meshgrid(centers[1], centers[2], indexing="ij")
            for i, xc in enumerate(centers[0]):
                pos = np.stack([np.full(yy.size, xc), yy.ravel(), zz.ravel()], axis=1)
                T = part.stress(t, pos)
                for (mu, nu), c in COMPONENT_INDEX.items():
                    values[c, i] += T[:, mu, nu].reshape(shape[1], shape[2])
        else:
            n = max(32, int(math.ceil(8 * math.pi * part.support_radius / spacing)))
            nodes = part.nodes(n, n)
            T = part.stress(t, nodes.pos) * nodes.weights[:, None, None] / cell
            idx = np.floor((nodes.pos - lo) / spacing).astype(int)
            idx = np.clip(idx, 0, np.asarray(shape) - 1)
            for (mu, nu), c in COMPONENT_INDEX.items():
                np.add.at(values[c], (idx[:, 0], idx[:, 1], idx[:, 2]), T[:, mu, nu])
    return GridSource(spacing, tuple(lo), values, source.system)


@dataclass(frozen=True)
class ConservationReport:
    """Residuals of d_mu T^{mu nu} on lattices of decreasing spacing.

    ``interior`` and ``surface`` hold, per spacing, the maximum |residual| for
    nu = 0..3 over stencils that stay on one side of a sharp support boundary
    and over those that straddle it.
    """

    spacings: tuple[float, ...]
    interior: tuple[tuple[float, float, float, float], ...]
    surface: tuple[tuple[float, float, float, float], ...]
    order: tuple[float | None, float | None, float | None, float | None]
    time_term: str
    note: str = ""

    @property
    def max_interior(self) -> tuple[float, float, float, float]:
        return self.interior[-1]

    def as_record(self) -> dict:
        return {
            "spacings": list(self.spacings),
            "interior_residual": [list(r) for r in self.interior],
            "surface_residual": [list(r) for r in self.surface],
            "order": list(self.order),
            "time_term": self.time_term,
            "note": self.note,
        }


_ZERO_FLOOR = 1e-12


def _divergence(upper: np.ndarray, step: float, stride: int) -> np.ndarray:
    """Central-difference d_i T^{i nu} on interior lattice points.

    ``upper`` is (4, 4, nx, ny, nz); returns (4, nx-2s, ny-2s, nz-2s).
    """
    s = stride
    inner = (slice(s, -s),) * 3
    div = np.zeros((4,) + upper[0, 0][inner].shape)
    for i in range(1, 4):
        fwd = [slice(s, -s)] * 3
        bwd = [slice(s, -s)] * 3
        fwd[i - 1] = slice(2 * s, None)
        bwd[i - 1] = slice(None, -2 * s)
        div += (upper[i][(slice(None),) + tuple(fwd)]
                - upper[i][(slice(None),) + tuple(bwd)]) / (2.0 * step)
    return div


def _stencil_uniform(mask: np.ndarray, stride: int) -> np.ndarray:
    s = stride
    core = mask[s:-s, s:-s, s:-s]
    same = np.ones_like(core, dtype=bool)
    for d in range(3):
        for sl in (slice(2 * s, None), slice(None, -2 * s)):
            idx = [slice(s, -s)] * 3
            idx[d] = sl
            same &= mask[tuple(idx)] == core
    return same


def _residual_split(res: np.ndarray, uniform: np.ndarray | None):
    absres = np.abs(res)
    if uniform is None:
        inner = absres.reshape(4, -1).max(axis=1)
        return tuple(float(v) for v in inner), (0.0, 0.0, 0.0, 0.0)
    inner = np.where(uniform[None], absres, 0.0).reshape(4, -1).max(axis=1)
    surf = np.where(~uniform[None], absres, 0.0).reshape(4, -1).max(axis=1)
    return tuple(float(v) for v in inner), tuple(float(v) for v in surf)


def _orders(levels: Sequence[tuple[float, ...]], spacings: Sequence[float], scale: float):
    orders: list[float | None] = []
    for nu in range(4):
        a, b = levels[-2][nu], levels[-1][nu]
        if a <= _ZERO_FLOOR * scale or b <= _ZERO_FLOOR * scale:
            orders.append(None)
        else:
            orders.append(math.log(a / b) / math.log(spacings[-2] / spacings[-1]))
    return tuple(orders)


def _lattice_upper(source: Source, grid: GridSource, t: float) -> np.ndarray:
    xs, ys, zs = np.meshgrid(*grid.cell_centers(), indexing="ij")
    pos = np.stack([xs.ravel(), ys.ravel(), zs.ravel()], axis=1)
    T = raise_index(source.stress(t, pos))
    return np.moveaxis(T, 0, -1).reshape((4, 4) + grid.shape)


def conservation_residual(source: Source, spacing: float, box=None, t: float = 0.0,
                          levels: int = 2) -> ConservationReport:
    """Central-difference residual of d_t T^{0 nu} + d_i T^{i nu}.

    The lattice is refined ``levels - 1`` times by halving ``spacing``. The
    time term is identically zero for static sources and a central
    difference with dt equal to the spacing otherwise. A thin ring is
    checked as a tube of minor radius radius/4.
    """
    _require(spacing > 0, "spacing must be > 0")
    _require(levels >= 2, "need at least two spacings for an order estimate")
    if isinstance(source, GridSource):
        return grid_conservation(source)
    note = ""
    parts = []
    for p in source.parts():
        if isinstance(p, Ring) and p.thickness == 0:
            p = p.thickened(p.radius / 4.0)
            note = "thin ring checked as a tube of minor radius radius/4"
        _require(p.kind == "volume", f"{type(p).__name__} has no volume density to difference")
        parts.append(p)
    src = parts[0] if len(parts) == 1 else Superposition(tuple(parts))
    coarse_margin = 3 * spacing
    if box is None:
        box = default_box(src, coarse_margin)
    lo, hi = _box_arrays(box)
    spacings = tuple(spacing / 2 ** k for k in range(levels))
    interior, surface = [], []
    for h in spacings:
        shape = tuple(int(math.ceil((hi[d] - lo[d]) / h - 1e-9)) for d in range(3))
        grid = GridSource(h, tuple(lo), np.zeros((10,) + shape), src.system)
        upper = _lattice_upper(src, grid, t)
        res = _divergence(upper, h, 1)
        if not src.static:
            dt = h
            later = _lattice_upper(src, grid, t + dt)[0]
            earlier = _lattice_upper(src, grid, t - dt)[0]
            res += ((later - earlier) / (2 * dt))[(slice(None),) + (slice(1, -1),) * 3]
        xs, ys, zs = np.meshgrid(*grid.cell_centers(), indexing="ij")
        pos = np.stack([xs.ravel(), ys.ravel(), zs.ravel()], axis=1)
        mask = src.inside(pos)
        uniform = None if mask is None else _stencil_uniform(mask.reshape(shape), 1)
        inner, surf = _residual_split(res, uniform)
        interior.append(inner)
        surface.append(surf)
    scale = max(abs(float(np.max(np.abs(upper)))), 1e-300) / spacings[-1]
    return ConservationReport(spacings, tuple(interior), tuple(surface),
                              _orders(interior, spacings, scale),
                              "zero (static)" if src.static else "central difference", note)


def grid_conservation(grid: GridSource) -> ConservationReport:
    """Spatial divergence of a static grid at strides 2 and 1 (spacings 2h and h)."""
    upper = grid.full_values()
    upper[0, 1:] *= -1.0
    upper[1:, 0] *= -1.0
    nonzero = np.any(grid.values != 0, axis=0)
    interior, surface, spacings = [], [], []
    for stride in (2, 1):
        if min(grid.shape) <= 2 * stride:
            raise SourceError(f"grid {grid.shape} too small for stride-{stride} differences")
        res = _divergence(upper, stride * grid.spacing, stride)
        uniform = _stencil_uniform(nonzero, stride)
        inner, surf = _residual_split(res, uniform)
        interior.append(inner)
        surface.append(surf)
        spacings.append(stride * grid.spacing)
    scale = max(float(np.max(np.abs(grid.values))), 1e-300) / grid.spacing
    return ConservationReport(tuple(spacings), tuple(interior), tuple(surface),
                              _orders(interior, spacings, scale), "zero (static)",
                              "support boundary taken as the nonzero-cell boundary")


# --------------------------------------------------------------------------
# grid file format

GRID_MAGIC = "# knlab-grid v1"


def write_grid(grid: GridSource, path: str | Path, encoding: str = "csv") -> None:
    """Write ``grid`` in the knlab grid format.

    Header lines are ``key value...``; after the ``data`` line come one
    row per cell in C order over (i, j, k), each row holding the components
    listed in the header. ``csv`` writes comma-separated text rows,
    ``f64le`` writes the same sequence as little-endian float64.
    """
    if encoding not in ("csv", "f64le"):
        raise GridFormatError(f"unknown encoding {encoding!r}")
    header = [
        GRID_MAGIC,
        f"spacing {grid.spacing!r}",
        "origin " + " ".join(repr(v) for v in grid.origin),
        "shape " + " ".join(str(n) for n in grid.shape),
        f"system {grid.system}",
        "components " + " ".join(f"{mu}{nu}" for mu, nu in COMPONENTS),
        f"encoding {encoding}",
        "data",
    ]
    rows = grid.values.reshape(10, -1).T
    path = Path(path)
    if encoding == "csv":
        body = "\n".join(",".join(repr(float(v)) for v in row) for row in rows)
        path.write_text("\n".join(header) + "\n" + body + "\n")
    else:
        with path.open("wb") as fh:
            fh.write(("\n".join(header) + "\n").encode())
            fh.write(rows.astype("<f8").tobytes())


def read_grid(path: str | Path) -> GridSource:
    raw = Path(path).read_bytes()
    lines = []
    pos = 0
    while True:
        end = raw.find(b"\n", pos)
        if end < 0:
            raise GridFormatError(f"{path}: header not terminated by a 'data' line")
        lines.append(raw[pos:end].decode("utf-8", errors="replace").strip())
        pos = end + 1
        if lines[-1] == "data":
            break
    if not lines or lines[0] != GRID_MAGIC:
        raise GridFormatError(f"{path}:1: expected {GRID_MAGIC!r}")
    meta: dict[str, tuple[int, list[str]]] = {}
    for lineno, line in enumerate(lines[1:-1], 2):
        if not line or line.startswith("#"):
            continue
        key, *vals = line.split()
        meta[key] = (lineno, vals)

    def need(key: str) -> tuple[int, list[str]]:
        if key not in meta:
            raise GridFormatError(f"{path}: missing header key {key!r}")
        return meta[key]

    try:
        ln, v = need("spacing")
        spacing = float(v[0])
        ln, v = need("origin")
        origin = tuple(float(a) for a in v)
        if len(origin) != 3:
            raise ValueError(f"origin needs three entries, got {len(origin)}")
        ln, v = need("shape")
        shape = tuple(int(a) for a in v)
        if len(shape) != 3 or min(shape) < 1:
            raise ValueError("shape needs three positive entries")
    except (ValueError, IndexError) as exc:
        raise GridFormatError(f"{path}:{ln}: {exc}") from None
    system = meta.get("system", (0, ["geometrized"]))[1][0]
    ln, comps = need("components")
    try:
        comp_pairs = [(int(c[0]), int(c[1])) for c in comps]
    except (ValueError, IndexError):
        raise GridFormatError(f"{path}:{ln}: bad component list {comps!r}") from None
    if sorted(comp_pairs) != sorted(COMPONENTS) and sorted(comp_pairs) != sorted(
            (m, n) for m in range(4) for n in range(4)):
        raise GridFormatError(f"{path}:{ln}: components must be the 10 upper-triangle or all 16 pairs")
    encoding = meta.get("encoding", (0, ["csv"]))[1][0]
    ncell = shape[0] * shape[1] * shape[2]
    ncomp = len(comp_pairs)
    body = raw[pos:]
    data_line = len(lines)
    if encoding == "csv":
        text_rows = [r for r in body.decode().splitlines()]
        rows = []
        for offset, row in enumerate(text_rows, 1):
            if not row.strip():
                continue
            parts = row.split(",")
            if len(parts) != ncomp:
                raise GridFormatError(
                    f"{path}:{data_line + offset}: expected {ncomp} values, got {len(parts)}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise GridFormatError(f"{path}:{data_line + offset}: non-numeric value") from None
        if len(rows) != ncell:
            raise GridFormatError(f"{path}: expected {ncell} data rows, got {len(rows)}")
        arr = np.array(rows, dtype=float).reshape(ncell, ncomp)
    elif encoding == "f64le":
        if len(body) != 8 * ncell * ncomp:
            raise GridFormatError(f"{path}: expected {8 * ncell * ncomp} data bytes, got {len(body)}")
        arr = np.frombuffer(body, dtype="<f8").astype(float).reshape(ncell, ncomp)
    else:
        raise GridFormatError(f"{path}: unknown encoding {encoding!r}")

    values = np.zeros((10, ncell))
    if ncomp == 16:
        full = {pair: arr[:, i] for i, pair in enumerate(comp_pairs)}
        for mu in range(4):
            for nu in range(mu + 1, 4):
                a, b = full[(mu, nu)], full[(nu, mu)]
                bad = np.nonzero(~np.isclose(a, b, rtol=1e-12, atol=1e-300))[0]
                if bad.size:
                    row = int(bad[0])
                    where = f"{path}:{data_line + 1 + row}" if encoding == "csv" else f"{path}: cell {row}"
                    raise GridFormatError(f"{where}: T_{mu}{nu} != T_{nu}{mu} (asymmetric tensor)")
        for (mu, nu), c in COMPONENT_INDEX.items():
            values[c] = full[(mu, nu)]
    else:
        for i, pair in enumerate(comp_pairs):
            values[COMPONENT_INDEX[pair]] = arr[:, i]
    try:
        return GridSource(spacing, origin, values.reshape((10,) + shape), system)
    except SourceError as exc:
        raise GridFormatError(f"{path}: {exc}") from None
