"""Retarded linearized field h_{mu nu}, the metric g = eta + h, and the gauge
potential A_mu = hbar d_mu log sqrt|det g|.

h_{mu nu}(t, x) = 4 * integral T_{mu nu}(t - |x - x'|, x') / |x - x'| d^3x'
in units with G = c = 1. The prefactor 4 is kept as written; every sample
records that convention.

Ball-shaped sources are integrated in spherical coordinates centered on the
field point, where the s^2 of the volume element cancels the 1/|x - x'|
singularity; exterior points only need the cone of rays that hits the ball.
Other families use their own source-centered rules with the polar axis
pointing at the field point.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .sources import (
    COMPONENTS, ETA, GridSource, Nodes, RotatingShell, Source, SourceError, StaticBall,
    RotatingBall, frame, gl_interval, sphere_directions)
from .units import DIMENSIONLESS, DimQuantity

FIELD_CONVENTIONS = {
    "signature": "+---",
    "field_prefactor": 4,
    "units": "G=c=1",
}


class QuadratureError(RuntimeError):
    """Refinement budget exhausted; carries the best estimate."""

    def __init__(self, msg: str, best: np.ndarray, achieved: float):
        super().__init__(msg)
        self.best = best
        self.achieved = achieved


class GaugeSingularityError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureConfig:
    radial_nodes: int = 24
    angular_nodes: int = 24
    tolerance: float = 1e-10
    max_refine: int = 3
    grid_near: int = 2

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.radial_nodes < 2 or self.angular_nodes < 2:
            raise ValueError("node counts must be >= 2")
        if self.max_refine < 0:
            raise ValueError("max_refine must be >= 0")

    def level(self, k: int) -> tuple[int, int]:
        return self.radial_nodes * 2 ** k, self.angular_nodes * 2 ** k


@dataclass(frozen=True)
class FieldSample:
    t: float
    x: tuple[float, float, float]
    component: tuple[int, int]
    value: DimQuantity
    quadrature_error: float
    node_count: int

    def as_record(self) -> dict:
        mu, nu = self.component
        return {
            "t": self.t,
            "x": list(self.x),
            "component": f"{mu}{nu}",
            "value": self.value.value,
            "unit": str(self.value.dims),
            "system": self.value.system,
            "quadrature_error": self.quadrature_error,
            "node_count": self.node_count,
            "conventions": FIELD_CONVENTIONS,
        }


# --------------------------------------------------------------------------
# quadrature rules around a field point


def _is_ball(part: Source) -> bool:
    return isinstance(part, (StaticBall, RotatingBall))


def _interior_ball_nodes(part: Source, x: np.ndarray, n_r: int, n_a: int) -> Nodes:
    """Field-point-centered rule over a ball that contains ``x``."""
    d = x - np.asarray(part.center)
    dist = float(np.linalg.norm(d))
    axis = d if dist > 0 else None
    dirs, wd = sphere_directions(n_a, n_a, axis)
    b = dirs @ d
    s_max = -b + np.sqrt(np.maximum(b * b - (dist * dist - part.radius ** 2), 0.0))
    s, ws = gl_interval(n_r, np.zeros_like(s_max), s_max)
    pos = x[None, None, :] + s[:, :, None] * dirs[:, None, :]
    w = wd[:, None] * ws * s * s
    return Nodes(pos.reshape(-1, 3), w.ravel())


def _exterior_ball_nodes(part: Source, x: np.ndarray, n_r: int, n_a: int) -> Nodes:
    """Field-point-centered rule over the cone of rays that hit the ball.

    Rays are labelled by psi with impact parameter R sin(psi); the chord
    through the ball then has half-length R cos(psi), so the integrand stays
    smooth up to the cone's edge.
    """
    axis = np.asarray(part.center) - x
    d = float(np.linalg.norm(axis))
    R = part.radius
    psi, wpsi = gl_interval(n_a, 0.0, 0.5 * math.pi)
    sin_t = R * np.sin(psi) / d
    mu = np.sqrt(1.0 - sin_t ** 2)
    dmu = (R / d) ** 2 * np.sin(psi) * np.cos(psi) / mu
    phi = 2.0 * math.pi * np.arange(n_a) / n_a
    local = np.stack([
        np.outer(sin_t, np.cos(phi)).ravel(),
        np.outer(sin_t, np.sin(phi)).ravel(),
        np.repeat(mu, n_a),
    ], axis=1)
    dirs = local @ frame(axis)
    wd = np.repeat(wpsi * dmu, n_a) * (2.0 * math.pi / n_a)
    half = np.repeat(R * np.cos(psi), n_a)
    mid = np.repeat(d * mu, n_a)
    s, ws = gl_interval(n_r, mid - half, mid + half)
    pos = x[None, None, :] + s[:, :, None] * dirs[:, None, :]
    w = wd[:, None] * ws * s * s
    return Nodes(pos.reshape(-1, 3), w.ravel())


def field_nodes(part: Source, x: np.ndarray, n_r: int, n_a: int) -> Nodes:
    rel = x - np.asarray(part.center)
    dist = float(np.linalg.norm(rel))
    if _is_ball(part):
        if dist < part.radius:
            return _interior_ball_nodes(part, x, n_r, n_a)
        if dist < 2.0 * part.radius:
            return _exterior_ball_nodes(part, x, n_r, n_a)
        # farther out the integrand is smooth over the ball, and the cone
        # rule would place nodes by differencing large coordinates
        return part.nodes(n_r, n_a, axis=rel)
    if isinstance(part, RotatingShell) and abs(dist - part.radius) <= 1e-12 * part.radius:
        raise SourceError("field point lies on the shell (singular set)")
    return part.nodes(n_r, n_a, axis=rel if dist > 0 else None)


def _component_columns(T: np.ndarray, comps: Sequence[tuple[int, int]]) -> np.ndarray:
    return np.stack([T[:, mu, nu] for mu, nu in comps], axis=1)


def _integrate(source: Source, t: float, x: np.ndarray, comps, n_r: int, n_a: int,
               near: int) -> tuple[np.ndarray, int]:
    """4 * retarded integral at a fixed node count; returns (values, node count)."""
    total = np.zeros(len(comps))
    count = 0
    for part in source.parts():
        if isinstance(part, GridSource):
            idx = [COMPONENTS.index(c) for c in comps]
            total += 4.0 * kernels.grid_sum(x, part.origin, part.spacing, part.values[idx], near)
            count += part.values[0].size
            continue
        nodes = field_nodes(part, x, n_r, n_a)
        wv = _component_columns(part.profile(nodes.pos), comps) * nodes.weights[:, None]
        total += 4.0 * kernels.retarded_sum(x, nodes.pos, wv, part.omega, t, part.phase,
                                            part.static)
        count += len(nodes)
    return total, count


def _adaptive(source: Source, t: float, x: np.ndarray, comps, cfg: QuadratureConfig):
    """Double node counts until successive estimates agree to cfg.tolerance."""
    if all(isinstance(p, GridSource) for p in source.parts()):
        fine, count = _integrate(source, t, x, comps, 0, 0, cfg.grid_near)
        coarse, _ = _integrate(source, t, x, comps, 0, 0, max(cfg.grid_near // 2, 0))
        return fine, np.abs(fine - coarse), count, 0
    prev, _ = _integrate(source, t, x, comps, *cfg.level(0), cfg.grid_near)
    for k in range(1, cfg.max_refine + 1):
        cur, count = _integrate(source, t, x, comps, *cfg.level(k), cfg.grid_near)
        err = np.abs(cur - prev)
        scale = np.maximum(np.abs(cur), np.max(np.abs(cur)))
        if np.all(err <= cfg.tolerance * scale):
            return cur, err, count, k
        prev = cur
    raise QuadratureError(
        f"retarded integral at x={tuple(x)} did not reach tolerance {cfg.tolerance:g} "
        f"after {cfg.max_refine} refinements",
        cur, float(np.max(err / np.maximum(np.abs(cur), 1e-300))))


def _as_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(3)
    if not np.all(np.isfinite(x)):
        raise SourceError("field point must be finite")
    return x


def retarded_h(source: Source, t: float, x, component=(0, 0),
               cfg: QuadratureConfig | None = None) -> FieldSample:
    """One component of h_{mu nu} at (t, x) with an a-posteriori error estimate."""
    cfg = cfg or QuadratureConfig()
    mu, nu = component
    comp = (min(mu, nu), max(mu, nu))
    x = _as_point(x)
    vals, err, count, _ = _adaptive(source, t, x, [comp], cfg)
    return FieldSample(float(t), tuple(float(v) for v in x), comp,
                       DimQuantity(vals[0], DIMENSIONLESS, source.system),
                       float(err[0]), count)


def retarded_h_all(source: Source, t: float, x, cfg: QuadratureConfig | None = None,
                   level: int | None = None):
    """All ten independent components; returns (4x4 h, 4x4 error, level used)."""
    cfg = cfg or QuadratureConfig()
    x = _as_point(x)
    if level is None:
        vals, err, _, level = _adaptive(source, t, x, list(COMPONENTS), cfg)
    else:
        vals, _ = _integrate(source, t, x, list(COMPONENTS), *cfg.level(level), cfg.grid_near)
        err = np.zeros_like(vals)
    h = np.zeros((4, 4))
    e = np.zeros((4, 4))
    for (mu, nu), v, dv in zip(COMPONENTS, vals, err):
        h[mu, nu] = h[nu, mu] = v
        e[mu, nu] = e[nu, mu] = dv
    return h, e, level


def metric(source: Source, t: float, x, cfg: QuadratureConfig | None = None):
    """g_{mu nu} = eta_{mu nu} + h_{mu nu}; returns (g, quadrature error)."""
    h, err, _ = retarded_h_all(source, t, x, cfg)
    return ETA + h, err


def inverse_metric_first_order(h: np.ndarray) -> np.ndarray:
    """g^{mu nu} = eta^{mu nu} - h^{mu nu} to first order in h."""
    return ETA - ETA @ h @ ETA


# --------------------------------------------------------------------------
# gauge potential

WEAK_FIELD_LIMIT = 0.5


@dataclass(frozen=True)
class GaugePotential:
    value: np.ndarray          # A_mu, mu = 0..3
    error: np.ndarray          # step-halving estimate per component
    step: float
    system: str

    def as_record(self) -> dict:
        return {"A": self.value.tolist(), "error": self.error.tolist(), "step": self.step,
                "system": self.system, "conventions": FIELD_CONVENTIONS | {
                    "index_placement": "covariant gradient d/dx^mu"}}


def _det(source, t, x, cfg, level) -> float:
    h, _, _ = retarded_h_all(source, t, x, cfg, level)
    if np.max(np.abs(h)) >= WEAK_FIELD_LIMIT:
        raise GaugeSingularityError(
            f"|h| = {np.max(np.abs(h)):.3g} >= {WEAK_FIELD_LIMIT} at x={tuple(x)}: "
            "outside the weak-field regime")
    return np.linalg.det(ETA + h)


def _central_gradient(source, t, x, step, cfg, level) -> np.ndarray:
    grad = np.zeros(4)
    dets = []
    for mu in range(4):
        if mu == 0 and source.static:
            continue
        plus, minus = np.array([t, *x]), np.array([t, *x])
        plus[mu] += step
        minus[mu] -= step
        dp = _det(source, plus[0], plus[1:], cfg, level)
        dm = _det(source, minus[0], minus[1:], cfg, level)
        dets += [dp, dm]
        grad[mu] = 0.5 * (math.log(abs(dp)) - math.log(abs(dm))) / (2.0 * step)
    if dets and (min(dets) <= 0 < max(dets) or 0.0 in dets):
        raise GaugeSingularityError("det g changes sign or vanishes on the stencil")
    return grad


def gauge_potential(source: Source, t: float, x, step: float | None = None,
                    cfg: QuadratureConfig | None = None, hbar: float = 1.0) -> GaugePotential:
    """hbar * d_mu log sqrt|det g| by central differences.

    ``step`` defaults to 1e-3 of the source's support radius. The error
    estimate compares the steps h and h/2. For static sources the time
    component is exactly zero.
    """
    cfg = cfg or QuadratureConfig()
    x = _as_point(x)
    if step is None:
        step = 1e-3 * source.support_radius
    if not step > 0:
        raise ValueError("step must be > 0")
    # settle the node count once so every stencil point uses the same rule
    _, _, level = retarded_h_all(source, t, x, cfg)
    coarse = _central_gradient(source, t, x, step, cfg, level)
    fine = _central_gradient(source, t, x, 0.5 * step, cfg, level)
    return GaugePotential(hbar * coarse, hbar * np.abs(coarse - fine) * 4.0 / 3.0, step,
                          source.system)


# --------------------------------------------------------------------------
# many points


def evaluate_points(source: Source, points: Sequence[Sequence[float]], component=(0, 0),
                    cfg: QuadratureConfig | None = None, workers: int = 1) -> list[FieldSample]:
    """retarded_h over rows of (t, x, y, z); output order follows input order."""
    cfg = cfg or QuadratureConfig()
    pts = [tuple(float(v) for v in p) for p in points]

    def one(p):
        return retarded_h(source, p[0], p[1:], component, cfg)

    if workers <= 1:
        return [one(p) for p in pts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, pts))
