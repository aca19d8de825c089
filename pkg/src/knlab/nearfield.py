"""Near-field expansion of the retarded field and the Cornell-type fit.

For a source oscillating as M(t) = M0 cos(omega t + phase), expanding
T(t - s) to second order in s = |x - x'| gives

    h(t, r) ~ a_{-1}/r + a_0 + a_1 r
    a_{-1} = 4 M(t),  a_0 = -4 M'(t),  a_1 = 2 M''(t)

outside the support. Dropping the constant a_0 and multiplying by -1/m
leaves a potential of the form -alpha/r + beta r.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import fields
from .sources import HarmonicBall, Source, SourceError, parse_component

SERIES_REGIME = 0.3
DEFAULT_WINDOW = (0.5, 2.0)
DEGENERATE_RTOL = 1e-9


class NearfieldError(ValueError):
    pass


@dataclass(frozen=True)
class ExpansionCoeffs:
    """Coefficients of a_{-1}/r + a_0 + a_1 r.

    ``finite_size`` is the extra 1/r term that the second-order expansion
    picks up from the extent of a uniform ball: 2 M'' <|x - x'|> exceeds
    2 M'' r by (2/5) R^2 M''/r outside the ball. It vanishes for static
    sources and for R -> 0.
    """

    a_minus1: float
    a_0: float
    a_1: float
    t: float
    order: int
    finite_size: float = 0.0

    def value(self, r):
        r = np.asarray(r, dtype=float)
        out = (self.a_minus1 + self.finite_size) / r
        if self.order >= 1:
            out = out + self.a_0
        if self.order >= 2:
            out = out + self.a_1 * r
        return out

    def as_record(self) -> dict:
        return {"a_minus1": self.a_minus1, "a_0": self.a_0, "a_1": self.a_1,
                "finite_size": self.finite_size, "t": self.t, "order": self.order}


def _harmonic(source: Source) -> HarmonicBall:
    if not isinstance(source, HarmonicBall):
        raise NearfieldError(
            f"near-field expansion needs a HarmonicBall, got {type(source).__name__}")
    return source


def _amplitude(source: HarmonicBall, component) -> float:
    """Volume integral of the chosen component at phase zero."""
    mu, nu = parse_component(component) if isinstance(component, str) else component
    return float(source._amplitude()[mu, nu]) * 4.0 / 3.0 * math.pi * source.radius ** 3


def retardation_series(source: Source, t: float = 0.0, order: int = 2,
                       component=(0, 0)) -> ExpansionCoeffs:
    """Second-order retardation expansion, with derivatives taken analytically."""
    ball = _harmonic(source)
    if order not in (0, 1, 2):
        raise NearfieldError(f"expansion order {order} unsupported (max 2)")
    M0 = _amplitude(ball, component)
    w, ph = ball.omega, ball.phase
    arg = w * t + ph
    M = M0 * math.cos(arg)
    dM = -w * M0 * math.sin(arg)
    ddM = -w * w * M0 * math.cos(arg)
    a0 = -4.0 * dM if order >= 1 else 0.0
    a1 = 2.0 * ddM if order >= 2 else 0.0
    fs = 0.4 * ball.radius ** 2 * ddM if order >= 2 else 0.0
    if ball.static:
        a0 = a1 = fs = 0.0
    return ExpansionCoeffs(4.0 * M, a0, a1, float(t), order, fs)


def series_value(coeffs: ExpansionCoeffs, r):
    return coeffs.value(r)


@dataclass(frozen=True)
class SeriesComparison:
    radii: tuple[float, ...]
    series: tuple[float, ...]
    direct: tuple[float, ...]
    deviations: tuple[float, ...]
    in_regime: bool

    @property
    def max_deviation(self) -> float:
        return max(self.deviations)

    def as_record(self) -> dict:
        return {"radii": list(self.radii), "series": list(self.series),
                "direct": list(self.direct), "deviations": list(self.deviations),
                "max_deviation": self.max_deviation, "in_regime": self.in_regime}


def series_vs_direct(source: Source, radii, t: float = 0.0,
                     cfg: fields.QuadratureConfig | None = None, component=(0, 0),
                     direction=(0.0, 0.0, 1.0)) -> SeriesComparison:
    """Relative deviation of the truncated series from the exact retarded integral."""
    ball = _harmonic(source)
    radii = [float(r) for r in radii]
    if any(r <= ball.radius for r in radii):
        raise NearfieldError("radii must lie outside the source")
    in_regime = all(abs(ball.omega) * r <= SERIES_REGIME for r in radii)
    if not in_regime:
        warnings.warn(f"omega*r exceeds {SERIES_REGIME}; series outside its regime",
                      RuntimeWarning, stacklevel=2)
    coeffs = retardation_series(ball, t, 2, component)
    u = np.asarray(direction, float)
    u = u / np.linalg.norm(u)
    series, direct, dev = [], [], []
    for r in radii:
        x = np.asarray(ball.center) + r * u
        exact = fields.retarded_h(ball, t, x, component, cfg).value.value
        approx = float(coeffs.value(r))
        series.append(approx)
        direct.append(exact)
        dev.append(abs(approx - exact) / abs(exact) if exact != 0 else abs(approx - exact))
    return SeriesComparison(tuple(radii), tuple(series), tuple(direct), tuple(dev), in_regime)


def convergence_exponent(source: Source, omega_r, t: float = 0.0,
                         cfg: fields.QuadratureConfig | None = None) -> tuple[float, SeriesComparison]:
    """Log-log slope of the series deviation against omega*r."""
    ball = _harmonic(source)
    if ball.omega == 0:
        raise NearfieldError("convergence exponent undefined for a static source")
    radii = [x / abs(ball.omega) for x in omega_r]
    cmp = series_vs_direct(ball, radii, t, cfg)
    slope = np.polyfit(np.log(np.asarray(omega_r, float)), np.log(cmp.deviations), 1)[0]
    return float(slope), cmp


# --------------------------------------------------------------------------
# Cornell fit


@dataclass(frozen=True)
class CornellFit:
    alpha: float
    beta: float
    residual: float
    window: tuple[float, float]
    mass: float | None
    n_samples: int

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return -self.alpha / r + self.beta * r

    def as_record(self) -> dict:
        rec = {"alpha": self.alpha, "beta": self.beta, "residual": self.residual,
               "window": list(self.window), "mass": self.mass, "n_samples": self.n_samples}
        if self.mass:
            rec["beta_over_m2"] = self.beta / self.mass ** 2
        return rec


def cornell_samples(source: Source, radii, t: float = 0.0,
                    normalize: bool = True) -> list[tuple[float, float]]:
    """(r, V) pairs from the series with the r-independent term removed.

    With ``normalize`` the series is multiplied by -1/m, m being the source
    amplitude mass, which turns the 4m/r term into an attractive -alpha/r.
    """
    ball = _harmonic(source)
    c = retardation_series(ball, t, 2)
    scale = -1.0 / ball.mass if normalize else 1.0
    out = []
    for r in radii:
        r = float(r)
        out.append((r, scale * (float(c.value(r)) - c.a_0)))
    return out


def cornell_fit(samples, window: tuple[float, float] | None = None,
                mass: float | None = None) -> CornellFit:
    """Least squares of V on {1/r, r}; alpha is minus the 1/r coefficient.

    ``window`` restricts the samples; when it is omitted and ``mass`` is
    given, the default window [0.5, 2]/m is used.
    """
    data = np.asarray(samples, dtype=float).reshape(-1, 2)
    if window is None and mass:
        window = (DEFAULT_WINDOW[0] / mass, DEFAULT_WINDOW[1] / mass)
    if window is not None:
        lo, hi = window
        data = data[(data[:, 0] >= lo) & (data[:, 0] <= hi)]
    else:
        window = (float(data[:, 0].min()), float(data[:, 0].max())) if len(data) else (0.0, 0.0)
    r, V = data[:, 0], data[:, 1]
    if len(r) < 3:
        raise NearfieldError(f"need at least 3 samples in the fit window, got {len(r)}")
    if not np.all(np.isfinite(data)) or np.any(r <= 0):
        raise NearfieldError("sample radii must be positive and values finite")
    if len(np.unique(r)) < len(r):
        raise NearfieldError("sample radii must be distinct")
    A = np.column_stack([1.0 / r, r])
    # column scaling keeps the solve well conditioned across length scales
    norms = np.linalg.norm(A, axis=0)
    coef, _, rank, _ = np.linalg.lstsq(A / norms, V, rcond=None)
    if rank < 2:
        raise NearfieldError("degenerate design matrix")
    coef = coef / norms
    resid = V - A @ coef
    rms = float(math.sqrt(np.mean(resid ** 2)))
    return CornellFit(float(-coef[0]), float(coef[1]), rms,
                      (float(window[0]), float(window[1])), mass, int(len(r)))


@dataclass(frozen=True)
class EnergyCheck:
    energy: float
    ratio: float
    degenerate: bool
    passed: bool

    def as_record(self) -> dict:
        return {"energy": self.energy, "ratio": self.ratio,
                "degenerate": self.degenerate, "passed": self.passed}


def energy_scale_check(fit: CornellFit, m: float, bounds=(0.1, 10.0)) -> EnergyCheck:
    """|V(1/m)|/m with V = -alpha/r + beta r; a near-exact cancellation is flagged."""
    if not m > 0:
        raise NearfieldError("mass must be positive")
    a, b = -fit.alpha * m, fit.beta / m
    V = a + b
    ratio = abs(V) / m
    degenerate = abs(V) <= DEGENERATE_RTOL * (abs(a) + abs(b))
    passed = (not degenerate) and bounds[0] <= ratio <= bounds[1]
    return EnergyCheck(float(V), float(ratio), bool(degenerate), bool(passed))


def default_harmonic(mass: float = 1.0, radius_fraction: float = 1e-3,
                     omega: float | None = None) -> HarmonicBall:
    """Natural-units ball of mass m and radius 1e-3/m oscillating at omega = m."""
    if mass <= 0:
        raise SourceError("mass must be positive")
    return HarmonicBall.with_mass(mass, radius_fraction / mass, omega, system="natural")


__all__ = [
    "CornellFit", "EnergyCheck", "ExpansionCoeffs", "NearfieldError", "SeriesComparison",
    "convergence_exponent", "cornell_fit", "cornell_samples", "default_harmonic",
    "energy_scale_check", "retardation_series", "series_value", "series_vs_direct",
]
