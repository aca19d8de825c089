"""Inner loops of the field quadratures.

Every kernel exists twice: a loop version compiled with numba and a
vectorized numpy version. Both sum in a fixed order, so each backend is
deterministic on its own; the two agree to rounding.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

BACKENDS = ("numba", "numpy")
_backend = "numba" if USE_NUMBA else "numpy"


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


# --------------------------------------------------------------------------
# retarded sum:  sum_k wv[k] * cos(omega (t - s_k) + phase) / s_k,  s_k = |x - pos_k|


@njit
def _retarded_sum_nb(x, pos, wv, omega, t, phase, static):
    n, ncomp = wv.shape
    out = np.zeros(ncomp)
    for k in range(n):
        dx = x[0] - pos[k, 0]
        dy = x[1] - pos[k, 1]
        dz = x[2] - pos[k, 2]
        s = math.sqrt(dx * dx + dy * dy + dz * dz)
        if s == 0.0:
            continue
        if static:
            f = 1.0 / s
        else:
            f = math.cos(omega * (t - s) + phase) / s
        for c in range(ncomp):
            out[c] += wv[k, c] * f
    return out


def _retarded_sum_np(x, pos, wv, omega, t, phase, static):
    s = np.sqrt(((x[None, :] - pos) ** 2).sum(axis=1))
    with np.errstate(divide="ignore"):
        f = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    if not static:
        f = f * np.cos(omega * (t - s) + phase)
    return f @ wv


def retarded_sum(x, pos, wv, omega=0.0, t=0.0, phase=0.0, static=True, backend=None):
    """Weighted sum of a (possibly time-retarded) 1/|x - x'| kernel.

    ``wv`` has shape (N, C): node weight times the C requested tensor
    components. Nodes that coincide with ``x`` are skipped; the quadrature
    rules in :mod:`knlab.fields` never place one there.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    wv = np.ascontiguousarray(wv, dtype=np.float64)
    if (backend or _backend) == "numba":
        return _retarded_sum_nb(x, pos, wv, float(omega), float(t), float(phase), bool(static))
    return _retarded_sum_np(x, pos, wv, omega, t, phase, static)


# --------------------------------------------------------------------------
# distance moments:  sum_k wv[k] * s_k**power


@njit
def _moment_sum_nb(x, pos, wv, power):
    n, ncomp = wv.shape
    out = np.zeros(ncomp)
    for k in range(n):
        dx = x[0] - pos[k, 0]
        dy = x[1] - pos[k, 1]
        dz = x[2] - pos[k, 2]
        s2 = dx * dx + dy * dy + dz * dz
        if power == 1.0:
            f = math.sqrt(s2)
        elif power == 2.0:
            f = s2
        else:
            f = math.sqrt(s2) ** power
        for c in range(ncomp):
            out[c] += wv[k, c] * f
    return out


def _moment_sum_np(x, pos, wv, power):
    s = np.sqrt(((x[None, :] - pos) ** 2).sum(axis=1))
    return (s ** power) @ wv


def moment_sum(x, pos, wv, power, backend=None):
    x = np.ascontiguousarray(x, dtype=np.float64)
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    wv = np.ascontiguousarray(wv, dtype=np.float64)
    if (backend or _backend) == "numba":
        return _moment_sum_nb(x, pos, wv, float(power))
    return _moment_sum_np(x, pos, wv, float(power))


# --------------------------------------------------------------------------
# uniform rectangular prism:  integral of 1/|x'| over [x1,x2]x[y1,y2]x[z1,z2]


@njit
def _log_plus_r(a, r, rest2):
    # log(a + r) without cancellation when a < 0 and rest2 = r^2 - a^2 is small
    if a >= 0.0:
        return math.log(a + r)
    return math.log(rest2 / (r - a))


@njit
def _prism_antiderivative(x, y, z):
    x2 = x * x
    y2 = y * y
    z2 = z * z
    r = math.sqrt(x2 + y2 + z2)
    if r == 0.0:
        return 0.0
    out = 0.0
    if x != 0.0 and y != 0.0:
        out += x * y * _log_plus_r(z, r, x2 + y2)
    if y != 0.0 and z != 0.0:
        out += y * z * _log_plus_r(x, r, y2 + z2)
    if z != 0.0 and x != 0.0:
        out += z * x * _log_plus_r(y, r, z2 + x2)
    if x != 0.0:
        out -= 0.5 * x2 * math.atan(y * z / (x * r))
    if y != 0.0:
        out -= 0.5 * y2 * math.atan(z * x / (y * r))
    if z != 0.0:
        out -= 0.5 * z2 * math.atan(x * y / (z * r))
    return out


@njit
def prism_integral(x1, x2, y1, y2, z1, z2):
    """Integral of 1/r over the box, with the field point at the origin."""
    total = 0.0
    xs = (x1, x2)
    ys = (y1, y2)
    zs = (z1, z2)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                sign = 1.0 if (i + j + k) % 2 == 1 else -1.0
                total += sign * _prism_antiderivative(xs[i], ys[j], zs[k])
    return total


@njit
def _grid_sum_nb(x, lo, h, values, near):
    ncomp, nx, ny, nz = values.shape
    out = np.zeros(ncomp)
    cell = h * h * h
    # index of the cell nearest to x, may lie outside the grid
    ix = int(math.floor((x[0] - lo[0]) / h))
    iy = int(math.floor((x[1] - lo[1]) / h))
    iz = int(math.floor((x[2] - lo[2]) / h))
    for i in range(nx):
        cx = lo[0] + (i + 0.5) * h
        for j in range(ny):
            cy = lo[1] + (j + 0.5) * h
            for k in range(nz):
                cz = lo[2] + (k + 0.5) * h
                if abs(i - ix) <= near and abs(j - iy) <= near and abs(k - iz) <= near:
                    x1 = cx - 0.5 * h - x[0]
                    y1 = cy - 0.5 * h - x[1]
                    z1 = cz - 0.5 * h - x[2]
                    f = prism_integral(x1, x1 + h, y1, y1 + h, z1, z1 + h)
                else:
                    dx = x[0] - cx
                    dy = x[1] - cy
                    dz = x[2] - cz
                    f = cell / math.sqrt(dx * dx + dy * dy + dz * dz)
                for c in range(ncomp):
                    v = values[c, i, j, k]
                    if v != 0.0:
                        out[c] += v * f
    return out


def _log_plus_r_np(a, r, rest2):
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = np.log(np.where(a >= 0, a + r, 1.0))
        neg = np.log(np.where(a < 0, rest2 / np.where(a < 0, r - a, 1.0), 1.0))
    return np.where(a >= 0, pos, neg)


def _prism_antiderivative_np(x, y, z):
    x2, y2, z2 = x * x, y * y, z * z
    r = np.sqrt(x2 + y2 + z2)
    safe_r = np.where(r > 0, r, 1.0)
    out = np.zeros_like(r)
    for a, b, c, a2, b2, c2 in ((x, y, z, x2, y2, z2), (y, z, x, y2, z2, x2),
                                (z, x, y, z2, x2, y2)):
        # a*b*log(c + r) and -a^2/2 * atan(b c / (a r))
        keep = (a != 0) & (b != 0)
        out += np.where(keep, a * b * _log_plus_r_np(c, safe_r, a2 + b2), 0.0)
        nz = a != 0
        with np.errstate(divide="ignore", invalid="ignore"):
            out -= np.where(nz, 0.5 * a2 * np.arctan(b * c / np.where(nz, a, 1.0) / safe_r), 0.0)
    return np.where(r > 0, out, 0.0)


def prism_integral_np(x1, x2, y1, y2, z1, z2):
    """Vectorized :func:`prism_integral`."""
    total = 0.0
    for i, xs in enumerate((x1, x2)):
        for j, ys in enumerate((y1, y2)):
            for k, zs in enumerate((z1, z2)):
                sign = 1.0 if (i + j + k) % 2 == 1 else -1.0
                total = total + sign * _prism_antiderivative_np(
                    np.asarray(xs, float), np.asarray(ys, float), np.asarray(zs, float))
    return total


def _grid_sum_np(x, lo, h, values, near):
    ncomp, nx, ny, nz = values.shape
    idx = [np.arange(n) for n in (nx, ny, nz)]
    centers = [lo[d] + (idx[d] + 0.5) * h for d in range(3)]
    cx, cy, cz = np.meshgrid(*centers, indexing="ij")
    dist = np.sqrt((x[0] - cx) ** 2 + (x[1] - cy) ** 2 + (x[2] - cz) ** 2)
    home = np.floor((x - lo) / h).astype(int)
    ii, jj, kk = np.meshgrid(*idx, indexing="ij")
    near_mask = ((np.abs(ii - home[0]) <= near) & (np.abs(jj - home[1]) <= near)
                 & (np.abs(kk - home[2]) <= near))
    f = h ** 3 / np.where(near_mask, 1.0, dist)
    x1 = cx[near_mask] - 0.5 * h - x[0]
    y1 = cy[near_mask] - 0.5 * h - x[1]
    z1 = cz[near_mask] - 0.5 * h - x[2]
    f[near_mask] = prism_integral_np(x1, x1 + h, y1, y1 + h, z1, z1 + h)
    return values.reshape(ncomp, -1) @ f.ravel()


def grid_sum(x, lo, h, values, near=2, backend=None):
    """Integral of piecewise-constant cell values against 1/|x - x'|.

    Cells within ``near`` cells of ``x`` (Chebyshev distance in index space)
    are integrated exactly as uniform prisms; the rest use the midpoint rule.
    ``values`` has shape (C, nx, ny, nz).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    lo = np.ascontiguousarray(lo, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    if (backend or _backend) == "numba":
        return _grid_sum_nb(x, lo, float(h), values, int(near))
    return _grid_sum_np(x, lo, float(h), values, int(near))
