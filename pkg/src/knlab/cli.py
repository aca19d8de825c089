"""Command-line entry point.

Exit codes: 0 success, 1 a check failed, 2 usage or input error,
3 numerical non-convergence (partial results are still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, is_dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import couplings as cp
from . import fields as fld
from . import functionals as fn
from . import nearfield as nf
from . import sources as src
from .config import ConfigError, RunConfig, load_run_config, load_source
from .units import UnitError, default_registry, load_constants

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


# --------------------------------------------------------------------------
# output helpers


def _registry(cfg: RunConfig):
    return load_constants(cfg.constants) if cfg.constants else default_registry()


def _describe(source) -> dict:
    if isinstance(source, src.GridSource):
        return {"type": "GridSource", "shape": list(source.shape), "spacing": source.spacing,
                "origin": list(source.origin), "system": source.system}
    if is_dataclass(source):
        rec = {"type": type(source).__name__}
        for k, v in asdict(source).items():
            rec[k] = list(v) if isinstance(v, tuple) else v
        return rec
    return {"type": type(source).__name__}


def header(cfg: RunConfig, registry, source=None) -> dict:
    h = {
        "tool": "knlab",
        "version": __version__,
        "constants_version": registry.version,
        "constants_digest": registry.digest,
        "conventions": {
            "signature": fld.FIELD_CONVENTIONS["signature"],
            "field_prefactor": fld.FIELD_CONVENTIONS["field_prefactor"],
            "eta_ij_contraction": fn.CONVENTIONS["spatial_contraction"],
            "potential_calibration": fn.POTENTIAL_CALIBRATION,
        },
        "config": cfg.as_record(),
        "config_digest": cfg.digest(),
    }
    if source is not None:
        h["source"] = _describe(source)
    return h


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _write(cfg: RunConfig, text: str) -> None:
    if cfg.output in ("", "-"):
        sys.stdout.write(text)
    else:
        Path(cfg.output).write_text(text)


def _csv(rows, head, comments: dict | None = None) -> str:
    buf = io.StringIO()
    if comments:
        for k in sorted(comments):
            buf.write(f"# {k}: {json.dumps(comments[k], sort_keys=True, default=_default)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _require_format(cfg: RunConfig, allowed: tuple[str, ...], what: str) -> None:
    if cfg.format not in allowed:
        raise ConfigError(f"format {cfg.format!r} not supported by {what}; "
                          f"use {', '.join(allowed)}")


def _document(cfg, registry, body: dict, source=None) -> str:
    return _json({"header": header(cfg, registry, source), **body})


# --------------------------------------------------------------------------
# source validate


def cmd_source_validate(args, cfg: RunConfig) -> int:
    _require_format(cfg, ("json",), "source validate")
    registry = _registry(cfg)
    source = load_source(args.file)
    out: dict = {"valid": True, "kind": type(source).__name__, "system": source.system,
                 "support_radius": source.support_radius}
    try:
        out["mass"] = fn.mass(source).as_record()
    except fn.FunctionalError as exc:
        out["mass"] = {"error": str(exc)}
    if isinstance(source, src.GridSource):
        out["conservation"] = src.grid_conservation(source).as_record()
    _write(cfg, _document(cfg, registry, {"result": out}, source))
    return EXIT_OK


# --------------------------------------------------------------------------
# field eval


def read_points(path: str) -> list[tuple[float, float, float, float]]:
    """Rows of t x y z, whitespace or comma separated, '#' comments."""
    pts = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) == 3:
            parts = ["0"] + parts
        try:
            vals = tuple(float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: expected numbers, got {raw.strip()!r}") from None
        if len(vals) != 4 or not all(math.isfinite(v) for v in vals):
            raise ConfigError(f"{path}:{lineno}: expected 't x y z' (or 'x y z'), got {raw.strip()!r}")
        pts.append(vals)
    if not pts:
        raise ConfigError(f"{path}: no points")
    return pts


def _safe_eval(source, component, qcfg):
    def one(p):
        try:
            return fld.retarded_h(source, p[0], p[1:], component, qcfg)
        except fld.QuadratureError as exc:
            return exc
    return one


def cmd_field_eval(args, cfg: RunConfig) -> int:
    registry = _registry(cfg)
    source = load_source(cfg.source)
    component = src.parse_component(args.component)
    points = read_points(args.points)
    one = _safe_eval(source, component, cfg.quadrature())
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one, points))
    else:
        results = [one(p) for p in points]
    done, failure = [], None
    for r in results:
        if isinstance(r, Exception):
            failure = r
            break
        done.append(r)

    center = np.asarray(source.center)
    fmt = cfg.format
    h = header(cfg, registry, source)
    if failure is not None:
        h["partial"] = {"completed": len(done), "requested": len(points), "error": str(failure)}
    if fmt in ("json", "jsonl"):
        lines = [json.dumps({"header": h}, sort_keys=True, default=_default)]
        lines += [json.dumps(s.as_record(), sort_keys=True) for s in done]
        text = "\n".join(lines) + "\n"
    elif fmt == "csv":
        rows = [(s.t, *s.x, s.value.value, s.quadrature_error) for s in done]
        text = _csv(rows, ["t", "x", "y", "z", "h" + args.component, "quadrature_error"], h)
    elif fmt == "plot":
        rows = [(float(np.linalg.norm(np.asarray(s.x) - center)), s.value.value) for s in done]
        text = _csv(rows, ["r", "h" + args.component])
    else:
        raise ConfigError(f"format {fmt!r} not supported by field eval")
    _write(cfg, text)
    if failure is not None:
        print(f"knlab: quadrature did not converge at point {len(done) + 1}: {failure}",
              file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# --------------------------------------------------------------------------
# functional


def _radius(args, source) -> float:
    if args.r is not None:
        return args.r
    return 4.0 * source.support_radius


def cmd_functional(args, cfg: RunConfig) -> int:
    _require_format(cfg, ("json",), f"functional {args.which}")
    registry = _registry(cfg)
    source = load_source(cfg.source)
    which = args.which
    result: dict = {"functional": which, "conventions": dict(fn.CONVENTIONS)}
    ok = True
    if which == "mass":
        m = fn.mass(source)
        result["mass"] = m.as_record()
        if m.system != "cgs":
            result["mass_cgs"] = m.to("cgs", registry).as_record()
    elif which == "spin":
        S = fn.spin(source)
        result["spin"] = [s.as_record() for s in S]
        result["spin_cgs"] = [s.to("cgs", registry).as_record() for s in S]
        if cfg.source == "electron":
            chk = fn.electron_checks(registry)
            result["electron"] = chk
            ok = chk["spin_rel_error"] < 1e-6 and chk["mass_rel_error"] < 1e-9
    elif which == "phi":
        p = fn.grav_potential(source, _radius(args, source), cfg=cfg.quadrature())
        result["potential"] = p.as_record()
    elif which == "em":
        r = _radius(args, source)
        A0 = fn.em_potential(source, r, signed=args.signed)
        m = fn.mass(source).value
        result["r"] = r
        result["A0"] = A0.as_record()
        result["A0_r_over_2m2"] = A0.value * r / (2 * m * m) if m else None
        result["conventions"]["spatial_contraction"] = "signed" if args.signed else "magnitude"
    elif which == "charge":
        res = [fn.charge_fraction(source, d, registry) for d in (args.d or (1, 2, 3))]
        result["charge"] = [c.as_record() for c in res]
    _write(cfg, _document(cfg, registry, {"result": result}, source))
    return EXIT_OK if ok else EXIT_CHECK


# --------------------------------------------------------------------------
# nearfield


def _nf_radii(args, source) -> list[float]:
    if args.radii:
        return list(args.radii)
    m = source.mass
    return list(np.linspace(0.5 / m, 2.0 / m, 16))


def _read_samples(path: str) -> list[tuple[float, float]]:
    out = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            if not out and not any(_isnum(p) for p in parts):
                continue  # column header
            raise ConfigError(f"{path}:{lineno}: expected two numbers, got {raw.strip()!r}") from None
        if len(vals) != 2:
            raise ConfigError(f"{path}:{lineno}: expected two columns (r, V), got {len(vals)}")
        out.append((vals[0], vals[1]))
    return out


def _isnum(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _fit_body(fit: nf.CornellFit, m: float | None) -> dict:
    body = {"fit": fit.as_record()}
    if m:
        body["energy_check"] = nf.energy_scale_check(fit, m).as_record()
    return body


def cmd_nearfield(args, cfg: RunConfig) -> int:
    action = args.action
    _require_format(cfg, ("json", "csv", "plot") if action == "expand" else ("json",),
                    f"nearfield {action}")
    registry = _registry(cfg)
    if action == "fit" and args.samples:
        fit = nf.cornell_fit(_read_samples(args.samples), _window(args), args.mass)
        body = _fit_body(fit, args.mass)
        _write(cfg, _document(cfg, registry, {"result": body}))
        ok = body.get("energy_check", {}).get("passed", True)
        return EXIT_OK if ok else EXIT_CHECK

    source = load_source(cfg.source or "harmonic")
    if not isinstance(source, src.HarmonicBall):
        raise ConfigError("nearfield needs a harmonic source (preset 'harmonic' or kind = harmonic)")
    t = args.t
    if action == "expand":
        coeffs = nf.retardation_series(source, t, args.order)
        radii = _nf_radii(args, source)
        if cfg.format in ("csv", "plot"):
            rows = [(r, float(coeffs.value(r))) for r in radii]
            _write(cfg, _csv(rows, ["r", "series"],
                             None if cfg.format == "plot" else header(cfg, registry, source)))
        else:
            body = {"coefficients": coeffs.as_record(),
                    "samples": [[r, float(coeffs.value(r))] for r in radii]}
            _write(cfg, _document(cfg, registry, {"result": body}, source))
        return EXIT_OK

    m = source.mass
    if action == "fit":
        fit = nf.cornell_fit(nf.cornell_samples(source, _nf_radii(args, source), t),
                             _window(args), m)
        body = _fit_body(fit, m)
        _write(cfg, _document(cfg, registry, {"result": body}, source))
        return EXIT_OK if body["energy_check"]["passed"] else EXIT_CHECK

    # check
    body = nearfield_checks(source, cfg.quadrature())
    _write(cfg, _document(cfg, registry, {"result": body}, source))
    return EXIT_OK if all(c["passed"] for c in body["checks"]) else EXIT_CHECK


def _window(args):
    return tuple(args.window) if args.window else None


def nearfield_checks(source: src.HarmonicBall, qcfg: fld.QuadratureConfig) -> dict:
    m, w = source.mass, source.omega
    t = math.pi / 4 / w if w else 0.0
    checks = []
    slope, cmp = nf.convergence_exponent(source, np.geomspace(0.01, 0.1, 5), t, qcfg)
    checks.append({"check": "series vs exact retarded integral, omega r <= 0.1",
                   "value": cmp.max_deviation, "bound": 0.01,
                   "passed": cmp.max_deviation < 0.01})
    checks.append({"check": "convergence exponent", "value": slope, "bound": [2.5, 3.5],
                   "passed": 2.5 <= slope <= 3.5})
    fit = nf.cornell_fit(nf.cornell_samples(source, np.linspace(0.5 / m, 2.0 / m, 16)), mass=m)
    e = nf.energy_scale_check(fit, m)
    for name, v in (("alpha", fit.alpha), ("|beta|/m^2", abs(fit.beta) / m ** 2)):
        checks.append({"check": name, "value": v, "bound": [0.1, 10.0],
                       "passed": 0.1 <= v <= 10.0})
    checks.append({"check": "|V(1/m)|/m", "value": e.ratio, "bound": [0.1, 10.0],
                   "degenerate": e.degenerate, "passed": e.passed})
    return {"t": t, "comparison": cmp.as_record(), "fit": fit.as_record(), "checks": checks}


# --------------------------------------------------------------------------
# couplings


def cmd_couplings(args, cfg: RunConfig) -> int:
    registry = _registry(cfg)
    ledger = cp.ledger_report(registry)
    fmt = cfg.format
    if fmt == "json":
        text = _json({"header": header(cfg, registry), **ledger.as_record()})
    elif fmt == "csv":
        text = cp.format_ledger(ledger, "csv")
    elif fmt == "table":
        text = cp.format_ledger(ledger, "table")
    else:
        raise ConfigError(f"format {fmt!r} not supported by couplings ledger")
    _write(cfg, text)
    return EXIT_OK if ledger.passed else EXIT_CHECK


# --------------------------------------------------------------------------
# report


def _section(title: str, build):
    try:
        checks, data = build()
        status = "pass" if all(c["passed"] for c in checks) else "fail"
        return {"title": title, "status": status, "checks": checks, "data": data}
    except fld.QuadratureError as exc:
        return {"title": title, "status": "error", "checks": [], "data": {}, "error": str(exc)}
    except (ValueError, RuntimeError) as exc:
        return {"title": title, "status": "error", "checks": [], "data": {},
                "error": f"{type(exc).__name__}: {exc}"}


def _check(name, value, target, passed, **kw):
    return {"check": name, "value": value, "target": target, "passed": bool(passed), **kw}


def build_report(registry, qcfg: fld.QuadratureConfig) -> list[dict]:
    def retarded():
        ball = src.StaticBall(1.0, 1.0)
        m = ball.mass
        checks = []
        for k in (2.0, 4.0, 8.0):
            v = fld.retarded_h(ball, 0.0, (0, 0, k), (0, 0), qcfg).value.value
            err = abs(v / (4 * m / k) - 1)
            checks.append(_check(f"h00 at r = {k:g}R vs 4m/r", err, 1e-6, err < 1e-6))
        v = fld.retarded_h(ball, 0.0, (0, 0, 0.5), (0, 0), qcfg).value.value
        exact = 4 * m * (3 - 0.25) / 2
        err = abs(v / exact - 1)
        checks.append(_check("h00 at r = R/2 vs interior closed form", err, 1e-4, err < 1e-4))
        return checks, {}

    def mass_spin():
        chk = fn.electron_checks(registry)
        ring = src.Ring.with_mass(1.0, 2.0, 0.5)
        s = fn.spin_vector(ring)[2]
        rb = src.RotatingBall.with_mass(1.0, 1.0, 0.5)
        sb = fn.spin_vector(rb)[2]
        checks = [
            _check("electron ring |S| vs hbar/2 (relative)", chk["spin_rel_error"], 1e-6,
                   chk["spin_rel_error"] < 1e-6),
            _check("electron ring mass vs m_e (relative)", chk["mass_rel_error"], 1e-9,
                   chk["mass_rel_error"] < 1e-9),
            _check("ring S_z vs m R v", s, 1.0, abs(s - 1.0) < 1e-6),
            _check("rigid ball S_z vs (2/5) m R^2 omega", sb, 0.2, abs(sb / 0.2 - 1) < 1e-6),
        ]
        return checks, {"electron": chk}

    def potential():
        ball = src.StaticBall(1.0, 1.0)
        m = ball.mass
        checks = []
        for k in (2.0, 4.0, 8.0):
            p = fn.grav_potential(ball, k, cfg=qcfg)
            err = abs(p.phi.value / (-m / k) - 1)
            checks.append(_check(f"Phi at r = {k:g}R vs -m/r", err, 1e-6, err < 1e-6))
        pair = src.Superposition((src.StaticBall(1.0, 0.25, center=(0, 0, 1.0)),
                                  src.StaticBall(1.0, 0.25, center=(0, 0, -1.0))))
        R = pair.support_radius
        coeffs = [fn.grav_potential(pair, k * R, cfg=qcfg).remainder_coefficient
                  for k in (4.0, 8.0, 16.0)]
        spread = (max(coeffs) - min(coeffs)) / np.mean(coeffs)
        checks.append(_check("quadrupole remainder |Phi + m/r| r^3 spread over [4R, 16R]",
                             spread, 0.1, spread < 0.1))
        return checks, {"remainder_coefficients": coeffs,
                        "calibration": fn.POTENTIAL_CALIBRATION}

    def charge():
        ball = src.StaticBall(1.0, 1.0)
        m = ball.mass
        checks = []
        for d in (1, 2):
            f = fn.charge_fraction(ball, d, registry).fraction
            checks.append(_check(f"charge fraction d = {d}", f, d / 3, abs(f - d / 3) < 1e-12))
        r = 3.0
        q = fn.em_potential(ball, r).value * r / (2 * m * m)
        checks.append(_check("A0 r/(2 m^2)", q, 1.0, abs(q - 1) < 1e-6))
        return checks, {}

    def nearfield():
        body = nearfield_checks(nf.default_harmonic(), qcfg)
        checks = [_check(c["check"], c["value"], c["bound"], c["passed"]) for c in body["checks"]]
        return checks, {"fit": body["fit"]}

    def couplings():
        ledger = cp.ledger_report(registry)
        checks = []
        for e in ledger.entries:
            if e.error:
                checks.append(_check(e.id, None, e.target_log10, False, error=e.error))
            for s in e.subs:
                if not s.informational:
                    checks.append(_check(f"{e.id} {s.label}", s.discrepancy,
                                         f"|d| <= {s.tolerance:g} {s.kind}", s.passed))
        return checks, {"summary": ledger.summary()}

    return [
        _section("retarded field of a uniform ball", retarded),
        _section("mass and spin functionals", mass_spin),
        _section("gravitational potential extraction", potential),
        _section("electromagnetic potential and charge fractions", charge),
        _section("near-field expansion and Cornell fit", nearfield),
        _section("coupling relations ledger", couplings),
    ]


def cmd_report(args, cfg: RunConfig) -> int:
    registry = _registry(cfg)
    sections = build_report(registry, cfg.quadrature())
    if cfg.format == "csv":
        rows = []
        for s in sections:
            if s["status"] == "error":
                rows.append([s["title"], "", "", "", "error"])
            for c in s["checks"]:
                rows.append([s["title"], c["check"], c["value"], c["target"],
                             "pass" if c["passed"] else "fail"])
        text = _csv(rows, ["section", "check", "value", "target", "status"],
                    header(cfg, registry))
    elif cfg.format == "json":
        text = _json({"header": header(cfg, registry), "sections": sections,
                      "passed": all(s["status"] == "pass" for s in sections)})
    else:
        raise ConfigError(f"format {cfg.format!r} not supported by report")
    _write(cfg, text)
    if any(s["status"] == "error" and "Quadrature" in s.get("error", "") for s in sections):
        return EXIT_NUMERIC
    return EXIT_OK if all(s["status"] == "pass" for s in sections) else EXIT_CHECK


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config file ([run], [quadrature] sections)")
    common.add_argument("--constants", help="constants file overriding the bundled registry")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "jsonl", "csv", "table", "plot"))
    common.add_argument("--workers", type=int)

    p = argparse.ArgumentParser(prog="knlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"knlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("source", help="source files").add_subparsers(dest="action", required=True)
    v = s.add_parser("validate", parents=[common], help="parse and summarize a source")
    v.add_argument("file")
    v.set_defaults(func=cmd_source_validate)

    f = sub.add_parser("field", help="retarded field").add_subparsers(dest="action", required=True)
    e = f.add_parser("eval", parents=[common], help="evaluate h_mn at points")
    e.add_argument("--source", help="preset name, config file or grid file")
    e.add_argument("--points", required=True, help="file of 't x y z' rows")
    e.add_argument("--component", default="00")
    e.set_defaults(func=cmd_field_eval)

    fu = sub.add_parser("functional", parents=[common], help="integral functionals")
    fu.add_argument("which", choices=("mass", "spin", "phi", "em", "charge"))
    g = fu.add_mutually_exclusive_group()
    g.add_argument("--source", help="preset name, config file or grid file")
    g.add_argument("--preset", choices=("electron", "harmonic", "ball"))
    fu.add_argument("--r", type=float, help="field radius for phi and em (default 4R)")
    fu.add_argument("--d", type=int, action="append", choices=(1, 2, 3),
                    help="retained dimensions for charge (repeatable)")
    fu.add_argument("--signed", action="store_true", help="signed eta^ij contraction for em")
    fu.set_defaults(func=cmd_functional)

    n = sub.add_parser("nearfield", parents=[common], help="retardation series and Cornell fit")
    n.add_argument("action", choices=("expand", "fit", "check"))
    g = n.add_mutually_exclusive_group()
    g.add_argument("--source", help="harmonic source: preset or config file")
    g.add_argument("--preset", choices=("harmonic",))
    n.add_argument("--samples", help="two-column CSV of (r, V) for fit")
    n.add_argument("--t", type=float, default=0.0)
    n.add_argument("--order", type=int, default=2)
    n.add_argument("--radii", type=float, nargs="+")
    n.add_argument("--window", type=float, nargs=2, metavar=("RMIN", "RMAX"))
    n.add_argument("--mass", type=float, help="normalization mass for --samples fits")
    n.set_defaults(func=cmd_nearfield)

    c = sub.add_parser("couplings", help="coupling relations").add_subparsers(
        dest="action", required=True)
    le = c.add_parser("ledger", parents=[common], help="evaluate the relation ledger")
    le.set_defaults(func=cmd_couplings)

    r = sub.add_parser("report", parents=[common], help="run every check into one document")
    r.set_defaults(func=cmd_report)
    return p


_DEFAULT_FORMAT = {"couplings": "table"}


def resolve_config(args) -> RunConfig:
    cfg = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    action = getattr(args, "action", None) or getattr(args, "which", None)
    kw = {"subcommand": " ".join(x for x in (args.command, action) if x)}
    source = getattr(args, "preset", None) or getattr(args, "source", None)
    if source:
        kw["source"] = source
    if args.constants:
        kw["constants"] = args.constants
    if args.out:
        kw["output"] = args.out
    if args.format:
        kw["format"] = args.format
    elif not (args.config and cfg.format != "json"):
        kw["format"] = _DEFAULT_FORMAT.get(args.command, "json")
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        kw["workers"] = args.workers
    return replace(cfg, **kw)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command in ("field", "functional") and not cfg.source:
            raise ConfigError("--source (or --preset) is required")
        return args.func(args, cfg)
    except (ConfigError, src.SourceError, UnitError, fn.FunctionalError,
            nf.NearfieldError) as exc:
        print(f"knlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except fld.QuadratureError as exc:
        print(f"knlab: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"knlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
