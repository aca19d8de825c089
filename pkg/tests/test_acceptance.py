"""Acceptance gate: one test and one summary line per criterion."""

import json
import math

import numpy as np

from knlab import cli
from knlab import couplings as C
from knlab import fields as F
from knlab import functionals as FN
from knlab import nearfield as N
from knlab import sources as S
from knlab.units import DimQuantity, DimVec, default_registry

REG = default_registry()


def fmt(x):
    return f"{x:.3g}" if isinstance(x, float) else str(x)


def test_criterion_1_shell_theorem(acceptance):
    ball = S.StaticBall(1.0, 1.0)
    m, R = ball.mass, ball.radius
    checks = []
    for k in (2, 4, 8):
        v = F.retarded_h(ball, 0.0, (0, 0, k * R)).value.value
        err = abs(v / (4 * m / (k * R)) - 1)
        checks.append((f"ext {k}R", err < 1e-6, fmt(err)))
    for r in (0.0, 0.5, 0.9):
        v = F.retarded_h(ball, 0.0, (r, 0, 0)).value.value
        err = abs(v / (4 * m * (3 * R * R - r * r) / (2 * R ** 3)) - 1)
        checks.append((f"int {r}R", err < 1e-4, fmt(err)))
    assert acceptance(1, "shell theorem", checks)


def test_criterion_2_spin(acceptance):
    m, R, v, w = 1.3, 0.7, 0.6, 0.9
    s_ring = FN.spin_vector(S.Ring.with_mass(m, R, v))[2]
    s_ball = FN.spin_vector(S.RotatingBall.with_mass(m, R, w))[2]
    e_ring = abs(s_ring / (m * R * v) - 1)
    e_ball = abs(s_ball / (0.4 * m * R * R * w) - 1)
    static = [FN.spin_vector(src) for src in
              (S.StaticBall(1.0, 1.0), S.HarmonicBall(1.0, 1.0, omega=1.0),
               S.Ring.with_mass(1.0, 1.0, 0.0), S.RotatingBall(1.0, 1.0, 0.0))]
    checks = [("ring", e_ring < 1e-6, fmt(e_ring)), ("rigid ball", e_ball < 1e-6, fmt(e_ball)),
              ("static zero", all(not s.any() for s in static), "exact")]
    assert acceptance(2, "spin oracles", checks)


def test_criterion_3_electron_preset(acceptance):
    chk = FN.electron_checks(REG)
    checks = [("spin vs hbar/2", chk["spin_rel_error"] < 1e-6, fmt(chk["spin_rel_error"])),
              ("mass vs m_e", chk["mass_rel_error"] < 1e-9, fmt(chk["mass_rel_error"]))]
    assert acceptance(3, "electron preset", checks)


def test_criterion_4_potential(acceptance):
    ball = S.StaticBall(1.0, 1.0)
    m = ball.mass
    checks = []
    for r in (2.0, 4.0, 8.0):
        err = abs(FN.grav_potential(ball, r).phi.value / (-m / r) - 1)
        checks.append((f"Phi at {r:g}R", err < 1e-6, fmt(err)))
    pair = S.Superposition((S.StaticBall(1.0, 0.25, center=(0, 0, 1.0)),
                            S.StaticBall(1.0, 0.25, center=(0, 0, -1.0))))
    R = pair.support_radius
    coeffs = [FN.grav_potential(pair, k * R).remainder_coefficient
              for k in np.geomspace(4, 16, 5)]
    spread = (max(coeffs) - min(coeffs)) / np.mean(coeffs)
    checks.append(("quadrupole remainder spread", spread < 0.1, fmt(spread)))
    assert acceptance(4, "potential extraction", checks)


def test_criterion_5_charge(acceptance):
    ball = S.StaticBall(1.0, 1.0)
    m = ball.mass
    f1 = FN.charge_fraction(ball, 1).fraction
    f2 = FN.charge_fraction(ball, 2).fraction
    r = 3.0
    q = FN.em_potential(ball, r).value * r / (2 * m * m)
    checks = [("d=1", abs(f1 - 1 / 3) < 1e-12, fmt(abs(f1 - 1 / 3))),
              ("d=2", abs(f2 - 2 / 3) < 1e-12, fmt(abs(f2 - 2 / 3))),
              ("A0 r/(2m^2)-1", abs(q - 1) < 1e-6, fmt(abs(q - 1)))]
    assert acceptance(5, "charge fractions and e^2 ~ m^2", checks)


def test_criterion_6_nearfield_series(acceptance):
    b = N.default_harmonic(1.0)
    t = math.pi / 4 / b.omega
    slope, cmp = N.convergence_exponent(b, np.geomspace(0.01, 0.1, 5), t)
    checks = [("max deviation, omega r <= 0.1", cmp.max_deviation < 0.01, fmt(cmp.max_deviation)),
              ("exponent", 2.5 <= slope <= 3.5, fmt(slope))]
    assert acceptance(6, "near-field series vs exact quadrature", checks)


def test_criterion_7_cornell(acceptance):
    r = np.linspace(0.5, 2.0, 10)
    exact = N.cornell_fit(np.column_stack([r, -1 / r + 4 * r]))
    m = 1.0
    b = N.default_harmonic(m)
    fit = N.cornell_fit(N.cornell_samples(b, np.linspace(0.5 / m, 2 / m, 16)), mass=m)
    e = N.energy_scale_check(fit, m)
    checks = [("in-model residual", exact.residual < 1e-10, fmt(exact.residual)),
              ("alpha", 0.1 <= fit.alpha <= 10, fmt(fit.alpha)),
              ("|beta|/m^2", 0.1 <= abs(fit.beta) / m ** 2 <= 10, fmt(abs(fit.beta) / m ** 2)),
              ("|V(1/m)|/m", e.passed, fmt(e.ratio))]
    assert acceptance(7, "Cornell fit", checks)


def test_criterion_8_couplings(acceptance):
    led = C.ledger_report(REG)
    e = {x.id: x for x in led.entries}
    d = lambda i, k: e[i].subs[k].discrepancy  # noqa: E731
    checks = [
        ("R1", abs(d("R1", 0)) <= 1.0, fmt(d("R1", 0))),
        ("R2(a)", abs(d("R2", 0)) < 1e-12, fmt(d("R2", 0))),
        ("R2(b)", abs(d("R2", 1)) <= 2.5, fmt(d("R2", 1))),
        ("R3", abs(d("R3", 0)) <= 0.5, fmt(d("R3", 0))),
        ("R4", abs(d("R4", 0)) <= 0.01, fmt(d("R4", 0))),
        ("R5 paper inputs", d("R5", 0) == 0.0, fmt(d("R5", 0))),
        ("R5 registry m_p", abs(d("R5", 1)) <= 1.0, fmt(d("R5", 1))),
    ]
    assert acceptance(8, "couplings ledger", checks)


def test_criterion_9_properties(acceptance, tmp_path, capsys):
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(200):
        dims = DimVec(*(int(k) for k in rng.integers(-2, 3, 4)))
        q = DimQuantity(float(10 ** rng.uniform(-10, 10)), dims)
        for a in ("natural", "geometrized"):
            for b in ("cgs", "natural", "geometrized"):
                back = q.to(a, REG).to(b, REG).to("cgs", REG)
                worst = max(worst, abs(back.value / q.value - 1))

    a = S.StaticBall(1.0, 0.5, center=(1, 0, 0))
    b = S.HarmonicBall(0.5, 0.4, omega=0.8, center=(-1, 0.5, 0))
    x = (0.2, 1.7, -0.4)
    cfg = F.QuadratureConfig()
    hs, _, _ = F.retarded_h_all(S.Superposition((a, b)), 0.3, x, cfg)
    ha, _, _ = F.retarded_h_all(a, 0.3, x, cfg)
    hb, _, _ = F.retarded_h_all(b, 0.3, x, cfg)
    lin = float(np.max(np.abs(hs - ha - hb)) / np.max(np.abs(hs)))

    pts = tmp_path / "p.txt"
    pts.write_text("\n".join(f"0.1 0.2 -0.1 {k}" for k in (0.4, 1.0, 2.0, 5.0)) + "\n")
    outs = []
    for w in ("1", "1", "3"):
        o = tmp_path / f"o{len(outs)}.jsonl"
        cli.main(["field", "eval", "--source", "harmonic", "--points", str(pts),
                  "--workers", w, "--out", str(o)])
        outs.append(o.read_bytes())
    led = [cli.main(["couplings", "ledger", "--format", "json"]) for _ in range(2)]
    texts = capsys.readouterr().out
    half = len(texts) // 2
    ledger_same = texts[:half] == texts[half:] and json.loads(texts[:half])
    checks = [("round trip", worst < 1e-12, fmt(worst)),
              ("linearity", lin < 2 * cfg.tolerance, fmt(lin)),
              ("field eval bytes across runs/workers", outs[0] == outs[1] == outs[2], "identical"
               if outs[0] == outs[1] == outs[2] else "differ"),
              ("ledger bytes across runs", bool(ledger_same) and led[0] == led[1], "identical")]
    assert acceptance(9, "property suite", checks)
