import json
import math

import pytest

from knlab import couplings as C
from knlab.units import default_registry

REG = default_registry()


def test_r1_planck_unification():
    e = C.eval_planck_unification(REG)
    assert C.planck_mass_scale(REG).value == pytest.approx(1.859e-6, rel=1e-3)
    assert e.evaluated_log10_discrepancy == pytest.approx(-0.7307, abs=1e-4)
    assert e.passed


def test_r1_sensitivity_to_G():
    a = C.eval_planck_unification(REG).evaluated_log10_discrepancy
    b = C.eval_planck_unification(REG.with_overrides(G=100 * REG.value("G")))
    assert b.evaluated_log10_discrepancy - a == pytest.approx(-1.0, abs=1e-12)


def test_r2_definition_is_exactly_40():
    e = C.eval_ratio_1e40(REG)
    assert abs(e.subs[0].discrepancy) < 1e-12


def test_r2_physical_proton_mass_value():
    # e^2/(G m_p^2) with registry values is 1.24e36
    sub = C.eval_ratio_1e40(REG).subs[1]
    assert sub.lhs.value == pytest.approx(1.236e36, rel=1e-3)
    assert sub.discrepancy == pytest.approx(-3.908, abs=1e-3)


def test_r2_doubling_proton_mass():
    a = C.eval_ratio_1e40(REG).subs[1].discrepancy
    b = C.eval_ratio_1e40(REG.with_overrides(m_p=2 * REG.value("m_p"))).subs[1].discrepancy
    assert a - b == pytest.approx(2 * math.log10(2), abs=1e-12)


def test_r3_quark_mass():
    e = C.eval_quark_mass(REG)
    assert e.lhs.value / REG.value("m_e") == pytest.approx(1370.36, rel=1e-5)
    assert e.passed


def test_r4_pion_mass():
    e = C.eval_pion_mass(REG)
    assert e.lhs.value / REG.value("m_e") == pytest.approx(274.07, rel=1e-5)
    vs_paper, vs_pion, no_two = e.subs
    assert abs(vs_paper.discrepancy) < 0.01 and vs_paper.passed
    assert vs_pion.discrepancy == pytest.approx(0.0034, abs=1e-4) and vs_pion.passed
    assert no_two.informational and not no_two.passed
    assert e.passed


def test_r5_weak_coupling():
    e = C.eval_weak_coupling(REG)
    assert C.UNITS_UNCLEAR in e.flags
    assert e.subs[0].discrepancy == 0.0
    assert e.subs[1].lhs.value == pytest.approx(3.574e42, rel=1e-3)
    assert e.subs[1].discrepancy == pytest.approx(-0.447, abs=1e-3)
    assert e.passed


def test_cgs_and_natural_agree():
    for e in C.ledger_report(REG).entries:
        for s in e.subs:
            assert abs(s.discrepancy - s.natural_discrepancy) < 1e-10


def test_zero_charge_errors_gracefully():
    ledger = C.ledger_report(REG.with_overrides(e=0.0))
    r1 = ledger.entries[0]
    assert r1.error and not r1.passed
    assert "R1" in ledger.summary()["errors"]
    C.format_ledger(ledger, "table")
    json.loads(C.format_ledger(ledger, "json"))


def test_ledger_is_deterministic():
    a = C.format_ledger(C.ledger_report(REG), "json")
    b = C.format_ledger(C.ledger_report(REG), "json")
    assert a == b
    assert C.format_ledger(C.ledger_report(REG), "csv").startswith("id,check")


def test_ledger_has_five_entries():
    ledger = C.ledger_report(REG)
    assert [e.id for e in ledger.entries] == ["R1", "R2", "R3", "R4", "R5"]
