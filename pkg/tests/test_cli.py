import json

import pytest

from knlab import cli
from knlab.config import (
    ConfigError, RunConfig, load_source, parse_config, run_config_from_text)
from knlab.sources import StaticBall, discretize, write_grid


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_config_reports_lines():
    with pytest.raises(ConfigError, match=r"c.cfg:3: expected 'key = value'"):
        parse_config("[run]\nformat = json\nbogus line\n", "c.cfg")
    with pytest.raises(ConfigError, match=r":1: key outside"):
        parse_config("a = 1\n", "c.cfg")
    with pytest.raises(ConfigError, match=r":2: unknown section"):
        parse_config("\n[weird]\n", "c.cfg")


def test_run_config_round_trip():
    cfg = RunConfig(subcommand="field eval", source="ball", workers=3, tolerance=1e-9,
                    extra=(("t", "0.5"),))
    again = run_config_from_text(cfg.to_text())
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_digest_ignores_workers_and_output():
    a = RunConfig(source="ball", workers=1, output="a")
    b = RunConfig(source="ball", workers=8, output="b")
    assert a.digest() == b.digest()
    assert a.as_record() == b.as_record()


def test_run_config_validation():
    with pytest.raises(ConfigError, match=r":2: \[quadrature\] tolerance"):
        run_config_from_text("[quadrature]\ntolerance = -1\n", "q.cfg")
    with pytest.raises(ConfigError, match="unknown key"):
        run_config_from_text("[quadrature]\nnodes = 3\n", "q.cfg")


def test_load_source_variants(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text("[source]\nkind = ring\nmass = 1\nradius = 2\nspeed = 0.5\n")
    ring = load_source(str(p))
    assert ring.mass == pytest.approx(1.0)
    g = tmp_path / "b.grid"
    write_grid(discretize(StaticBall(1.0, 1.0), 0.5), g)
    assert load_source(str(g)).spacing == 0.5
    with pytest.raises(ConfigError, match="neither a preset"):
        load_source("nonexistent-thing")


def test_source_validate_ok(tmp_path, capsys):
    p = tmp_path / "s.cfg"
    p.write_text("[source]\nkind = ball\nradius = 1\nenergy_density = 2\n")
    code, out, _ = run(["source", "validate", str(p)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["kind"] == "StaticBall"
    assert doc["header"]["constants_digest"]


def test_source_validate_malformed(tmp_path, capsys):
    p = tmp_path / "s.cfg"
    p.write_text("[source]\nkind = ball\nradius = one\n")
    code, _, err = run(["source", "validate", str(p)], capsys)
    assert code == 2
    assert "s.cfg:3" in err


def test_source_validate_grid(tmp_path, capsys):
    g = tmp_path / "b.grid"
    write_grid(discretize(StaticBall(1.0, 1.0), 0.25), g)
    code, out, _ = run(["source", "validate", str(g)], capsys)
    assert code == 0
    assert "conservation" in json.loads(out)["result"]


def test_field_eval_outputs(tmp_path, capsys):
    pts = tmp_path / "p.txt"
    pts.write_text("# t x y z\n0 0 0 2\n0 0 0 4\n")
    out = tmp_path / "o.jsonl"
    code, _, _ = run(["field", "eval", "--source", "ball", "--points", str(pts),
                      "--out", str(out)], capsys)
    assert code == 0
    lines = [json.loads(line) for line in out.read_text().splitlines()]
    assert "header" in lines[0]
    assert lines[1]["value"] == pytest.approx(4 * StaticBall(1.0, 1.0).mass / 2, rel=1e-10)
    code, text, _ = run(["field", "eval", "--source", "ball", "--points", str(pts),
                         "--format", "plot"], capsys)
    assert text.splitlines()[0] == "r,h00"
    assert len(text.splitlines()) == 3


def test_field_eval_deterministic_across_workers(tmp_path, capsys):
    pts = tmp_path / "p.txt"
    pts.write_text("\n".join(f"0 0.1 0.2 {k}" for k in (0.3, 1.5, 2, 3, 6)) + "\n")
    outs = []
    for w in ("1", "4", "4"):
        o = tmp_path / f"o{len(outs)}.jsonl"
        assert run(["field", "eval", "--source", "ball", "--points", str(pts), "--workers", w,
                    "--out", str(o)], capsys)[0] == 0
        outs.append(o.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_field_eval_partial_results_on_nonconvergence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[quadrature]\nradial_nodes = 4\nangular_nodes = 4\n"
                   "tolerance = 1e-30\nmax_refine = 1\n")
    src = tmp_path / "s.cfg"
    src.write_text("[source]\nkind = ring\nmass = 1\nradius = 1\nspeed = 0.5\n")
    pts = tmp_path / "p.txt"
    pts.write_text("0 1.2 0 0.1\n")
    out = tmp_path / "o.jsonl"
    code, _, err = run(["field", "eval", "--config", str(cfg), "--source", str(src),
                        "--points", str(pts), "--out", str(out)], capsys)
    assert code == 3
    head = json.loads(out.read_text().splitlines()[0])["header"]
    assert head["partial"]["completed"] == 0


def test_functional_spin_electron(capsys):
    code, out, _ = run(["functional", "spin", "--preset", "electron"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["result"]["electron"]["spin_rel_error"] < 1e-6
    assert doc["result"]["spin_cgs"][2]["unit"] == "g*cm^2*s^-1"
    assert doc["header"]["conventions"]["potential_calibration"] == -0.5


@pytest.mark.parametrize("which", ["mass", "phi", "em", "charge"])
def test_functional_other(which, capsys):
    code, out, _ = run(["functional", which, "--preset", "ball"], capsys)
    assert code == 0
    assert json.loads(out)["result"]["functional"] == which


def test_functional_needs_source(capsys):
    code, _, err = run(["functional", "mass"], capsys)
    assert code == 2 and "--source" in err


@pytest.mark.parametrize("args", [
    ["functional", "spin", "--preset", "electron", "--format", "table"],
    ["nearfield", "fit", "--format", "csv"],
    ["nearfield", "check", "--format", "table"],
])
def test_unsupported_format_is_usage_error(args, capsys):
    code, out, err = run(args, capsys)
    assert code == 2 and out == ""
    assert "not supported" in err


def test_nearfield_commands(tmp_path, capsys):
    code, out, _ = run(["nearfield", "expand", "--format", "csv"], capsys)
    assert code == 0 and "r,series" in out
    code, out, _ = run(["nearfield", "fit"], capsys)
    assert code == 0
    assert json.loads(out)["result"]["fit"]["alpha"] == pytest.approx(4.0, rel=1e-6)
    code, out, _ = run(["nearfield", "check"], capsys)
    assert code == 0
    samples = tmp_path / "v.csv"
    samples.write_text("r,V\n" + "".join(f"{r},{-1 / r + 4 * r}\n" for r in (0.5, 1, 1.5, 2)))
    code, out, _ = run(["nearfield", "fit", "--samples", str(samples)], capsys)
    assert code == 0
    assert json.loads(out)["result"]["fit"]["residual"] < 1e-10


def test_couplings_ledger_exit_code_reflects_failures(capsys):
    code, out, _ = run(["couplings", "ledger"], capsys)
    # R2(b) misses its band with registry constants, so the ledger gate is 1
    assert code == 1
    assert len([line for line in out.splitlines() if line[:2] in ("R1", "R2", "R3", "R4", "R5")]) >= 5


def test_couplings_ledger_json_byte_identical(capsys):
    a = run(["couplings", "ledger", "--format", "json"], capsys)[1]
    b = run(["couplings", "ledger", "--format", "json"], capsys)[1]
    assert a == b
    assert json.loads(a)["summary"]["total"] == 5


def test_constants_override_changes_digest(tmp_path, capsys):
    from importlib import resources
    text = resources.files("knlab.data").joinpath("constants.txt").read_text()
    p = tmp_path / "c.txt"
    p.write_text(text.replace("6.67430e-8", "6.7e-8"))
    base = json.loads(run(["couplings", "ledger", "--format", "json"], capsys)[1])
    new = json.loads(run(["couplings", "ledger", "--format", "json", "--constants", str(p)],
                         capsys)[1])
    assert base["constants_digest"] != new["constants_digest"]


def test_report(capsys):
    code, out, _ = run(["report", "--format", "json"], capsys)
    doc = json.loads(out)
    titles = [s["title"] for s in doc["sections"]]
    assert len(titles) == 6
    statuses = {s["title"]: s["status"] for s in doc["sections"]}
    assert statuses["coupling relations ledger"] == "fail"
    assert all(v == "pass" for k, v in statuses.items() if k != "coupling relations ledger")
    assert code == 1
    code, out, _ = run(["report", "--format", "csv"], capsys)
    assert "section,check,value,target,status" in out
