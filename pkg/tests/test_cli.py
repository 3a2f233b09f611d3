import json
import re

import numpy as np
import pytest

import qbounds.validate
from qbounds.cli import main, parse_sweep, ConfigError
from qbounds.report import read_csv


def write_model(tmp_path, obj, name="model.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


QUBIT = {"type": "qubit", "E": 10, "prior": {"sigma": 0.1}}


def run_csv(argv, tmp_path, name="out.csv"):
    out = tmp_path / name
    assert main(argv + ["--out", str(out)]) == 0
    return read_csv(out.read_text())


def test_figure1_rows(tmp_path):
    config, cols, rows = run_csv(["figure1", "--E", "0,1,10,100", "--normalized"], tmp_path)
    assert cols == ["E", "mmse", "qwwb", "qzzb", "qcrb", "qwwb_h", "qwwb_s"]
    assert config["sigma"] == "0.1" and config["normalized"] == "True"
    table = {r[0]: dict(zip(cols, r)) for r in rows}
    for name in ("mmse", "qwwb", "qzzb", "qcrb"):
        assert table[0.0][name] == pytest.approx(1.0, abs=1e-4)
    assert table[10.0]["mmse"] == pytest.approx(0.63212, abs=1e-5)
    for r in table.values():
        assert r["mmse"] >= max(r["qwwb"], r["qzzb"], r["qcrb"]) - 1e-7


def test_figure1_is_deterministic(tmp_path):
    argv = ["figure1", "--E", "1,7,30", "--sigma", "0.2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_full_precision_output(tmp_path):
    out = tmp_path / "f.csv"
    main(["figure1", "--E", "3", "--out", str(out)])
    data = [l for l in out.read_text().splitlines() if not l.startswith("#")][1]
    mmse = data.split(",")[1]
    assert float(mmse) == float(format(float(mmse), ".17g"))
    assert len(re.sub(r"[^0-9]", "", mmse.split("e")[0]).lstrip("0")) >= 15


def test_figure2_and_fidelity_inset(tmp_path):
    config, cols, rows = run_csv(["figure2", "--nu", "1,2,100"], tmp_path, "fig2.csv")
    assert [r[0] for r in rows] == [1, 2, 100]
    qwwb = [r[cols.index("qwwb")] for r in rows]
    assert qwwb == sorted(qwwb, reverse=True)
    fid = (tmp_path / "fig2_fidelity.csv").read_text()
    _, fcols, frows = read_csv(fid)
    assert fcols == ["h", "nu=1", "nu=2", "nu=5", "nu=10", "nu=100"]
    assert frows[0][1:] == [1.0] * 5


def test_bound_examples(tmp_path):
    model = write_model(tmp_path, QUBIT)
    _, cols, rows = run_csv(["bound", "--model", model, "--method", "mmse"], tmp_path)
    assert rows[0][0] == pytest.approx(0.0063212, abs=5e-8)
    _, cols, rows = run_csv(["bound", "--model", model, "--method", "qcrb"], tmp_path)
    assert rows[0][0] == pytest.approx(0.005, rel=1e-12)
    _, cols, rows = run_csv(["bound", "--model", model, "--method", "qwwb", "--h", "0.2"], tmp_path)
    analytic = rows[0][cols.index("qwwb")]
    _, cols, rows = run_csv(["bound", "--model", model, "--method", "generic-ww", "--h", "0.2"], tmp_path)
    assert rows[0][cols.index("generic_ww")] == pytest.approx(analytic, rel=1e-4)


def test_bound_sweep(tmp_path):
    model = write_model(tmp_path, QUBIT)
    _, cols, rows = run_csv(["bound", "--model", model, "--method", "qwwb", "--sweep", "h=0.05:0.5:4"], tmp_path)
    assert cols[0] == "h" and len(rows) == 4
    _, cols, rows = run_csv(["bound", "--model", model, "--method", "qcrb", "--sweep", "E=1,10"], tmp_path)
    assert [r[1] for r in rows] == pytest.approx([1 / (100 + 1), 0.005])


def test_parse_sweep():
    name, vals = parse_sweep("h=0.1:10:3:log")
    assert name == "h" and vals == pytest.approx([0.1, 1, 10])
    with pytest.raises(ConfigError):
        parse_sweep("x=1:2:3")
    with pytest.raises(ConfigError):
        parse_sweep("h=2,1")


def test_heisenberg_command(tmp_path):
    model = write_model(tmp_path, {"type": "bosonic", "E": {"epsilon": 0.1, "M": 10},
                                   "prior": {"sigma": 0.5}})
    _, cols, rows = run_csv(["heisenberg", "--model", model], tmp_path)
    row = dict(zip(cols, rows[0]))
    assert row["H_plus"] == pytest.approx(0.55)
    assert row["bound_prime"] >= row["bound"]


def test_capability_error_exit_code(tmp_path, capsys):
    model = write_model(tmp_path, {"type": "bosonic", "E": {"epsilon": 0.1, "M": 10}, "nu": 2,
                                   "prior": {"sigma": 0.5}})
    assert main(["bound", "--model", model, "--method", "mmse"]) == 3
    assert "capability" in capsys.readouterr().err
    qubit0 = write_model(tmp_path, {"type": "qubit", "E": 0, "prior": {"sigma": 0.1}}, "q0.json")
    assert main(["heisenberg", "--model", qubit0]) == 3


@pytest.mark.parametrize("obj", [{**QUBIT, "colour": "red"}, {"type": "qubit", "prior": {"sigma": 1}}])
def test_config_error_exit_code(tmp_path, obj):
    model = write_model(tmp_path, obj)
    assert main(["bound", "--model", model, "--method", "qcrb"]) == 4


def test_missing_file_and_bad_arguments(tmp_path):
    assert main(["bound", "--model", str(tmp_path / "nope.json"), "--method", "qcrb"]) == 4
    with pytest.raises(SystemExit) as info:
        main(["bound", "--model", "x", "--method", "bogus"])
    assert info.value.code == 4


def test_validate_passes(capsys):
    assert main(["validate", "--seed", "42", "--trials", "20000"]) == 0
    lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert lines[-1] == {"summary": "pass", "passed": 9, "total": 9}


def test_validate_detects_perturbed_G(monkeypatch, capsys):
    real = qbounds.validate.assemble

    def perturbed(model, testpoints):
        asm = real(model, testpoints)
        asm.G = asm.G + np.triu(np.full_like(asm.G, 1e-6), 1)
        return asm

    monkeypatch.setattr(qbounds.validate, "assemble", perturbed)
    assert main(["validate", "--suite", "g_symmetry"]) == 2
    lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert lines[0]["suite"] == "g_symmetry" and lines[0]["passed"] is False
    assert lines[-1]["summary"] == "fail"
