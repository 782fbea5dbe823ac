import json

import pytest

from ergokit.cli import main

GAMMA2 = 'kind = birth-death\nb0 = 1\nb = "n^2"\na = "n^2"\n'
MM1 = 'kind = birth-death\nb0 = 1\nb = "1"\na = "2"\n'
OU = 'kind = diffusion\na = "1"\nb = "-x"\n'


@pytest.fixture
def model_file(tmp_path):
    def write(text, name="model.model"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return str(p)

    return write


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_classify_text(model_file, capsys):
    code, out, _ = run(capsys, "classify", model_file(GAMMA2))
    assert code == 0
    assert "exponential ergodicity" in out
    assert "strong ergodicity" in out
    lines = {ln.split()[0]: ln for ln in out.splitlines() if ln.startswith("  ")}
    assert "Holds" in lines["exponential"]
    assert "Fails" in lines["strong"]


def test_classify_includes_nash_only_with_nu(model_file, capsys):
    path = model_file(GAMMA2)
    _, out, _ = run(capsys, "classify", path)
    assert "Nash" not in out
    _, out, _ = run(capsys, "classify", path, "--nu", "4")
    assert "Nash" in out
    assert "sufficient-side" in out


def test_classify_json_lines_schema(model_file, capsys):
    code, out, _ = run(capsys, "classify", model_file(MM1), "--format", "json-lines")
    assert code == 0
    rows = [json.loads(line) for line in out.splitlines()]
    assert {r["property"] for r in rows} >= {"uniqueness", "ergodicity", "strong ergodicity"}
    for r in rows:
        assert set(r) <= {"property", "outcome", "quantity", "probes", "flags"}
        assert r["outcome"] in ("Holds", "Fails", "Inconclusive")
        assert isinstance(r["probes"], list)
        assert isinstance(r["flags"], list)


def test_classify_csv_and_curve(model_file, capsys):
    code, out, _ = run(capsys, "classify", model_file(MM1), "--format", "csv",
                       "--emit-curve")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "property,outcome,quantity,probe_count,last_horizon,last_value,flags"
    assert any(ln.startswith("curve,ergodicity,") for ln in lines)


def test_classify_deterministic(model_file, capsys):
    path = model_file(GAMMA2)
    _, first, _ = run(capsys, "classify", path, "--format", "csv")
    _, second, _ = run(capsys, "classify", path, "--format", "csv")
    assert first == second


def test_classify_diffusion(model_file, capsys):
    code, out, _ = run(capsys, "classify", model_file(OU, "ou.model"))
    assert code == 0
    assert "Poincare" in out
    assert "conjectured" in out


def test_malformed_file_exits_one(model_file, capsys):
    code, _, err = run(capsys, "classify", model_file("kind = birth-death\nb0 =\n"))
    assert code == 1
    assert "line 2" in err


def test_missing_file_exits_one(capsys):
    code, _, err = run(capsys, "classify", "/nonexistent/path.model")
    assert code == 1
    assert "error" in err


def test_gap_csv_columns(model_file, capsys):
    code, out, _ = run(capsys, "gap", model_file(MM1), "--oracle", "512",
                       "--format", "csv")
    assert code == 0
    header, row = out.splitlines()
    assert header == "model,kind,delta,lower,upper,var_lower,oracle,oracle_err"
    cells = row.split(",")
    assert cells[1] == "birth-death"
    assert float(cells[2]) == pytest.approx(2.0, abs=1e-9)
    assert float(cells[6]) == pytest.approx(0.17157287525381, rel=0.01)


def test_gap_zero_for_subcritical(model_file, capsys):
    code, out, _ = run(capsys, "gap",
                       model_file('kind = birth-death\nb0 = 1\nb = "n"\na = "n"\n'),
                       "--format", "csv")
    assert code == 0
    row = out.splitlines()[1].split(",")
    assert row[2] == "inf" and row[3] == "0.0" and row[4] == "0.0"


def test_verify_hitting_bound(model_file, capsys):
    code, out, _ = run(capsys, "verify", model_file(GAMMA2),
                       "--y", "n", "--lambda", "0.5")
    assert code == 0
    assert "Fails" in out


def test_verify_rejects_oversized_lambda(model_file, capsys):
    code, _, err = run(capsys, "verify", model_file(MM1),
                       "--y", "n", "--lambda", "5.0")
    assert code == 1
    assert "lambda" in err


def test_oracle_chain(model_file, capsys):
    code, out, _ = run(capsys, "oracle", model_file(MM1), "--N", "512")
    assert code == 0
    assert "eigenvalue" in out


def test_oracle_diffusion_l0(model_file, capsys):
    code, out, _ = run(capsys, "oracle", model_file(OU, "ou.model"),
                       "--N", "512", "--which", "l0")
    assert code == 0
    value = float(out.splitlines()[1].split("=")[1].split("+-")[0])
    assert value == pytest.approx(1.0, rel=0.02)


def test_budget_flag_extends_probes(model_file, capsys):
    path = model_file(MM1)
    _, out1, _ = run(capsys, "classify", path, "--format", "json-lines")
    _, out2, _ = run(capsys, "classify", path, "--format", "json-lines", "--budget", "2")
    h1 = max(json.loads(ln)["probes"][-1][0] for ln in out1.splitlines()
             if json.loads(ln)["probes"])
    h2 = max(json.loads(ln)["probes"][-1][0] for ln in out2.splitlines()
             if json.loads(ln)["probes"])
    assert h2 == 2 * h1


def test_env_budget_multiplies(model_file, capsys, monkeypatch):
    monkeypatch.setenv("ERGOKIT_BUDGET", "2")
    path = model_file(MM1)
    _, out, _ = run(capsys, "classify", path, "--format", "json-lines")
    h = max(json.loads(ln)["probes"][-1][0] for ln in out.splitlines()
            if json.loads(ln)["probes"])
    assert h == 2 * 65536
