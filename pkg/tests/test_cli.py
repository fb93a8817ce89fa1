import csv
import io
import json
import math
import subprocess
import sys

import pytest

from shiftmetrics.cli import main


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


@pytest.fixture
def specs(tmp_path):
    return {
        "ber05": write(tmp_path, "ber05.json", {"type": "iid", "alphabet": ["0", "1"], "probs": [0.5, 0.5]}),
        "ber13": write(tmp_path, "ber13.json", {"type": "iid", "alphabet": ["0", "1"], "probs": [2 / 3, 1 / 3]}),
        "chain": write(tmp_path, "chain.json", {"type": "markov", "alphabet": ["0", "1"],
                                                "kernel": [[0.9, 0.1], [0.1, 0.9]]}),
        "table": write(tmp_path, "table.json", {"type": "table", "range": 2, "values": [0.3, 0.6, 0.7, 0.4]}),
        "matrix": write(tmp_path, "matrix.json", {"type": "matrix", "matrix": [[2 / 3, 1 / 3], [1 / 3, 2 / 3]]}),
        "hulse": write(tmp_path, "hulse.json", {"type": "hulse", "beta": 1.0, "J": [1.0], "h": [0.1],
                                                "h_prime": [-0.1], "Lambda": [2], "level": 1}),
        "broken": write(tmp_path, "broken.json", {"type": "iid", "alphabet": ["0", "1"], "probs": [0.7, 0.7]}),
    }


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_dist_projective(capsys, specs):
    code, out, _ = run(capsys, "dist", "--kind", "projective", "--a", specs["ber05"], "--b", specs["ber13"],
                       "--tol", "1e-9")
    d = json.loads(out)
    assert code == 0
    assert d["lo"] == pytest.approx(0.405465, abs=1e-6) and d["hi"] == pytest.approx(0.405465, abs=1e-6)
    assert d["runtime_ms"] is None


def test_dist_vague_identical(capsys, specs):
    code, out, _ = run(capsys, "dist", "--kind", "vague", "--a", specs["chain"], "--b", specs["chain"],
                       "--depth", "10")
    d = json.loads(out)
    assert code == 0 and d["lo"] == 0.0 and d["hi"] == 2.0**-9


def test_dist_dbar_upper(capsys, specs):
    code, out, _ = run(capsys, "dist", "--kind", "dbar-upper", "--a", specs["ber05"], "--b", specs["ber13"])
    assert code == 0 and json.loads(out)["hi"] == pytest.approx(1 / 6, abs=1e-9)


def test_dist_csv_columns(capsys, specs):
    code, out, _ = run(capsys, "dist", "--kind", "dbar-lower", "--a", specs["ber05"], "--b", specs["ber13"],
                       "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["kind", "lo", "hi", "depth", "runtime_ms"]
    assert rows[1][0] == "dbar-lower" and float(rows[1][1]) == pytest.approx(1 / 6) and rows[1][4] == ""


def test_seventeen_digits(capsys, specs):
    _, out, _ = run(capsys, "dist", "--kind", "technical", "--a", specs["ber05"], "--b", specs["ber13"],
                    "--format", "csv")
    hi = list(csv.reader(io.StringIO(out)))[1][2]
    assert hi == format(float(hi), ".17g") and float(hi) == pytest.approx(2 * math.log(1.5))


def test_output_byte_identical(tmp_path, specs, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"out{i}.json"
        assert main(["dist", "--a", specs["chain"], "--b", specs["ber13"], "--out", str(path), "--threads", "2"]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_timing_flag(capsys, specs):
    _, out, _ = run(capsys, "dist", "--kind", "vague", "--a", specs["ber05"], "--b", specs["ber13"], "--timing")
    assert json.loads(out)["runtime_ms"] >= 0


def test_parse_errors_exit_2(capsys, specs, tmp_path):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    assert run(capsys, "dist", "--a", str(bad_json), "--b", specs["ber05"])[0] == 2
    code, _, err = run(capsys, "dist", "--a", specs["broken"], "--b", specs["ber05"])
    assert code == 2 and "error" in err
    assert run(capsys, "dist", "--a", str(tmp_path / "missing.json"), "--b", specs["ber05"])[0] == 2
    assert run(capsys, "dist", "--a", specs["ber05"])[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["dist", "--kind", "nope"])
    assert exc.value.code == 2


def test_capacity_exit_3(capsys, specs, monkeypatch):
    monkeypatch.setenv("SHIFTMETRICS_CAPACITY", "100")
    assert run(capsys, "dist", "--kind", "vague", "--a", specs["ber05"], "--b", specs["ber13"],
               "--depth", "12")[0] == 3


def test_certify_verdicts(capsys):
    code, out, _ = run(capsys, "certify", "--scheme", "long_range", "--beta", "0.2", "--lmax", "12")
    assert code == 0 and json.loads(out)["verdict"] == "CONVERGES"
    code, out, _ = run(capsys, "certify", "--scheme", "long_range", "--beta", "0.3", "--lmax", "12")
    assert code == 4 and json.loads(out)["verdict"] == "INCONCLUSIVE"
    code, out, _ = run(capsys, "certify", "--scheme", "long_range", "--beta", "0", "--lmax", "4",
                       "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["ell", "eps_ell", "svar_ell", "c_ell", "cauchy_bound", "verdict"]
    assert all(float(r[3]) == 0.0 and r[5] == "CONVERGES" for r in rows[1:])


def test_certify_tables(capsys, specs, tmp_path):
    p = write(tmp_path, "tables.json", {"type": "tables", "tables": [
        {"type": "table", "range": 1, "values": [0.5, 0.5]},
        {"type": "table", "range": 2, "values": [0.3, 0.6, 0.7, 0.4]}]})
    code, out, _ = run(capsys, "certify", "--scheme", "tables", "--a", p, "--lmax", "3")
    assert code == 0 and json.loads(out)["rows"][-1]["eps_ell"] == 0.0


def test_counterexample_separability(capsys):
    code, out, _ = run(capsys, "counterexample", "separability", "--format", "csv")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and len(rows) == 201
    assert abs(float(rows[-1][1]) - 0.5) < 1e-2


def test_counterexample_dbar_vs_rho(capsys):
    code, out, _ = run(capsys, "counterexample", "dbar-vs-rho", "--p", "4")
    row = json.loads(out)["rows"][0]
    assert code == 0 and row["dbar_upper_exact"] == "1/4" and row["dbar_upper"] == 0.25
    assert row["rho_truncated"] >= 0.49


def test_counterexample_rho_vs_dbar(capsys):
    code, out, _ = run(capsys, "counterexample", "rho-vs-dbar")
    rows = json.loads(out)["rows"]
    assert code == 0
    assert rows[2]["rho_hi"] == 0.0 and rows[3]["rho_hi"] == 0.0
    assert all(r["rho_hi"] <= r["var_bound"] + 1e-9 for r in rows)


def test_approx_entropy_spectral_hulse(capsys, specs):
    code, out, _ = run(capsys, "approx", "--a", specs["table"], "--lmax", "3")
    rows = json.loads(out)["rows"]
    assert code == 0 and rows[1]["rho_hi"] == 0.0 and rows[0]["rho_hi"] <= rows[0]["var_bound"] + 1e-9
    code, out, _ = run(capsys, "entropy", "--a", specs["chain"], "--b", specs["chain"])
    d = json.loads(out)
    assert code == 0 and d["entropy"] == pytest.approx(0.325083, abs=1e-6) and d["relative_entropy"] == 0.0
    code, out, _ = run(capsys, "entropy", "--a", specs["table"])
    d = json.loads(out)
    assert d["defect"]["lo"] <= 0.0 <= d["defect"]["hi"]
    code, out, _ = run(capsys, "spectral", "--a", specs["matrix"])
    d = json.loads(out)
    assert code == 0 and d["tau"] == pytest.approx(1 / 3, abs=1e-15)
    assert d["eigenvector"] == pytest.approx([0.5, 0.5], abs=1e-12)
    code, out, _ = run(capsys, "hulse", "--a", specs["hulse"])
    d = json.loads(out)
    assert code == 0 and 0 < d["lo"] <= d["hi"]


def test_console_entry_point(specs):
    res = subprocess.run([sys.executable, "-m", "shiftmetrics.cli", "dist", "--kind", "vague",
                          "--a", specs["ber05"], "--b", specs["ber05"], "--depth", "3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["hi"] == 0.25
