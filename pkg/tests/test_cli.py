import csv
import io
import json
import subprocess
import sys

import pytest

from vanhove.cli import main

SMALL_STAR = """\
model:
  preset: star-bath
  params: {n_levels: 120, band: 1.5}
sweep:
  lambda_grid: [0.3]
  tau_grid: [0.5]
"""

ZERO_W = """\
model:
  lam: 0.2
  h_s: [[0.5, 0], [0, -0.5]]
  w: [[0, 0], [0, 0]]
  h_r: [[0, 0, 0], [0, 1.0, 0], [0, 0, 2.0]]
  v: [[0, 0.4, 0.3], [0.4, 0, 0], [0.3, 0, 0]]
  omega_r: [1, 0, 0]
sweep:
  lambda_grid: [0.4, 0.2]
  tau_grid: [0.5, 1.0]
  cutoff: 5.0
"""


@pytest.fixture
def cfg(tmp_path):
    def write(text, name="c.yaml"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_validate(cfg, capsys):
    code, out, _ = run(["validate", cfg("model: {preset: dephasing}\n")], capsys)
    assert code == 0 and "A4-centering" in out and "P L_SR P" in out
    bad = ZERO_W.replace("v: [[0, 0.4, 0.3], [0.4, 0, 0], [0.3, 0, 0]]", "v: [[1, 0, 0], [0, 1, 0], [0, 0, 1]]")
    code, out, err = run(["validate", cfg(bad)], capsys)
    assert code == 1 and "A4-centering" in err and "FAIL" in out


def test_validate_parse_error(cfg, capsys):
    bad = ZERO_W.replace("[0, 1.0, 0]", "[0, 1.0]")
    code, _, err = run(["validate", cfg(bad)], capsys)
    assert code == 2 and "c.yaml:5" in err and "h_r row 1" in err


def test_kn_both(cfg, capsys):
    code, out, err = run(["kn", cfg("model: {preset: dephasing}\n"), "--n", "1", "--t", "1.0", "--reduced"], capsys)
    assert code == 0
    table = rows(out)
    assert table[0] == ["row", "col", "brute_re", "brute_im", "diagram_re", "diagram_im"]
    assert len(table) == 1 + 16
    res = float(err.split()[-1])
    assert res <= 1e-10


def test_kn_parity_diagram(cfg, capsys):
    code, out, _ = run(["kn", cfg("model: {preset: parity}\n"), "--n", "1", "--t", "1.0", "--mode", "diagram"], capsys)
    assert code == 0
    vals = [abs(float(x)) for r in rows(out)[1:] for x in r[2:]]
    assert len(vals) == 2 * 64 * 64 and max(vals) <= 1e-9


def test_kn_capability(cfg, capsys):
    code, _, err = run(["kn", cfg("model: {preset: dephasing}\n"), "--n", "5", "--t", "1", "--mode", "brute"], capsys)
    assert code == 2 and "capability" in err


def test_converge_single_row(cfg, capsys):
    code, out, _ = run(["converge", cfg(SMALL_STAR)], capsys)
    table = rows(out)
    assert code == 0 and table[0] == ["lambda", "tau", "error", "flagged"] and len(table) == 2
    assert table[1][:2] == ["0.3", "0.5"] and table[1][3] == "false"


def test_converge_zero_coupling(cfg, capsys):
    code, out, _ = run(["converge", cfg(ZERO_W)], capsys)
    assert code == 0
    assert all(float(r[2]) <= 1e-12 for r in rows(out)[1:])


def test_converge_deterministic_files(cfg, tmp_path, capsys):
    path = cfg(SMALL_STAR.replace("[0.3]", "[0.4, 0.2]"))
    a, b, long = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "long.csv"
    assert main(["converge", path, "--out", str(a), "--long", str(long)]) == 0
    assert main(["converge", path, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()
    meta = json.loads(a.with_suffix(".json").read_text())
    assert meta["preset"] == "star-bath" and meta["seed"] == 0 and "numpy" in meta["versions"]
    assert rows(long.read_text())[0] == ["lambda", "tau", "quantity", "value"]


def test_converge_flags_window(cfg, capsys):
    code, out, err = run(["converge", cfg(SMALL_STAR.replace("[0.3]", "[0.05]").replace("[0.5]", "[1.0]"))], capsys)
    assert code == 0 and "warning" in err and rows(out)[1][3] == "true"


def test_bounds_lemma_and_xi(capsys):
    code, out, _ = run(["bounds", "--which", "lemmaA", "--t-grid", "1,2"], capsys)
    table = rows(out)
    assert code == 0 and all(r[-1] == "true" for r in table[1:])
    assert {r[0] for r in table[1:]} == {"identity", "eps-estimate"}
    code, out, _ = run(["bounds", "--which", "xi", "--m-max", "1", "--eps", "0.5"], capsys)
    table = rows(out)
    assert code == 0 and float(table[-1][4]) == pytest.approx(1.0)


def test_bounds_kn(cfg, capsys):
    code, _, err = run(["bounds", cfg("model: {preset: dephasing}\n"), "--which", "kn"], capsys)
    assert code == 1 and "certificate" in err
    code, out, _ = run(["bounds", cfg("model: {preset: dephasing}\nclustering: preset\n"), "--which", "kn"], capsys)
    assert code == 0 and len(rows(out)) == 7
    halved = "model: {preset: dephasing}\nclustering: {C: 0.25}\n"
    code, _, err = run(["bounds", cfg(halved), "--which", "kn"], capsys)
    assert code == 1 and "failed" in err


def test_bounds_constants(capsys):
    code, out, _ = run(["bounds", "--which", "constants", "--n-max", "10"], capsys)
    assert code == 0 and len(rows(out)) == 11


FIG = """\
n = 4   A = {2,4}   d = (0,1)(2,3,4,5)
W rail  W5 W3 W1 W0 [sigma] W2 W4
time   0    1    2    3    4    5
side   L    L    R    L    R    L
V arcs +----+    +----+----+----+
block  1    1    2    2    2    2
d_1^A = (1,0)   tr(V1 V0 omega_R)
d_2^A = (2,4,5,3)   tr(V2 V4 V5 V3 omega_R)
signs   (-1)^|A| = +1   (-1)^(|d|+1) = -1
"""


def test_diagram(capsys):
    code, out, _ = run(["diagram", "--n", "4", "--A", "2,4", "--d", "0-1/2-5"], capsys)
    assert code == 0 and out == FIG
    code, out, _ = run(["diagram", "--n", "1", "--A", "", "--d", "0-2"], capsys)
    assert code == 0 and "W2 W1 W0 [sigma]" in out
    code, _, err = run(["diagram", "--n", "1", "--d", "0/1-2"], capsys)
    assert code == 2 and ">= 2" in err
    code, _, err = run(["diagram", "--n", "2", "--d", "0-2"], capsys)
    assert code == 2


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["bounds", "--which", "nope"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("model: {preset: dephasing}\n")
    res = subprocess.run([sys.executable, "-m", "vanhove", "validate", str(p)], capture_output=True, text=True)
    assert res.returncode == 0 and "A2-invariance" in res.stdout
