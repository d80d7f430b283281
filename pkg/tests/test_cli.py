import csv
import io
import json
import math
import subprocess
import sys

import pytest

from munorm.cli import main

PROJECTOR = '{"kind": "projector", "J": 4, "subset": [0, 1]}'
SHIFT = '{"kind": "permutation", "J": 4, "image": [1, 2, 3, 0]}'
QUAD = '{"kind": "convolution", "lambda": {"form": "quadratic_phase", "tau": 1.5707963267948966}}'


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_projector_mu_norm(capsys):
    code, out, _ = run(capsys, "mu-norm", "--inline", PROJECTOR)
    doc = json.loads(out)
    assert code == 0
    assert doc["mu_norm"] == 0.7071067811865476
    assert doc["infimum"]["agrees"] and doc["infimum"]["partitions"] == 15
    assert '"mu_norm": 0.7071067811865476' in out


def test_random_finite_from_file(tmp_path, capsys):
    p = tmp_path / "u.json"
    p.write_text('{"kind": "random_unitary", "J": 6}')
    code, out, _ = run(capsys, "mu-norm", "--op", str(p), "--seed", "5")
    assert code == 0 and json.loads(out)["mu_norm"] == pytest.approx(1.0, abs=1e-12)


def test_torus_mu_norm_windows(capsys):
    code, out, _ = run(capsys, "mu-norm", "--inline", QUAD)
    doc = json.loads(out)
    assert code == 0 and doc["mu_norm"] == pytest.approx(1.0)
    assert [w["interval_len"] for w in doc["windows"]] == [64, 256, 1024]


def test_entropy_shift(capsys):
    code, out, _ = run(capsys, "entropy", "--inline", SHIFT, "--n-max", "2")
    rows = json.loads(out)["rows"]
    assert code == 0
    assert rows[1]["quantum_stage"] == pytest.approx(math.log(4))
    assert rows[1]["ks_stage"] == pytest.approx(math.log(4))
    code, out, _ = run(capsys, "entropy", "--inline", SHIFT, "--partition", "trivial")
    assert all(r["quantum_stage"] == 0.0 for r in json.loads(out)["rows"])


def test_entropy_csv(capsys):
    code, out, _ = run(capsys, "entropy", "--inline", SHIFT, "--format", "csv",
                       "--partition", "0,0,1,2")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0
    assert rows[0] == ["n", "ks_stage", "quantum_stage", "ratio"]
    assert len(rows) == 5


def test_omega_tables(capsys):
    code, out, _ = run(capsys, "omega", "--inline", QUAD, "--M", "2")
    doc = json.loads(out)
    nz = {(m, n): (re, im) for m, n, re, im in doc["omega"] if abs(re) + abs(im) > 1e-12}
    assert code == 0 and set(nz) == {(-2, 2), (0, 0), (2, -2)}
    code, out, _ = run(capsys, "omega", "--inline",
                       '{"kind": "multiplication", "coeffs": {"0": 1, "1": 1}}', "--M", "1")
    band = {(m, n): re for m, n, re, _ in json.loads(out)["omega"]}
    assert band[(0, 0)] == 2.0 and band[(0, 1)] == 1.0 and band[(1, 1)] == 0.0


def test_omega_convergence_csv(capsys):
    code, out, _ = run(capsys, "omega", "--inline", '{"kind": "periodic", "tau": 3, "random": true}',
                       "--band", "1", "--format", "csv", "--convergence", "--M", "2")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 25 * 3
    assert all(float(r["error"]) <= float(r["bound"]) for r in rows)


def test_bistochastic(capsys):
    code, out, _ = run(capsys, "bistochastic", "--inline",
                       '{"kind": "random_unitary", "J": 8}', "--trials", "30")
    doc = json.loads(out)
    assert code == 0 and doc["unitary"] and doc["checks"]["unit"]["passed"]
    code, out, _ = run(capsys, "bistochastic", "--inline",
                       '{"kind": "matrix", "J": 2, "entries": [[1, 2], [3, 4]]}')
    doc = json.loads(out)
    assert code == 0 and doc["checks"]["unit"] == {"skipped": True} and doc["notes"]
    code, out, _ = run(capsys, "bistochastic", "--inline",
                       '{"kind": "convolution", "lambda": {"form": "rotation", "alpha": 0.4}}',
                       "--M", "32")
    assert code == 0 and json.loads(out)["mode"] == "torus"


@pytest.mark.parametrize("argv", [
    ["mu-norm"],
    ["mu-norm", "--op", "/nonexistent/op.json"],
    ["mu-norm", "--inline", "{"],
    ["mu-norm", "--inline", PROJECTOR, "--J", "5"],
    ["mu-norm", "--inline", PROJECTOR, "--M", "0"],
    ["omega", "--inline", PROJECTOR],
    ["entropy", "--inline", QUAD],
    ["entropy", "--inline", SHIFT, "--partition", "0,1"],
    ["suite", "--criteria", "14"],
    ["nonsense"],
    ["mu-norm", "--format", "xml", "--inline", PROJECTOR],
])
def test_invalid_input_exits_1(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv))
    assert exc.value.code == 1
    assert "error" in capsys.readouterr().err


def test_size_guard_skips_the_infimum(capsys, monkeypatch):
    monkeypatch.setenv("MUNORM_GUARD_J", "3")
    code, out, _ = run(capsys, "mu-norm", "--inline", PROJECTOR)
    doc = json.loads(out)
    assert code == 0 and "skipped" in doc["infimum"]
    assert doc["mu_norm"] == 0.7071067811865476


def test_table_sequence_is_estimated(capsys):
    code, out, _ = run(capsys, "omega", "--inline",
                       '{"kind": "convolution", "lambda": {"form": "table", "offset": 0, "values": [1, 2]}}',
                       "--M", "1")
    doc = json.loads(out)
    assert code == 0 and doc["source"] == "estimated"


def test_entropy_of_non_permutation(capsys):
    code, out, _ = run(capsys, "entropy", "--inline", PROJECTOR, "--n-max", "2")
    rows = json.loads(out)["rows"]
    assert code == 0 and all(r["ks_stage"] is None for r in rows)


def test_failed_check_exits_2(capsys):
    code, out, _ = run(capsys, "suite", "--criteria", "1", "--tol", "1e-30", "--quiet")
    assert code == 2
    assert json.loads(out)


def test_out_file_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["bistochastic", "--inline", '{"kind": "random_matrix", "J": 5}',
                     "--seed", "7", "--out", str(p)]) == 0
    assert capsys.readouterr().out == ""
    assert a.read_bytes() == b.read_bytes()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "munorm", "mu-norm", "--inline", PROJECTOR],
                         capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["mu_norm"] == 0.7071067811865476
