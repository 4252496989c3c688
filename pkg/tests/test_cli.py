import json
import subprocess
import sys

import pytest

from wickstar.cli import emit_plotdata, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def jets(tmp_path):
    z = tmp_path / "z.json"
    zb = tmp_path / "zbar.json"
    z.write_text(json.dumps({"n": 1, "hbar": 0.5, "coeffs": [{"I": [1], "J": [0], "re": 1, "im": 0}]}))
    zb.write_text(json.dumps({"n": 1, "hbar": 0.5, "coeffs": [{"I": [0], "J": [1], "re": 1, "im": 0}]}))
    return str(z), str(zb)


def coeff_map(jet):
    return {(tuple(r["I"]), tuple(r["J"])): complex(r["re"], r["im"]) for r in jet["coeffs"]}


def test_star_from_files(capsys, jets):
    code, out, _ = run(capsys, "star", "--f", jets[0], "--g", jets[1], "--alpha", "0.5", "--hbar", "0.5")
    assert code == 0
    c = coeff_map(json.loads(out)["jet"])
    assert c == {((0,), (0,)): 1, ((1,), (1,)): 1}


def test_star_builtin_exact(capsys, monkeypatch):
    monkeypatch.setenv("WICKSTAR_EXACT", "1")
    code, out, _ = run(capsys, "star", "--f", "z", "--g", "zbar", "--hbar", "1/2")
    data = json.loads(out)
    assert code == 0 and data["status"] == "exact" and data["jet"]["mode"] == "exact"
    assert {"I": [0], "J": [0], "re": "1", "im": "0"} in data["jet"]["coeffs"]


def test_star_graded(capsys):
    code, out, _ = run(capsys, "star", "--f", "z", "--g", "zbar", "--graded", "1")
    comps = json.loads(out)["components"]
    assert code == 0 and len(comps) == 2


def test_diverge_badguy(capsys):
    code, out, _ = run(capsys, "diverge", "--example", "badguy", "--hbar", "0.5")
    data = json.loads(out)
    assert code == 0
    assert data["verdict"] == "diverging"
    assert data["first_increasing"] == 0
    code, out, _ = run(capsys, "diverge", "--example", "badguy", "--hbar", "0.125")
    assert json.loads(out)["first_increasing"] == 15


def test_seminorm_value_and_divergence(capsys):
    code, out, _ = run(capsys, "seminorm", "--f", "exp:0.5,0.3", "--m", "1", "--l", "1", "--R", "1", "--S", "0")
    data = json.loads(out)
    assert code == 0 and data["status"] == "converged" and data["value"] > 0
    code, out, err = run(capsys, "seminorm", "--f", "badguy", "--m", "1", "--l", "1")
    assert code == 3
    assert json.loads(out)["value"] is None
    assert json.loads(err)["error"] == "diverging"


def test_malformed_input(capsys):
    for argv in (["star", "--f", "nope", "--g", "z"], ["seminorm", "--f", "z", "--R", "x"],
                 ["seminorm", "--f", "z", "--hbar", "abc"], ["bogus"], []):
        code, _, err = run(capsys, *argv)
        assert code == 2
        assert "error" in json.loads(err.strip().splitlines()[-1])


def test_table_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run(capsys, "table", "--f", "exp:0.3,0.2", "--m", "1", "--rs-max", "1",
                         "--hbar", "0.25,0.5", "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "m,l,R,S,hbar,value,status,terms_used,last_term"
    assert len(lines) == 1 + 2 * 3 * 4


def test_table_hbar_sweep_is_nondecreasing(capsys):
    code, out, _ = run(capsys, "table", "--f", "exp:0.3,0.2", "--m", "0", "--rs-max", "0",
                       "--hbar", "0.125,0.25,0.5,1")
    values = [float(line.split(",")[5]) for line in out.splitlines()[1:]]
    assert values == sorted(values)


def test_exp_curve_decreases(capsys):
    code, out, _ = run(capsys, "exp", "--w", "0.6,0.3", "--t", "0.5", "--kmax", "12")
    rows = [line.split(",") for line in out.splitlines()[1:]]
    devs = [float(r[1]) for r in rows]
    assert code == 0 and out.startswith("K,deviation\n")
    assert devs[-1] < devs[0]
    assert all(b <= a * 1.0000001 or b < 1e-12 for a, b in zip(devs[::2], devs[2::2]))


def test_coherent_sweep(capsys):
    code, out, _ = run(capsys, "coherent", "--f", "z", "--grid", "1,3", "--dim", "25")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "re_w,im_w,re_val,im_val" and len(lines) == 10
    for line in lines[1:]:
        rw, iw, rv, iv = map(float, line.split(","))
        assert abs(rw - rv) < 1e-9 and abs(iw - iv) < 1e-9


def test_fock_dump(capsys):
    code, out, _ = run(capsys, "fock", "--op", "a", "--dim", "3")
    data = json.loads(out)
    assert code == 0 and data["modes"][0]["D"] == 3
    code, out, _ = run(capsys, "fock", "--f", "zbar", "--dim", "3")
    assert code == 0 and json.loads(out)["op"] == "pi"


def test_inequalities_report(capsys):
    code, out, _ = run(capsys, "inequalities", "--f", "exp:0.3,0.2", "--g", "exp:0.1,0.4", "--m", "1",
                       "--rs-max", "1", "--alphas", "0.25")
    data = json.loads(out)
    assert code == 0 and data["failures"] == 0 and data["rows"] > 0


def test_verify_subset_records_seed(capsys):
    code, out, err = run(capsys, "verify", "--seed", "7", "--only", "2,3")
    data = json.loads(out)
    assert code == 0 and data["seed"] == 7 and data["passed"]
    assert [c["criterion"] for c in data["criteria"]] == [2, 3]
    assert "criterion  2 PASS" in err


def test_verify_is_reproducible(capsys):
    outs = [run(capsys, "verify", "--seed", "3", "--only", "1", "--format", "csv")[1] for _ in range(2)]
    assert outs[0] == outs[1]
    assert outs[0].startswith("# seed=3\n")


def test_emit_plotdata_empty(tmp_path):
    path = tmp_path / "empty.csv"
    text = emit_plotdata(["x", "y"], [], str(path))
    assert text == "x,y\n" and path.read_text() == "x,y\n"
    assert emit_plotdata(["x"], [[0.1]], str(path)) == "x\n0.10000000000000001\n"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "wickstar", "diverge", "--example", "decoy", "--hbar", "0.5"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["verdict"] == "converged"
