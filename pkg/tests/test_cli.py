"""Command-line behaviour: exit codes, output and determinism."""

import json
import subprocess
import sys

from pdmint.cli import main
from pdmint.catalog import _catalog_bytes


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_commute_dilatation_translation(capsys):
    code, out, _ = _run(capsys, "commute", "--A", "D", "--B", "P3")
    assert code == 0
    data = json.loads(out)
    assert data["generators"] == "i*P3"
    assert data["canonical"]


def test_verify_anchor_exit_zero(capsys):
    code, out, _ = _run(capsys, "verify", "--table", "2", "--item", "14")
    assert code == 0
    rep = json.loads(out)["reports"]
    assert [i["verdict"] for i in rep[0]["integrals"]] == ["Verified"] * 3


def test_discrepant_anchor_exit_one(capsys):
    code, out, _ = _run(capsys, "verify", "--table", "1", "--item", "2", "--pretty")
    assert code == 1
    assert "T1.2" in out and "Discrepant" in out


def test_parse_error_exit_two(capsys):
    code, _, err = _run(capsys, "find", "--f", "r^2 +", "--V", "c")
    assert code == 2
    assert "parse error" in err


def test_usage_errors_exit_two(capsys):
    assert _run(capsys, "verify", "--item", "99")[0] == 2
    assert _run(capsys, "killing", "--family", "12")[0] == 2
    assert _run(capsys, "killing", "--family", "2", "--params", "oops")[0] == 2
    assert _run(capsys, "find", "--f", "r^2", "--V", "c", "--degrees", "7")[0] == 2
    assert _run(capsys, "verify", "--out", "/nonexistent/dir/x.json")[0] == 2


def test_find_lists_item1_integral(capsys):
    code, out, _ = _run(capsys, "find", "--f", "r^2", "--V", "c*r^2/x3^2", "--degrees", "2")
    assert code == 0
    renderings = [q["rendering"] for q in json.loads(out)["integrals"]]
    assert "{L1,L2} - 2*c*x1*x2/x3^2" in renderings


def test_killing_family(capsys):
    code, out, _ = _run(capsys, "killing", "--family", "4", "--params", "lam4_1=1,lam4_3=2/3")
    assert code == 0
    assert json.loads(out)["certificate"]["verdict"] == "ExactZero"


def test_catalog_list(capsys):
    code, out, _ = _run(capsys, "catalog", "list")
    assert code == 0
    assert len(json.loads(out)["rows"]) == 28


def test_reports_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify", "--table", "2", "--item", "8", "--seed", "11"]
    before = _catalog_bytes()
    assert main(args + ["--out", str(a)]) == 1
    assert main(args + ["--out", str(b)]) == 1
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    assert _catalog_bytes() == before


def test_bindings_file(tmp_path, capsys):
    p = tmp_path / "b.json"
    p.write_text(json.dumps({"T2.8": [{"slots": {}, "params": {"c": "3/7"}}]}))
    code, out, _ = _run(capsys, "verify", "--table", "2", "--item", "8", "--bindings", str(p))
    assert code == 1
    rep = json.loads(out)["reports"][0]
    assert rep["binding"]["params"] == {"c": "3/7"}


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pdmint", "commute", "--A", "L1", "--B", "L2", "--pretty"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "i*L3" in proc.stdout
