import json

import pytest

from cubiq.cli import main
from cubiq.circle import load_ledger

FORM = "field d = 1\nvars s = 2\nx1^3 : 1\nx2^3 : -1\n"


@pytest.fixture
def form_file(tmp_path):
    p = tmp_path / "form.txt"
    p.write_text(FORM)
    return str(p)


def run(tmp_path, *argv):
    out = tmp_path / "run"
    code = main([*argv, "--out", str(out)])
    return code, out


def test_field_info_writes_manifest(tmp_path):
    code, out = run(tmp_path, "field", "info", "--d", "3")
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["config"]["d"] == 3
    assert json.loads((out / "result.json").read_text())


def test_count_matches_library(tmp_path, form_file):
    code, out = run(tmp_path, "circle", "count", "--form", form_file, "--P", "2")
    assert code == 0
    res = json.loads((out / "result.json").read_text())
    from cubiq.circle import brute_count
    from cubiq.forms import parse_form
    assert res["N"] == brute_count(parse_form(FORM), 2)
    assert "sha256" in json.loads((out / "manifest.json").read_text())["inputs"]["form"]


def test_missing_form_is_input_error(tmp_path):
    code, _ = run(tmp_path, "forms", "info", "--form", str(tmp_path / "nope.txt"))
    assert code == 1


def test_bad_seed_is_input_error(tmp_path):
    assert main(["field", "info", "--seed", "abc", "--out", str(tmp_path / "x")]) == 1


def test_budget_exceeded_exit_code(tmp_path, form_file):
    code, out = run(tmp_path, "circle", "count", "--form", form_file, "--P", "5", "--max-points", "10")
    assert code == 2
    assert json.loads((out / "manifest.json").read_text())["status"].startswith("budget exceeded")


def test_ledger_table_and_failure(tmp_path, capsys):
    code, _ = run(tmp_path, "circle", "ledger")
    assert code == 0
    assert "PASS" in capsys.readouterr().out
    data = load_ledger()
    data["entries"].append({"name": "broken", "anchor": "", "kind": "affine", "lhs": {"const": "2"},
                            "rhs": {"const": "1"}, "direction": "<=", "regime": []})
    bad = tmp_path / "ledger.json"
    bad.write_text(json.dumps(data))
    code, out = run(tmp_path, "circle", "ledger", "--ledger", str(bad))
    assert code == 3
    assert "FAIL  broken" in capsys.readouterr().out
    assert json.loads((out / "result.json").read_text())["entries"][-1]["pass"] is False


def test_integral_reproducible_for_fixed_seed(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        assert main(["circle", "integral", "--samples", "20000", "--seed", "5", "--out", str(out)]) == 0
        outs.append((out / "result.json").read_text())
    assert outs[0] == outs[1]


def test_weyl_csv(tmp_path, form_file):
    code, out = run(tmp_path, "sums", "weyl", "--form", form_file, "--alpha", "1/3,1/7", "--P", "1,2", "--csv")
    assert code == 0
    header, *rows = (out / "result.csv").read_text().strip().splitlines()
    assert "ratio" in header and len(rows) == 2


def test_lines_find_certifies_absence(tmp_path):
    p = tmp_path / "fermat3.txt"
    p.write_text("field d = 1\nvars s = 3\nx1^3 : 1\nx2^3 : 1\nx3^3 : 1\n")
    code, out = run(tmp_path, "lines", "find", "--form", str(p), "--bound", "1")
    assert code == 0
    assert json.loads((out / "result.json").read_text())["certified_none"] is True


def test_verify_all_single_criterion(tmp_path):
    code, out = run(tmp_path, "verify-all", "--only", "8")
    assert code == 0
    res = json.loads((out / "result.json").read_text())
    assert [o["criterion"] for o in res["outcomes"]] == [8]
