import io
import json

import pytest

from dlab import cli


def run(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def test_cf():
    code, text = run("cf", "golden", "--depth", "5")
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "n,a_n,p_n,q_n" and lines[-1] == "5,1,5,8"


def test_cf_type(capsys):
    code, _ = run("cf", "[0,1,10,100,1000]", "--depth", "4", "--type")
    assert code == 0
    assert "beta_hat" in capsys.readouterr().err


def test_gaps():
    code, text = run("gaps", "golden", "--last", "13")
    assert code == 0 and len(text.strip().splitlines()) == 3  # header + two gaps


def test_levels_and_boxdim(tmp_path):
    arcs = tmp_path / "a.json"
    code, text = run("levels", "golden", "--level", "3,6", "--level", "7,40", "--K", "3/2", "--arcs-json", str(arcs), "--nested")
    assert code == 0
    rows = text.strip().splitlines()
    # level 1 predicts 3 groups but its c_i is not positive, so two of them merge
    assert len(rows) == 3 and rows[1].split(",")[5:7] == ["3", "2"]
    assert rows[2].split(",")[5:7] == ["34", "34"]
    obj = json.loads(arcs.read_text())
    assert cli.arcs_from_json(obj).component_count == 32
    code, text = run("boxdim", str(arcs), "--scales", "1/4,1/8,1/16")
    assert code == 0 and text.startswith("scale,count")


def test_levels_bad_K(capsys):
    code, _ = run("levels", "golden", "--level", "5,8", "--K", "1")
    assert code == 2 and "InvalidK" in capsys.readouterr().err


def test_phi():
    code, text = run("phi", '{"family":"thm5","l":"1/3","u":"1/2"}', "--n-min", "5", "--n-max", "9", "--all")
    assert code == 0
    rows = [r.split(",") for r in text.strip().splitlines()[1:]]
    assert rows[0][0] == "5" and rows[0][1].startswith("0.015625")
    assert rows[-1][0] == "9"


def test_formula():
    code, text = run("formula", "--N", "6/5", "--B", "2", "--K", "3/2", "--u", "1/2", "--l", "1/3", "--beta", "3")
    res = json.loads(text)
    assert code == 0 and res["S"] == res["S_piecewise"] == "2/3"
    assert res["theorem2_bound"] == "3/8" and res["N0"] == "4/3"
    code, _ = run("formula", "--N", "1")
    assert code == 2


def test_verify_quick_suite():
    code, text = run("verify", "--suite", "formula", "--suite", "landscape", "--quick")
    assert code == 0 and text.count("PASS") == 2
    code, _ = run("verify", "--suite", "nope")
    assert code == 2


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_run_preset(fmt, tmp_path):
    path = tmp_path / f"r.{fmt}"
    code, text = run("run", "example3", "--format", fmt, "--out", str(path))
    assert code == 0 and text == ""
    assert path.read_text().startswith("{" if fmt == "json" else "key,value")


def test_run_config_file(tmp_path):
    from dlab.experiment import PRESETS

    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(PRESETS["example3"]))
    code, text = run("run", str(cfg))
    assert code == 0 and json.loads(text)["hard_ok"] is True
