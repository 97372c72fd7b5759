import json
import subprocess
import sys

import pytest

from fracperim import cli
from fracperim.errors import NumericalError

ELLIPSE = {"kind": "ellipsoid", "dim": 2, "semiaxes": [1.2, 1 / 1.2]}


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def run(argv, capsys):
    code = cli.run_cli(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestCompute:
    def test_convex_shape(self, tmp_path, capsys):
        shape = write(tmp_path, "e.json", ELLIPSE)
        code, out, _ = run(["compute", "--shape", shape, "--s", "0.5", "--fraenkel"], capsys)
        assert code == 0
        rep = json.loads(out)["reports"][0]
        assert rep["perimeter_estimate"]["method"] == "quadrature"
        assert rep["ratio"] == pytest.approx(2.2684283184, rel=1e-8)

    def test_byte_identical(self, tmp_path, capsys):
        shape = write(tmp_path, "t.json", {"kind": "two_ball", "eps": 0.1})
        a = run(["compute", "--shape", shape, "--budget", "20000", "--seed", "4"], capsys)[1]
        b = run(["compute", "--shape", shape, "--budget", "20000", "--seed", "4"], capsys)[1]
        assert a == b and json.loads(a)["reports"][0]["lambda0"] == 2.0

    def test_radial_shape_and_out_file(self, tmp_path, capsys):
        shape = write(tmp_path, "r.json", {"grid": {"n": 2, "resolution": 128}, "u": {"harmonic": [[2, 0.03]]}})
        out_path = tmp_path / "o.json"
        code, out, _ = run(["compute", "--shape", shape, "--s", "0.25", "0.75", "--out", str(out_path)], capsys)
        assert code == 0 and out_path.read_text() == out
        assert len(json.loads(out)["reports"]) == 2

    def test_config_file_and_override(self, tmp_path, capsys):
        shape = write(tmp_path, "e.json", ELLIPSE)
        cfg = write(tmp_path, "c.json", {"shape": shape, "s": [0.25], "seed": 3})
        code, out, _ = run(["compute", "--config", cfg, "--s", "0.75"], capsys)
        opts = json.loads(out)["options"]
        assert code == 0 and opts["s"] == [0.75] and opts["seed"] == 3

    def test_unknown_config_key(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.json", {"colour": "red"})
        code, _, err = run(["compute", "--config", cfg], capsys)
        assert code == 2 and json.loads(err)["error"] == "config"


class TestErrors:
    def test_bad_s(self, tmp_path, capsys):
        shape = write(tmp_path, "e.json", ELLIPSE)
        code, _, err = run(["compute", "--shape", shape, "--s", "1.2"], capsys)
        assert code == 2 and json.loads(err)["error"] == "bad_parameter"

    def test_bad_subcommand(self, capsys):
        code, _, err = run(["explode"], capsys)
        assert code == 2 and json.loads(err)["error"] == "config"

    def test_missing_shape(self, capsys):
        code, _, err = run(["compute"], capsys)
        assert code == 2

    def test_numerical_failure(self, tmp_path, capsys, monkeypatch):
        def boom(*a, **k):
            raise NumericalError("no convergence")

        monkeypatch.setattr(cli, "asymmetry_report", boom)
        shape = write(tmp_path, "e.json", ELLIPSE)
        code, _, err = run(["compute", "--shape", shape], capsys)
        assert code == 3 and json.loads(err) == {"error": "numerical_failure", "message": "no convergence"}


class TestSweepVerifyReport:
    def test_sweep_and_report(self, tmp_path, capsys):
        fam = write(tmp_path, "f.json", {"kind": "ellipsoids", "params": [0.05, 0.1, 0.15, 0.2, 0.25, 0.3]})
        out = str(tmp_path / "rows.csv")
        code, text, _ = run(["sweep", "--family", fam, "--s", "0.5", "--out", out, "--workers", "3"], capsys)
        assert code == 0 and json.loads(text)["rows"] == 6
        code, text, _ = run(["report", "--results", out], capsys)
        assert code == 0
        assert json.loads(text)["constant"]["slope"] == pytest.approx(0.49775, abs=1e-4)

    def test_sweep_needs_out(self, tmp_path, capsys):
        fam = write(tmp_path, "f.json", {"kind": "balls", "params": [1.0]})
        assert run(["sweep", "--family", fam], capsys)[0] == 2

    def test_counterexample_suite_expected_failures(self, tmp_path, capsys):
        out = tmp_path / "v.json"
        code, text, _ = run(["verify", "--suite", "counterexample", "--out", str(out)], capsys)
        d = json.loads(text)
        assert code == 0 and d["all_as_expected"]
        assert all(not v["passed"] and v["expected_failure"] for v in d["verdicts"])
        code, text, _ = run(["report", "--verdicts", str(out)], capsys)
        assert json.loads(text)["verdicts"]["expected_failures"] == 2

    def test_failing_check_exit_code(self, capsys):
        code, text, _ = run(["verify", "--suite", "convex", "--c-bound", "0.5", "--budget", "100000"], capsys)
        assert code == 1 and not json.loads(text)["all_as_expected"]

    def test_report_needs_input(self, capsys):
        assert run(["report"], capsys)[0] == 2


def test_module_entry_point(tmp_path):
    shape = write(tmp_path, "e.json", ELLIPSE)
    proc = subprocess.run([sys.executable, "-m", "fracperim", "compute", "--shape", shape], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["version"]
