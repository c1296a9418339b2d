"""CLI surface: subcommands, file formats, exit codes, reproducibility."""

import json
import math
import os
import subprocess
import sys

import pytest

from divwin import Window, derive, run, z0
from divwin.cli import comparison_report, main
from divwin.params import xi_to_z

XIMAX_1E3 = (math.log(4) - 1) * math.sqrt(math.log(math.log(1e3)))


def read(path):
    with open(path) as fh:
        return fh.read()


class TestParamsCommand:
    def test_xi_zero_at_z0(self, capsys):
        assert main(["params", "--y", "10000", "--z", str(z0(1e4))]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert abs(payload["params"]["xi"]) < 1e-9

    def test_beta_zero_at_ey(self, capsys):
        assert main(["params", "--y", "10000", "--z", str(math.e * 1e4)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert abs(payload["params"]["beta"]) < 1e-9

    def test_half_e_window(self, capsys):
        assert main(["params", "--y", "10000", "--z", str(math.exp(0.5) * 1e4), "--x", "100000000"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert math.isclose(payload["params"]["beta"], 0.312182503301773, rel_tol=1e-9)
        assert payload["flags"] == {"paper_xy_range": True, "paper_z_range": True}

    def test_domain_error_exit_code(self, capsys):
        assert main(["params", "--y", "2.0", "--z", "4.0"]) == 2


class TestSieveCommand:
    def test_histogram_csv(self, tmp_path, capsys):
        out = str(tmp_path)
        assert main(["sieve", "--x", "100", "--y", "9", "--z", "12", "--out-dir", out]) == 0
        lines = read(os.path.join(out, "histogram.csv")).splitlines()
        assert lines[0] == "0,74"
        assert lines[1] == "1,25"
        assert lines[2] == "2,1"
        assert lines[-1] == "overflow,0"
        manifest = json.loads(read(os.path.join(out, "manifest.json")))
        assert manifest["x"] == 100 and manifest["r_max"] == 64
        assert "H,26" in capsys.readouterr().out

    def test_h_line_1000(self, tmp_path, capsys):
        assert main(["sieve", "--x", "1000", "--y", "9", "--z", "12", "--out-dir", str(tmp_path)]) == 0
        assert "H,242" in capsys.readouterr().out

    def test_resume_identical(self, tmp_path, capsys):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        ck = str(tmp_path / "ck.json")
        args = ["sieve", "--x", "100000", "--y", "9", "--z", "12", "--segment-size", "16384"]
        assert main(args + ["--out-dir", a]) == 0
        # run once with a checkpoint, then resume on top of the finished state
        assert main(args + ["--out-dir", b, "--checkpoint", ck]) == 0
        assert main(args + ["--out-dir", b, "--checkpoint", ck]) == 0
        assert read(os.path.join(a, "histogram.csv")) == read(os.path.join(b, "histogram.csv"))

    def test_manifest_mismatch_exit_4(self, tmp_path, capsys):
        ck = str(tmp_path / "ck.json")
        base = ["--y", "9", "--z", "12", "--out-dir", str(tmp_path), "--checkpoint", ck]
        assert main(["sieve", "--x", "5000"] + base) == 0
        assert main(["sieve", "--x", "6000"] + base) == 4


class TestClassifyCommand:
    def test_census_csv(self, tmp_path, capsys):
        out = str(tmp_path)
        assert main(["classify", "--x", "1000", "--y", "9", "--z", "12", "--out-dir", out]) == 0
        lines = read(os.path.join(out, "classes.csv")).splitlines()
        split = lines.index("pair_bucket,j,count")
        classes = dict(line.split(",") for line in lines[1:split])
        assert classes == {"N0": "23", "N1": "0", "N2": "0", "N3": "7", "N4": "0", "N5": "0"}
        assert sum(int(v) for v in classes.values()) == 30
        assert lines[split + 1] == "N3,,9"

    def test_empty_window(self, tmp_path, capsys):
        assert main(["classify", "--x", "1000", "--y", "20", "--z", "20.5", "--out-dir", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        for lab in ("N0", "N1", "N2", "N3", "N4", "N5"):
            assert f"{lab},0" in out


class TestScanCommand:
    def test_endpoints_reproduce_boundaries(self, tmp_path, capsys):
        out = str(tmp_path)
        rc = main(
            ["scan", "--x", "20000", "--y", "1000", "--xi", "0.0", str(XIMAX_1E3), "--out-dir", out]
        )
        assert rc == 0
        rep0 = json.loads(read(os.path.join(out, "xi_00", "report.json")))
        rep1 = json.loads(read(os.path.join(out, "xi_01", "report.json")))
        # serialized floats carry 12 significant digits; the internal value
        # is xi_to_z exactly, so it matches the boundary formulas to ~1 ulp
        assert rep0["window"]["z"] == float(f"{xi_to_z(1000.0, 0.0):.12g}")
        assert math.isclose(rep0["window"]["z"], z0(1000.0), rel_tol=1e-11)
        assert math.isclose(rep1["window"]["z"], math.e * 1000.0, rel_tol=1e-11)
        assert abs(xi_to_z(1000.0, 0.0) - z0(1000.0)) <= 2 * math.ulp(z0(1000.0))
        assert abs(xi_to_z(1000.0, XIMAX_1E3) - math.e * 1000.0) <= 4 * math.ulp(math.e * 1000.0)
        summary = read(os.path.join(out, "scan_summary.csv")).splitlines()
        assert summary[0] == "xi,h2_frac,envelope_ratio,quotient"
        assert len(summary) == 3

    def test_all_ratio_fields_populated(self, tmp_path):
        out = str(tmp_path)
        assert main(["scan", "--x", "100000", "--y", "1000", "--xi", "0.2", "--out-dir", out]) == 0
        rep = json.loads(read(os.path.join(out, "xi_00", "report.json")))
        for key, val in rep["ratios"].items():
            assert val is not None and val > 0, key
        assert rep["flags"]["in_range"] is True
        assert rep["empirical"]["h"] > 0

    def test_out_of_range_refused(self, tmp_path):
        assert main(["scan", "--x", "1000", "--y", "1000", "--xi", "0.9", "--out-dir", str(tmp_path)]) == 2
        assert (
            main(
                [
                    "scan", "--x", "1000", "--y", "1000", "--xi", "0.9",
                    "--allow-out-of-range", "--out-dir", str(tmp_path),
                ]
            )
            == 0
        )

    def test_scan_reports_reproducible(self, tmp_path):
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        for out in (a, b):
            assert main(["scan", "--x", "50000", "--y", "1000", "--xi", "0.1", "0.3", "--out-dir", out]) == 0
        for rel in ("scan_summary.csv", "xi_00/report.json", "xi_01/report.json", "xi_00/histogram.csv"):
            assert read(os.path.join(a, rel)) == read(os.path.join(b, rel))


class TestOracleAndProbeCommands:
    def test_oracle(self, capsys):
        assert main(["oracle", "--x", "100", "--y", "9", "--z", "12"]) == 0
        out = capsys.readouterr().out
        assert "H,26" in out

    def test_probe_lemma2(self, capsys):
        assert main(["probe", "lemma2", "10", "0", "0", "1000"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["value"] == 1.998046875

    def test_probe_lemma3(self, capsys):
        assert main(["probe", "lemma3", "100", "50", "5", "10", "0", "0"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["count"] == 22

    def test_probe_lemma1(self, capsys):
        assert main(["probe", "lemma1", "3", "10", "1", "0", "1000"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert math.isclose(payload["value"], 0.415780758017, rel_tol=1e-9)
        assert payload["c_hat"] == 0.0

    def test_probe_guard_exit_2(self, capsys):
        assert main(["probe", "lemma3", "100000000", "50", "5", "10", "0", "0"]) == 2


class TestEnvAndEntryPoint:
    def test_out_dir_env_var(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("DIVWIN_OUT_DIR", str(tmp_path))
        assert main(["sieve", "--x", "100", "--y", "9", "--z", "12"]) == 0
        assert os.path.exists(tmp_path / "histogram.csv")

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "divwin", "oracle", "--x", "100", "--y", "9", "--z", "12"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "H,26" in proc.stdout


class TestComparisonReport:
    def test_hall_flags_small_window(self):
        win = Window(1000, 9.0, 12.0)
        dp = derive(win)
        rep = comparison_report(win, dp, run(win))
        assert math.isclose(rep["envelopes"]["hall_prediction"], 234.935604817172, rel_tol=1e-9)
        assert rep["flags"]["hall_x_ok"] is True  # 1000 clears exp(log z loglog z) = 9.6
        assert rep["flags"]["hall_range_ok"] is False  # xi far below the admitted interval
        assert rep["flags"]["in_range"] is False
        assert rep["envelopes"]["envelope_h"] is None
        assert rep["ratios"]["h_over_envelope"] is None

    def test_in_range_report_finite(self):
        win = Window(10**5, 1e3, xi_to_z(1e3, 0.25))
        dp = derive(win)
        rep = comparison_report(win, dp, run(win))
        assert rep["flags"]["in_range"] is True
        assert rep["flags"]["hall_x_ok"] is False  # desk scale: threshold is astronomically large
        assert rep["envelopes"]["envelope_h"] > 0
        assert rep["empirical"]["moment"] == sum(
            10**5 // d for d in range(1001, math.floor(win.z) + 1)
        )

    def test_float_formatting_stable(self):
        from divwin.cli import dumps_report

        text = dumps_report({"a": 1 / 3, "b": [2.0 / 7.0], "c": {"d": 10.0}})
        assert '"a": 0.333333333333' in text
        assert text == dumps_report(json.loads(text))
