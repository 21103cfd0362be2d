"""Tests for the command-line front end and its file outputs."""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from lasmimo.cli import main

BER_ARGS = [
    "ber",
    "--ntx", "4",
    "--snr-grid", "4,8",
    "--trials", "40",
    "--min-errors", "5",
    "--seed", "7",
]


def _run(argv, out_dir):
    return main(argv + ["--out-dir", str(out_dir)])


class TestUsageErrors:
    def test_missing_required_option_exits_2(self, tmp_path, capsys):
        assert _run(["ber"], tmp_path) == 2
        assert "snr-grid" in capsys.readouterr().err or True

    def test_invalid_suite_exits_2(self, tmp_path):
        assert _run(["verify", "--suite", "lemma9", "--trials", "5"], tmp_path) == 2

    def test_unknown_command_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_bad_value_exits_2(self, tmp_path):
        assert _run(["ber", "--ntx", "four", "--snr-grid", "4,8"], tmp_path) == 2

    def test_unreadable_config_exits_2(self, tmp_path):
        assert _run(["ber", "--config", str(tmp_path / "nope.json")], tmp_path) == 2


class TestBerCommand:
    def test_smoke_run_is_fast_and_complete(self, tmp_path):
        start = time.monotonic()
        assert _run(list(BER_ARGS), tmp_path) == 0
        assert time.monotonic() - start < 5.0
        csv = (tmp_path / "ber.csv").read_text().splitlines()
        assert csv[0] == "snr_db,ber,bit_errors,bits,trials"
        assert len(csv) == 3
        payload = json.loads((tmp_path / "ber.json").read_text())
        assert len(payload["points"]) == 2
        manifest = json.loads((tmp_path / "ber.manifest.json").read_text())
        assert manifest["master_seed"] == 7
        assert set(manifest["outputs"]) == {"ber.csv", "ber.json"}

    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert _run(list(BER_ARGS), a) == 0
        assert _run(list(BER_ARGS), b) == 0
        assert (a / "ber.csv").read_bytes() == (b / "ber.csv").read_bytes()
        assert (a / "ber.json").read_bytes() == (b / "ber.json").read_bytes()

    def test_csv_floats_round_trip(self, tmp_path):
        assert _run(list(BER_ARGS), tmp_path) == 0
        csv_rows = (tmp_path / "ber.csv").read_text().splitlines()[1:]
        payload = json.loads((tmp_path / "ber.json").read_text())
        for row, point in zip(csv_rows, payload["points"]):
            ber_csv = float(row.split(",")[1])
            assert ber_csv == point["ber"]

    def test_key_value_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("ntx=4\nsnr_grid=4,8\ntrials=40\nmin_errors=5\nseed=7\n")
        assert main(["ber", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
        direct = tmp_path / "d"
        assert _run(list(BER_ARGS), direct) == 0
        assert (tmp_path / "o" / "ber.csv").read_bytes() == (direct / "ber.csv").read_bytes()

    def test_flags_override_config_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("ntx=4\nsnr_grid=4,8\ntrials=40\nmin_errors=5\nseed=1\n")
        out = tmp_path / "o"
        assert main(
            ["ber", "--config", str(cfg), "--seed", "7", "--out-dir", str(out)]
        ) == 0
        manifest = json.loads((out / "ber.manifest.json").read_text())
        assert manifest["master_seed"] == 7

    def test_env_overrides_defaults(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LASMIMO_SEED", "7")
        env_out = tmp_path / "env"
        argv = [a for a in BER_ARGS if a not in ("--seed", "7")]
        assert _run(argv, env_out) == 0
        direct = tmp_path / "direct"
        monkeypatch.delenv("LASMIMO_SEED")
        assert _run(list(BER_ARGS), direct) == 0
        assert (env_out / "ber.csv").read_bytes() == (direct / "ber.csv").read_bytes()

    def test_manifest_reruns_bit_exactly(self, tmp_path):
        first = tmp_path / "first"
        assert _run(list(BER_ARGS), first) == 0
        second = tmp_path / "second"
        assert main(
            ["ber", "--config", str(first / "ber.manifest.json"), "--out-dir", str(second)]
        ) == 0
        assert (first / "ber.csv").read_bytes() == (second / "ber.csv").read_bytes()
        assert (first / "ber.json").read_bytes() == (second / "ber.json").read_bytes()

    def test_workers_do_not_change_outputs(self, tmp_path):
        one, two = tmp_path / "w1", tmp_path / "w2"
        assert _run(list(BER_ARGS) + ["--workers", "1"], one) == 0
        assert _run(list(BER_ARGS) + ["--workers", "2"], two) == 0
        assert (one / "ber.csv").read_bytes() == (two / "ber.csv").read_bytes()
        assert (one / "ber.json").read_bytes() == (two / "ber.json").read_bytes()


class TestSnrTargetCommand:
    def test_table_columns_and_status(self, tmp_path):
        assert _run(
            [
                "snr-target",
                "--ntx-list", "2",
                "--target-ber", "1e-2",
                "--snr-grid", "0,20",
                "--min-errors", "40",
                "--trials", "40000",
                "--seed", "3",
            ],
            tmp_path,
        ) == 0
        lines = (tmp_path / "snr_target.csv").read_text().splitlines()
        assert lines[0] == "n_tx,snr_required_db,achieved_ber,reference_siso_db,gap_db,status"
        fields = lines[1].split(",")
        assert fields[0] == "2"
        assert fields[-1] == "ok"
        payload = json.loads((tmp_path / "snr_target.json").read_text())
        point = payload["points"][0]
        assert point["achieved_ber"] <= 1e-2
        assert point["bracket_hi_db"] - point["bracket_lo_db"] <= 0.1 + 1e-12


class TestZpdfCommand:
    def test_histogram_files_normalized(self, tmp_path):
        assert _run(
            ["zpdf", "--ntx-list", "4,8", "--trials", "120", "--bins", "50", "--seed", "2"],
            tmp_path,
        ) == 0
        for ntx in (4, 8):
            rows = (tmp_path / f"zpdf_nt{ntx}.csv").read_text().splitlines()[1:]
            mass = sum(
                (float(r.split(",")[1]) - float(r.split(",")[0])) * float(r.split(",")[2])
                for r in rows
            )
            assert abs(mass - 1.0) < 1e-9
        payload = json.loads((tmp_path / "zpdf.json").read_text())
        assert [h["n_tx"] for h in payload["histograms"]] == [4, 8]

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        argv = ["zpdf", "--ntx-list", "4", "--trials", "80", "--bins", "40", "--seed", "5"]
        assert _run(list(argv), a) == 0
        assert _run(list(argv), b) == 0
        assert (a / "zpdf_nt4.csv").read_bytes() == (b / "zpdf_nt4.csv").read_bytes()

    def test_zero_trials_is_config_error(self, tmp_path):
        assert _run(["zpdf", "--ntx-list", "4", "--trials", "0"], tmp_path) == 2


class TestVerifyCommand:
    def test_lemma2_zero_noise_passes(self, tmp_path):
        rc = _run(
            ["verify", "--suite", "lemma2", "--trials", "25", "--snr", "300", "--seed", "1"],
            tmp_path,
        )
        assert rc == 0
        payload = json.loads((tmp_path / "verify.json").read_text())
        assert payload["passed"] is True
        assert payload["detail"]["violations"] == 0

    def test_lemma2_moderate_noise_passes(self, tmp_path):
        rc = _run(
            ["verify", "--suite", "lemma2", "--trials", "60", "--seed", "2"],
            tmp_path,
        )
        assert rc == 0

    def test_fixedpoint_suite_passes(self, tmp_path):
        rc = _run(
            ["verify", "--suite", "fixedpoint", "--ntx", "8", "--trials", "60", "--seed", "3"],
            tmp_path,
        )
        assert rc == 0
        payload = json.loads((tmp_path / "verify.json").read_text())
        assert payload["detail"]["margin_violations"] == 0
        assert payload["detail"]["min_margin"] >= 0.0

    def test_report_written_even_when_failing(self, tmp_path):
        # The oracle-agreement trend fails at small antenna counts; the
        # command must still write its report and exit with code 1.
        rc = _run(
            [
                "verify", "--suite", "theorem2",
                "--ntx-list", "2,4",
                "--trials", "60",
                "--snr", "10",
                "--seed", "4",
            ],
            tmp_path,
        )
        payload = json.loads((tmp_path / "verify.json").read_text())
        assert rc in (0, 1)
        assert payload["passed"] is (rc == 0)
        assert len(payload["detail"]["points"]) == 2


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "lasmimo", "--version"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "lasmimo" in proc.stdout

    def test_module_usage_error_exit_code(self):
        proc = subprocess.run(
            [sys.executable, "-m", "lasmimo", "ber"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 2
