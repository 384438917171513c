"""Unit tests for the CLI module (multiplier_lab.cli.main)."""

from __future__ import annotations

import json
from unittest.mock import patch

import pytest

from multiplier_lab.cli.commands import COMMANDS, Command, TransformConfig
from multiplier_lab.cli.main import (
    EXIT_CONFIG,
    EXIT_KEYBOARD_INTERRUPT,
    EXIT_PRECONDITION,
    EXIT_SUCCESS,
    EXIT_UNEXPECTED,
    EXIT_VERDICT_FAILED,
    SUBCOMMANDS,
    build_parser,
    main,
)
from multiplier_lab.config import DEFAULT_SEED
from multiplier_lab.core.fit import series_to_rows
from multiplier_lab.systems.exceptions import DegenerateGramianError
from tests.helpers import power_series

# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

_DYADIC_N = [2.0**k for k in range(1, 9)]


def _run(argv, capsys):
    """Run main and return the exit code with the captured stdout."""
    rc = main(argv)
    out = capsys.readouterr().out
    return rc, out


def _load(out_dir, command):
    return json.loads((out_dir / f"{command}.json").read_text())


def _raising_runner(exc):
    def runner(_config):
        raise exc

    return {"transform": Command(TransformConfig, runner)}


@pytest.fixture()
def series_csv(tmp_path):
    """A growing series N^{1/2} stored the way runs store their series."""
    path = tmp_path / "growth.csv"
    rows = series_to_rows(power_series(0.5, _DYADIC_N))
    path.write_text("\n".join(",".join(r) for r in rows) + "\n")
    return path


# ---------------------------------------------------------------------------
# TestBuildParser
# ---------------------------------------------------------------------------
class TestBuildParser:
    def test_every_subcommand_has_a_config(self):
        assert set(SUBCOMMANDS) == set(COMMANDS)

    def test_common_flags(self, tmp_path):
        args = build_parser().parse_args(
            [
                "zak",
                "--out", str(tmp_path),
                "--seed", "7",
                "--workers", "3",
                "--set", "M=32",
                "--set", "window=box",
                "--verbose",
                "--dry-run",
            ]
        )
        assert args.command == "zak"
        assert args.out == tmp_path
        assert args.seed == 7
        assert args.workers == 3
        assert args.overrides == ["M=32", "window=box"]
        assert args.verbose is True
        assert args.dry_run is True

    def test_defaults(self):
        args = build_parser().parse_args(["fit"])
        assert args.config is None
        assert args.out is None
        assert args.seed is None
        assert args.overrides == []
        assert args.dry_run is False

    def test_missing_subcommand(self):
        assert main([]) == EXIT_CONFIG

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == EXIT_SUCCESS
        assert "multiplier-lab" in capsys.readouterr().out


# ---------------------------------------------------------------------------
# TestDryRun
# ---------------------------------------------------------------------------
class TestDryRun:
    def test_defaults(self, capsys):
        rc, out = _run(["transform", "--dry-run"], capsys)
        assert rc == EXIT_SUCCESS
        data = json.loads(out)
        assert data["seed"] == DEFAULT_SEED
        assert data["workers"] == 1
        assert data["out"] == "runs"
        assert data["n"] == 256

    def test_overrides_are_coerced(self, capsys):
        rc, out = _run(
            ["tau-scan", "--dry-run", "--set", "qs=4, 4.5", "--set", "n=1024"], capsys
        )
        assert rc == EXIT_SUCCESS
        data = json.loads(out)
        assert data["qs"] == [4.0, 4.5]
        assert data["n"] == 1024

    def test_precedence(self, tmp_path, capsys):
        config = tmp_path / "lab.env"
        config.write_text("seed=5\nworkers=2\ntransform.n=128\ntransform.N=8\n")
        rc, out = _run(
            ["transform", "--config", str(config), "--set", "N=4", "--seed", "9", "--dry-run"],
            capsys,
        )
        assert rc == EXIT_SUCCESS
        data = json.loads(out)
        assert data["n"] == 128
        assert data["N"] == 4
        assert data["seed"] == 9
        assert data["workers"] == 2

    def test_hyphenated_section(self, tmp_path, capsys):
        config = tmp_path / "lab.env"
        config.write_text("sis-diagnostic.q=6\n")
        rc, out = _run(["sis-diagnostic", "--config", str(config), "--dry-run"], capsys)
        assert rc == EXIT_SUCCESS
        assert json.loads(out)["q"] == 6.0


# ---------------------------------------------------------------------------
# TestConfigErrors
# ---------------------------------------------------------------------------
class TestConfigErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ["transform", "--set", "n=abc"],
            ["transform", "--set", "nope=1"],
            ["transform", "--set", "n"],
            ["zeroset", "--set", "weight=line"],
            ["sobolev", "--set", "construction=samples"],
            ["fit"],
        ],
    )
    def test_invalid_settings(self, argv, capsys):
        assert main([*argv, "--dry-run"]) == EXIT_CONFIG
        assert "Config error" in capsys.readouterr().err

    def test_unknown_section(self, tmp_path):
        config = tmp_path / "lab.env"
        config.write_text("bogus.n=1\n")
        assert main(["transform", "--config", str(config), "--dry-run"]) == EXIT_CONFIG

    def test_global_section_is_restricted(self, tmp_path):
        config = tmp_path / "lab.env"
        config.write_text("n=64\n")
        assert main(["transform", "--config", str(config), "--dry-run"]) == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path):
        missing = tmp_path / "absent.env"
        assert main(["transform", "--config", str(missing)]) == EXIT_CONFIG

    def test_missing_series_file(self, tmp_path):
        rc = main(["fit", "--out", str(tmp_path), "--set", f"csv={tmp_path / 'none.csv'}"])
        assert rc == EXIT_CONFIG


# ---------------------------------------------------------------------------
# TestRuns
# ---------------------------------------------------------------------------
class TestRuns:
    def test_transform(self, tmp_path, capsys):
        rc, out = _run(
            ["transform", "--out", str(tmp_path), "--set", "n=64", "--set", "N=8"], capsys
        )
        assert rc == EXIT_SUCCESS
        assert out.startswith("transform: passed")
        data = _load(tmp_path, "transform")
        assert data["command"] == "transform"
        assert data["passed"] is True
        assert data["results"]["roundtrip_error"] < 1e-9
        assert data["reproducibility"]["config"]["n"] == 64
        assert "numpy" in data["reproducibility"]["versions"]

    def test_multnorm_of_unit_symbol(self, tmp_path):
        argv = ["multnorm", "--out", str(tmp_path), "--set", "n=64", "--set", "N=4"]
        assert main([*argv, "--set", "qs=4"]) == EXIT_SUCCESS
        results = _load(tmp_path, "multnorm")["results"]
        assert results["norm_2_2"] == pytest.approx(1.0)
        assert results["norm_2_inf"] == pytest.approx(1.0)
        assert results["norm_2_q"][0]["lower"] == pytest.approx(1.0)

    def test_runs_are_deterministic(self, tmp_path):
        argv = ["multnorm", "--out", str(tmp_path), "--set", "n=64", "--set", "N=4"]
        assert main([*argv, "--seed", "3"]) == EXIT_SUCCESS
        first = _load(tmp_path, "multnorm")
        assert main([*argv, "--seed", "3"]) == EXIT_SUCCESS
        second = _load(tmp_path, "multnorm")
        first.pop("generated_at")
        second.pop("generated_at")
        assert first == second

    def test_construct_writes_tables(self, tmp_path):
        argv = ["construct", "--out", str(tmp_path), "--set", "kind=h_beta", "--set", "n=32"]
        assert main([*argv, "--set", "xi_max=8"]) == EXIT_SUCCESS
        data = _load(tmp_path, "construct")
        assert "construct_samples.csv" in data["csv_files"]
        assert "construct_transform.csv" in data["csv_files"]
        lines = (tmp_path / "construct_samples.csv").read_text().splitlines()
        assert lines[0] == "x,value"
        assert len(lines) == 33


# ---------------------------------------------------------------------------
# TestFitCommand
# ---------------------------------------------------------------------------
class TestFitCommand:
    def test_expected_verdict(self, tmp_path, series_csv):
        argv = ["fit", "--out", str(tmp_path), "--set", f"csv={series_csv}"]
        assert main([*argv, "--set", "expect=divergent"]) == EXIT_SUCCESS
        data = _load(tmp_path, "fit")
        assert data["results"]["assessment"]["verdict"] == "divergent"
        assert data["results"]["fit"]["slope"] == pytest.approx(0.5)

    def test_unexpected_verdict(self, tmp_path, series_csv):
        argv = ["fit", "--out", str(tmp_path), "--set", f"csv={series_csv}"]
        assert main([*argv, "--set", "expect=convergent"]) == EXIT_VERDICT_FAILED


# ---------------------------------------------------------------------------
# TestErrorHandling
# ---------------------------------------------------------------------------
class TestErrorHandling:
    def test_precondition_error(self, tmp_path, capsys):
        argv = ["sis-diagnostic", "--out", str(tmp_path), "--set", "generators=half_box"]
        assert main([*argv, "--set", "ns=1,2,4,8"]) == EXIT_PRECONDITION
        assert "Precondition error" in capsys.readouterr().err

    def test_scale_finer_than_grid(self, tmp_path):
        argv = ["zeroset", "--out", str(tmp_path), "--set", "weight=one", "--set", "n=64"]
        assert main([*argv, "--set", "scales=3,6"]) == EXIT_PRECONDITION

    def test_failed_expectation(self, tmp_path):
        argv = ["sis-diagnostic", "--out", str(tmp_path), "--set", "generators=box"]
        argv += ["--set", "ns=1,2,4,8", "--set", "expect_holds=false"]
        assert main(argv) == EXIT_VERDICT_FAILED
        assert _load(tmp_path, "sis-diagnostic")["results"]["report"]["holds"] is True

    @pytest.mark.parametrize(
        ("exc", "code"),
        [
            (KeyboardInterrupt(), EXIT_KEYBOARD_INTERRUPT),
            (RuntimeError("boom"), EXIT_UNEXPECTED),
            (DegenerateGramianError("singular"), EXIT_PRECONDITION),
        ],
    )
    def test_runner_exceptions(self, tmp_path, exc, code):
        with patch.dict(COMMANDS, _raising_runner(exc)):
            assert main(["transform", "--out", str(tmp_path)]) == code

    def test_verbose_prints_traceback(self, tmp_path, capsys):
        with patch.dict(COMMANDS, _raising_runner(RuntimeError("boom"))):
            main(["transform", "--out", str(tmp_path), "--verbose"])
        err = capsys.readouterr().err
        assert "Unexpected error: boom" in err
        assert "Traceback" in err
