"""Tests for the fdcache command line."""

from __future__ import annotations

from pathlib import Path

import pytest

from fdcache import cli
from fdcache.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, main
from fdcache.experiment import read_results
from shared.errors import NumericalError

ANALYTIC_SWEEP = "sweep = eta\nvalues = 0.1, 1\nmetric = p_hit\noutputs = analytic\n"


@pytest.fixture
def config_file(tmp_path: Path) -> Path:
    path = tmp_path / "exp.conf"
    path.write_text("name = small\n" + ANALYTIC_SWEEP, encoding="utf-8")
    return path


class TestRun:
    def test_writes_csv(self, config_file: Path, tmp_path: Path) -> None:
        out = tmp_path / "res" / "small.csv"
        assert main(["run", str(config_file), "--out", str(out)]) == 0
        rows = read_results(out)
        assert [row.sweep_value for row in rows] == [0.1, 1.0]

    def test_default_output_path(
        self, config_file: Path, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        monkeypatch.chdir(tmp_path)
        assert main(["run", str(config_file)]) == 0
        assert (tmp_path / "results" / "small.csv").is_file()

    def test_one_file_per_series_value(self, tmp_path: Path) -> None:
        path = tmp_path / "series.conf"
        path.write_text(ANALYTIC_SWEEP + "series = kappa\nseries_values = 0.1, 0.6\n", "utf-8")
        out = tmp_path / "series.csv"
        assert main(["run", str(path), "--out", str(out)]) == 0
        assert (tmp_path / "series_kappa=0.1.csv").is_file()
        assert (tmp_path / "series_kappa=0.6.csv").is_file()

    def test_summary_table_on_stdout(
        self, config_file: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        main(["run", str(config_file), "--out", str(tmp_path / "o.csv")])
        assert "small: p_hit vs eta" in capsys.readouterr().out

    def test_overrides_are_validated(self, config_file: Path, tmp_path: Path) -> None:
        code = main(["run", str(config_file), "--trials", "0", "--out", str(tmp_path / "o.csv")])
        assert code == EXIT_CONFIG


class TestExitCodes:
    def test_no_config(self) -> None:
        assert main(["run"]) == EXIT_CONFIG

    def test_missing_file(self, tmp_path: Path) -> None:
        assert main(["run", str(tmp_path / "absent.conf")]) == EXIT_CONFIG

    def test_invalid_field(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        path = tmp_path / "bad.conf"
        path.write_text("alpha1 = 2\n", encoding="utf-8")
        assert main(["run", str(path)]) == EXIT_CONFIG
        assert "alpha1" in capsys.readouterr().err

    def test_huge_threshold_is_a_config_error(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        path = tmp_path / "loud.conf"
        path.write_text("theta_db = 4000\n", encoding="utf-8")
        assert main(["show-config", str(path)]) == EXIT_CONFIG
        assert "theta_db" in capsys.readouterr().err

    def test_unknown_preset(self) -> None:
        assert main(["show-config", "--preset", "nope"]) == EXIT_CONFIG

    def test_unwritable_output(self, config_file: Path, tmp_path: Path) -> None:
        blocker = tmp_path / "blocker"
        blocker.write_text("", encoding="utf-8")
        assert main(["run", str(config_file), "--out", str(blocker / "o.csv")]) == EXIT_IO

    def test_numerical_failure(
        self, config_file: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        def fail(_spec: object) -> list[object]:
            raise NumericalError("radial kernel missed its tolerance", 1e-3)

        monkeypatch.setattr(cli, "run_experiment", fail)
        assert main(["run", str(config_file)]) == EXIT_NUMERICAL

    def test_version(self, capsys: pytest.CaptureFixture[str]) -> None:
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
        assert "fdcache" in capsys.readouterr().out


class TestShowConfig:
    def test_preset(self, capsys: pytest.CaptureFixture[str]) -> None:
        assert main(["show-config", "--preset", "fig2"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("# effective configuration of fig2")
        assert "sweep = eta" in out

    def test_file_over_preset(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        path = tmp_path / "o.conf"
        path.write_text("seed = 42\n", encoding="utf-8")
        assert main(["show-config", str(path), "--preset", "fig3"]) == 0
        out = capsys.readouterr().out
        assert "seed = 42" in out
        assert "name = fig3" in out
