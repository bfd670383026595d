"""Tests for the conemapr command line."""

import json

import pytest
from typer.testing import CliRunner

from conemapr import cli
from conemapr.config import settings
from conemapr.exceptions import SolverError
from conemapr.schemas.montecarlo import MseRecord
from conemapr.services import montecarlo
from conemapr.services.conic import DUMP_HEADER

runner = CliRunner()

FAST = ["--threads", "1", "--no-plot"]


def _invoke(*args: str):
    return runner.invoke(cli.app, [*args, *FAST])


def _csv_lines(out) -> list[str]:
    return (out / "results.csv").read_text().splitlines()


class TestSingleShot:
    """Tests for --mode single-shot."""

    def test_prints_table(self, tmp_path):
        result = _invoke("--mode", "single-shot", "--seed", "7", "--out", str(tmp_path))

        assert result.exit_code == 0, result.output
        assert "Single shot" in result.output
        assert "eig ratio" in result.output
        assert not (tmp_path / "results.csv").exists()

    def test_run_meta(self, tmp_path):
        result = _invoke("--seed", "7", "--noise", "1e-5", "--out", str(tmp_path))

        assert result.exit_code == 0, result.output
        lines = (tmp_path / "run_meta.txt").read_text().splitlines()
        assert lines[0] == "seed: 7"
        assert lines[1].startswith("version: ")
        config = json.loads(lines[2].removeprefix("config: "))
        assert config["mode"] == "single-shot"
        assert config["noise"] == 1e-5
        assert json.loads(lines[3].removeprefix("settings: "))["solver"] == settings.solver

    def test_dump_problem(self, tmp_path):
        result = _invoke("--seed", "3", "--dump-problem", "--out", str(tmp_path))

        assert result.exit_code == 0, result.output
        lines = (tmp_path / "problem.txt").read_text().splitlines()
        assert lines[0].startswith(f"{DUMP_HEADER} dim=16 ")
        assert lines[1].startswith("obj ")

    def test_numerical_failure_exit_code(self, tmp_path, monkeypatch):
        def failing(*args, **kwargs):
            raise SolverError("solver gave up", backend="clarabel")

        monkeypatch.setattr(montecarlo, "run_single_shot", failing)
        result = _invoke("--seed", "1", "--out", str(tmp_path))

        assert result.exit_code == cli.EXIT_NUMERICAL
        assert (tmp_path / "run_meta.txt").exists()


class TestSweeps:
    """Tests for the sweep modes."""

    def test_noise_sweep_from_config(self, tmp_path):
        config = tmp_path / "sweep.json"
        config.write_text(
            json.dumps(
                {
                    "mode": "noise-sweep",
                    "seed": 2,
                    "geometries": 1,
                    "runs": 2,
                    "noise_powers": [1e-5, 1e-4, 1e-3],
                }
            )
        )
        out = tmp_path / "out"
        result = _invoke("--config", str(config), "--out", str(out))

        assert result.exit_code == 0, result.output
        lines = _csv_lines(out)
        assert len(lines) == 7
        assert lines[0] == ",".join(
            ["axis_value", "estimator", "mse_angle", "mse_g", "crlb_angle", "crlb_g", "failures"]
        )
        assert [line.split(",")[1] for line in lines[1:]] == ["proposed", "mle"] * 3

    def test_flags_override_config(self, tmp_path):
        config = tmp_path / "sweep.json"
        config.write_text(json.dumps({"mode": "noise-sweep", "geometries": 3, "runs": 50}))
        out = tmp_path / "out"
        result = _invoke(
            "--config", str(config), "--geometries", "1", "--runs", "2",
            "--noise", "1e-4", "--out", str(out),
        )

        assert result.exit_code == 0, result.output
        lines = _csv_lines(out)
        assert len(lines) == 3
        assert all(float(line.split(",")[0]) == 1e-4 for line in lines[1:])

    def test_deterministic(self, tmp_path):
        args = ("--mode", "range-sweep", "--seed", "9", "--geometries", "1", "--runs", "2")
        first = _invoke(*args, "--out", str(tmp_path / "a"))
        second = _invoke(*args, "--out", str(tmp_path / "b"))

        assert first.exit_code == second.exit_code == 0
        assert (tmp_path / "a" / "results.csv").read_bytes() == (
            tmp_path / "b" / "results.csv"
        ).read_bytes()

    def test_crlb_only(self, tmp_path):
        result = _invoke(
            "--mode", "crlb-only", "--geometries", "1", "--runs", "3", "--out", str(tmp_path)
        )

        assert result.exit_code == 0, result.output
        rows = [line.split(",") for line in _csv_lines(tmp_path)[1:]]
        assert len(rows) == 3
        for row in rows:
            assert row[1] == "crlb"
            assert row[2:4] == ["nan", "nan"]
            assert float(row[4]) > 0.0

    def test_plots_written(self, tmp_path):
        result = runner.invoke(
            cli.app,
            [
                "--mode", "crlb-only", "--geometries", "1", "--runs", "2",
                "--threads", "1", "--db", "--out", str(tmp_path),
            ],
        )

        assert result.exit_code == 0, result.output
        assert (tmp_path / "angle.svg").exists()
        assert (tmp_path / "g.svg").exists()

    def test_partial_results_kept(self, tmp_path, monkeypatch):
        """Rows finished before a failure stay in results.csv."""

        def failing_sweep(cfg, params, axis):
            yield MseRecord(
                axis_value=1e-5,
                estimator="proposed",
                mse_angle=1e-5,
                mse_g=1e-11,
                crlb_angle=9e-6,
                crlb_g=9e-12,
                trials=2,
            )
            raise SolverError("solver gave up")

        monkeypatch.setattr(montecarlo, "iter_sweep", failing_sweep)
        result = _invoke("--mode", "noise-sweep", "--out", str(tmp_path))

        assert result.exit_code == cli.EXIT_NUMERICAL
        lines = _csv_lines(tmp_path)
        assert len(lines) == 2
        assert lines[1].startswith("1.0000000000000001e-05,proposed,")


class TestConfigErrors:
    """Invalid configurations exit with code 2."""

    def test_too_few_sensors(self, tmp_path):
        result = _invoke("--sensors", "3", "--out", str(tmp_path))
        assert result.exit_code == cli.EXIT_CONFIG

    def test_bad_json(self, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text("{not json")
        result = _invoke("--config", str(config), "--out", str(tmp_path))
        assert result.exit_code == cli.EXIT_CONFIG

    def test_unknown_key(self, tmp_path):
        config = tmp_path / "extra.json"
        config.write_text(json.dumps({"sensor_count": 12}))
        result = _invoke("--config", str(config), "--out", str(tmp_path))
        assert result.exit_code == cli.EXIT_CONFIG

    def test_unknown_estimator(self, tmp_path):
        config = tmp_path / "est.json"
        config.write_text(json.dumps({"estimators": ["music"]}))
        result = _invoke("--config", str(config), "--out", str(tmp_path))
        assert result.exit_code == cli.EXIT_CONFIG

    def test_nothing_written(self, tmp_path):
        out = tmp_path / "out"
        _invoke("--noise", "-1", "--out", str(out))
        assert not out.exists()


class TestLoadConfig:
    """Tests for load_config."""

    def test_defaults(self):
        cfg = cli.load_config(None, {})
        assert cfg.sensors == 12
        assert cfg.source_range == 1000.0
        assert cfg.noise_power == 1e-4

    def test_none_overrides_ignored(self, tmp_path):
        config = tmp_path / "c.json"
        config.write_text(json.dumps({"seed": 5, "runs": 20}))
        cfg = cli.load_config(config, {"seed": None, "runs": 30})
        assert (cfg.seed, cfg.runs) == (5, 30)

    def test_range_sweep_noise_default(self):
        cfg = cli.load_config(None, {"mode": "range-sweep"})
        sweep = cfg.sweep_config()
        assert sweep.noise_power == 1e-6
        assert sweep.ranges == [1e3, 1e4, 1e5, 1e6]

    def test_range_collapses_range_sweep(self):
        sweep = cli.load_config(None, {"mode": "range-sweep", "range": 5e4}).sweep_config()
        assert sweep.ranges == [5e4]


class TestMain:
    """Tests for main()."""

    def test_returns_zero(self, tmp_path):
        code = cli.main(["--seed", "4", *FAST, "--out", str(tmp_path)])
        assert code == 0

    def test_returns_config_code(self, tmp_path):
        assert cli.main(["--sensors", "2", *FAST, "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    @pytest.mark.parametrize("argv", [["--bogus"], ["--mode", "nonsense"]])
    def test_usage_errors(self, argv):
        code = cli.main(argv)
        assert isinstance(code, int)
        assert code != 0
