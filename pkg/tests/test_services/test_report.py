"""Tests for results.csv, run_meta.txt and the SVG plots."""

import csv
import json
import math

import pytest

from conemapr import __version__
from conemapr.config import settings
from conemapr.schemas.montecarlo import MseRecord, SweepAxis
from conemapr.services import report


def _record(axis_value: float, estimator: str, mse: float = 1e-5, failures: int = 0) -> MseRecord:
    return MseRecord(
        axis_value=axis_value,
        estimator=estimator,
        mse_angle=mse,
        mse_g=mse * 1e-6,
        crlb_angle=8e-6,
        crlb_g=7e-12,
        failures=failures,
        trials=100,
    )


@pytest.fixture
def records() -> list[MseRecord]:
    return [
        _record(1e-5, "proposed", 1.1e-5),
        _record(1e-5, "mle", 1.0e-5),
        _record(1e-4, "proposed", 1.2e-4, failures=2),
        _record(1e-4, "mle", 1.0e-4),
    ]


class TestFormatNumber:
    """Tests for format_number."""

    @pytest.mark.parametrize(
        "value, expected",
        [
            (1e-4, "0.0001"),
            (0.1, "0.10000000000000001"),
            (1000.0, "1000"),
            (math.nan, "nan"),
        ],
    )
    def test_format(self, value, expected):
        assert report.format_number(value) == expected

    def test_round_trip(self):
        """Seventeen digits recover the double exactly."""
        value = 1.0 / 3.0
        assert float(report.format_number(value)) == value


class TestResultsCsv:
    """Tests for ResultsWriter and write_results."""

    def test_header_and_rows(self, tmp_path, records):
        path = report.write_results(records, tmp_path / report.RESULTS_FILE)
        lines = path.read_text().splitlines()

        assert lines[0] == "axis_value,estimator,mse_angle,mse_g,crlb_angle,crlb_g,failures"
        assert len(lines) == 5
        assert lines[3].split(",")[1] == "proposed"
        assert lines[3].split(",")[-1] == "2"

    def test_values_parse_back(self, tmp_path, records):
        path = report.write_results(records, tmp_path / report.RESULTS_FILE)
        with path.open(newline="") as f:
            rows = list(csv.DictReader(f))

        assert [float(r["axis_value"]) for r in rows] == [1e-5, 1e-5, 1e-4, 1e-4]
        assert float(rows[0]["mse_angle"]) == 1.1e-5
        assert float(rows[0]["crlb_g"]) == 7e-12

    def test_nan_written_as_text(self, tmp_path):
        bound_only = MseRecord(
            axis_value=1e3,
            estimator="crlb",
            mse_angle=math.nan,
            mse_g=math.nan,
            crlb_angle=1e-6,
            crlb_g=1e-12,
        )
        path = report.write_results([bound_only], tmp_path / report.RESULTS_FILE)
        fields = path.read_text().splitlines()[1].split(",")
        assert fields[:4] == ["1000", "crlb", "nan", "nan"]
        assert float(fields[4]) == 1e-6

    def test_flushes_each_row(self, tmp_path, records):
        """Rows are on disk before the writer closes."""
        path = tmp_path / report.RESULTS_FILE
        with report.ResultsWriter(path) as writer:
            writer.write(records[0])
            assert len(path.read_text().splitlines()) == 2
            writer.write(records[1])
            assert writer.rows == 2
        assert len(path.read_text().splitlines()) == 3

    def test_header_only(self, tmp_path):
        path = report.write_results([], tmp_path / report.RESULTS_FILE)
        assert path.read_text() == ",".join(report.COLUMNS) + "\n"


class TestRunMeta:
    """Tests for write_run_meta."""

    def test_contents(self, tmp_path):
        path = report.write_run_meta(tmp_path / report.META_FILE, 42, '{"seed":42}')
        lines = path.read_text().splitlines()
        assert lines[:3] == [
            "seed: 42",
            f"version: {__version__}",
            'config: {"seed":42}',
        ]
        assert len(lines) == 4

    def test_solver_settings(self, tmp_path, monkeypatch):
        """Backend, tolerance and guards are echoed so a run can be repeated."""
        monkeypatch.setattr(settings, "solver", "scs")
        monkeypatch.setattr(settings, "solver_tol", 1e-7)
        path = report.write_run_meta(tmp_path / report.META_FILE, 1, "{}")
        echoed = json.loads(path.read_text().splitlines()[3].removeprefix("settings: "))
        assert echoed["solver"] == "scs"
        assert echoed["solver_tol"] == 1e-7
        assert echoed["sign_hint_threshold"] == settings.sign_hint_threshold
        assert echoed["max_condition"] == settings.max_condition
        assert echoed["sin_floor"] == settings.sin_floor


class TestPlots:
    """Tests for plot_results."""

    def test_writes_both_plots(self, tmp_path, records):
        paths = report.plot_results(records, SweepAxis.NOISE, tmp_path)

        assert [p.name for p in paths] == ["angle.svg", "g.svg"]
        for path in paths:
            text = path.read_text()
            assert text.lstrip().startswith("<?xml")
            assert "<svg" in text

    def test_deterministic(self, tmp_path, records):
        """Identical records give byte-identical SVG files."""
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        first = report.plot_results(records, SweepAxis.RANGE, tmp_path / "a", db=True)
        second = report.plot_results(records, SweepAxis.RANGE, tmp_path / "b", db=True)
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes()

    def test_bound_only_rows(self, tmp_path):
        """crlb rows draw only the bound line."""
        bound_only = [
            MseRecord(
                axis_value=r,
                estimator="crlb",
                mse_angle=math.nan,
                mse_g=math.nan,
                crlb_angle=1e-6,
                crlb_g=1e-12 * r,
            )
            for r in (1e3, 1e4)
        ]
        paths = report.plot_results(bound_only, SweepAxis.RANGE, tmp_path)
        assert all(p.exists() for p in paths)

    def test_no_records(self, tmp_path):
        assert report.plot_results([], SweepAxis.NOISE, tmp_path) == []
        assert list(tmp_path.iterdir()) == []
