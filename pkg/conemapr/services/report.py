"""Result serialisation: results.csv, angle.svg / g.svg and run_meta.txt."""

import csv
import logging
import math
from collections.abc import Iterable
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from conemapr import __version__  # noqa: E402
from conemapr.config import settings  # noqa: E402
from conemapr.schemas.montecarlo import CRLB_LABEL, MseRecord, SweepAxis  # noqa: E402

logger = logging.getLogger(__name__)

RESULTS_FILE = "results.csv"
META_FILE = "run_meta.txt"
COLUMNS = ("axis_value", "estimator", "mse_angle", "mse_g", "crlb_angle", "crlb_g", "failures")

AXIS_LABELS = {
    SweepAxis.NOISE: r"noise power $\sigma^2$ (rad$^2$)",
    SweepAxis.RANGE: "source range (m)",
}
MARKERS = {"proposed": "o", "sdr": "s", "mle": "^"}

# fixed SVG ids and no timestamp, so identical results give identical files
plt.rcParams["svg.hashsalt"] = "conemapr"


def format_number(value: float) -> str:
    """17 significant digits (exact round trip for doubles); `nan` for missing values."""
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


class ResultsWriter:
    """Appends MseRecord rows to results.csv, flushing after every row."""

    def __init__(self, path: Path):
        self.path = path
        self._file = path.open("w", newline="")
        self._writer = csv.writer(self._file, lineterminator="\n")
        self._writer.writerow(COLUMNS)
        self.rows = 0

    def write(self, record: MseRecord) -> None:
        self._writer.writerow(
            [
                format_number(record.axis_value),
                record.estimator,
                format_number(record.mse_angle),
                format_number(record.mse_g),
                format_number(record.crlb_angle),
                format_number(record.crlb_g),
                record.failures,
            ]
        )
        self._file.flush()
        self.rows += 1

    def close(self) -> None:
        self._file.close()
        logger.info(f"{self.rows} rows written to {self.path}")

    def __enter__(self) -> "ResultsWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_results(records: Iterable[MseRecord], path: Path) -> Path:
    with ResultsWriter(path) as writer:
        for record in records:
            writer.write(record)
    return path


def write_run_meta(path: Path, seed: int, config_json: str) -> Path:
    """Seed, package version, the validated run configuration and the solver settings."""
    path.write_text(
        f"seed: {seed}\nversion: {__version__}\nconfig: {config_json}\n"
        f"settings: {settings.model_dump_json()}\n"
    )
    return path


def _to_db(value: float) -> float:
    return 10.0 * math.log10(value) if value > 0.0 else math.nan


def _plot_metric(
    records: list[MseRecord],
    metric: str,
    axis: SweepAxis,
    ylabel: str,
    path: Path,
    db: bool,
) -> Path:
    transform = _to_db if db else (lambda v: v)
    fig, ax = plt.subplots(figsize=(6.4, 4.8))

    for label in dict.fromkeys(r.estimator for r in records):
        if label == CRLB_LABEL:
            continue
        rows = sorted((r for r in records if r.estimator == label), key=lambda r: r.axis_value)
        ax.plot(
            [r.axis_value for r in rows],
            [transform(getattr(r, f"mse_{metric}")) for r in rows],
            marker=MARKERS.get(label, "x"),
            linestyle="-",
            label=label,
        )

    bound: dict[float, float] = {}
    for r in records:
        bound.setdefault(r.axis_value, getattr(r, f"crlb_{metric}"))
    xs = sorted(bound)
    ax.plot(xs, [transform(bound[x]) for x in xs], color="k", linestyle="--", label="CRLB")

    ax.set_xscale("log")
    if not db:
        ax.set_yscale("log")
    ax.set_xlabel(AXIS_LABELS[axis])
    ax.set_ylabel(f"{ylabel} (dB)" if db else ylabel)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_results(
    records: list[MseRecord],
    axis: SweepAxis,
    out_dir: Path,
    db: bool = False,
) -> list[Path]:
    """angle.svg and g.svg: MSE per estimator against the axis, CRLB dashed."""
    if not records:
        return []
    paths = [
        _plot_metric(
            records, "angle", axis, r"MSE($\phi$, $\theta$) (rad$^2$)", out_dir / "angle.svg", db
        ),
        _plot_metric(records, "g", axis, r"MSE($g$) (m$^{-2}$)", out_dir / "g.svg", db),
    ]
    logger.info(f"Plots written to {out_dir}")
    return paths
