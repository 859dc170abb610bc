"""CSV emission for bound tables and simulation cells"""
import csv
from typing import List, Optional, TextIO

from app.core.config import get_settings
from app.models.schemas import BoundCurve, ExponentFit, TrialStats


BOUNDS_COLUMNS = ["R", "lb_rce_id", "lb_rce_jd", "lb_trc_id", "lb_trc_jd", "ub"]
SIMULATE_COLUMNS = [
    "n", "m", "realized_rate", "p", "ensemble", "decoder", "trials", "errors",
    "p_hat", "ci_low", "ci_high", "exponent_hat",
]
TOLERANCE_COLUMNS = ["mean_misidentified_fraction", "tolerant_errors"]


def format_number(value: Optional[float]) -> str:
    """Significant-digit formatting; None becomes an empty cell"""
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{value:.{get_settings().csv_significant_digits}g}"


def write_bounds_csv(curve: BoundCurve, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(BOUNDS_COLUMNS)
    for point in curve.points:
        writer.writerow([
            format_number(point.rate),
            format_number(point.lb_rce_id),
            format_number(point.lb_rce_jd),
            format_number(point.lb_trc_id),
            format_number(point.lb_trc_jd),
            format_number(point.ub),
        ])


class SimulationCsvWriter:
    """
    Streams one row per finished cell

    The header goes out on construction so partial runs still parse.
    """

    def __init__(self, stream: TextIO, with_tolerance: bool = False):
        self.stream = stream
        self.with_tolerance = with_tolerance
        self.writer = csv.writer(stream, lineterminator="\n")
        columns: List[str] = list(SIMULATE_COLUMNS)
        if with_tolerance:
            columns += TOLERANCE_COLUMNS
        self.writer.writerow(columns)
        self.stream.flush()

    def write(self, cell: TrialStats) -> None:
        row = [
            format_number(cell.n),
            format_number(cell.m),
            format_number(cell.realized_rate),
            format_number(cell.p),
            cell.ensemble.value,
            cell.decoder.value,
            format_number(cell.trials),
            format_number(cell.errors),
            format_number(cell.p_hat),
            format_number(cell.ci_low),
            format_number(cell.ci_high),
            format_number(cell.exponent_hat),
        ]
        if self.with_tolerance:
            row += [format_number(cell.mean_misidentified_fraction), format_number(cell.tolerant_errors)]
        self.writer.writerow(row)
        self.stream.flush()


def fit_summary(fit: Optional[ExponentFit]) -> str:
    """One-line summary of the fitted exponent, prefixed for CSV consumers to skip"""
    if fit is None:
        return "# exponent fit: fewer than 3 cells with errors"
    return (
        f"# exponent fit: slope={format_number(fit.slope)} "
        f"intercept={format_number(fit.intercept)} n={fit.n_values}"
    )
