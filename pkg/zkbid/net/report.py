"""Latency reports of simulation runs, and their CSV and gnuplot outputs."""
import csv
from pathlib import Path
import statistics
from typing import Iterable, NamedTuple, Tuple

from ..consts import SimTime

CSV_HEADER = ("n_users", "mean_ms", "median_ms", "max_ms", "blocks", "registration_blocks", "certification_blocks")


class LatencyReport(NamedTuple):
    """
    Completion times of one run, in simulated milliseconds.

    For an IAAC benchmark, a completion runs from the submission of the user's registration transaction to the
    inclusion of their soul-certification transaction.  For a plain `run_until`, every transaction included during the
    run counts as one user, completing at its inclusion.
    """
    n_users: int
    completions: Tuple[SimTime, ...]
    blocks: int
    registration_blocks: int = 0
    certification_blocks: int = 0

    @property
    def mean(self) -> float:
        return statistics.fmean(self.completions) if self.completions else 0.0

    @property
    def median(self) -> float:
        return float(statistics.median(self.completions)) if self.completions else 0.0

    @property
    def max(self) -> SimTime:
        return max(self.completions, default=SimTime(0))

    def csv_row(self) -> Tuple[str, ...]:
        return (str(self.n_users), f"{self.mean:.3f}", f"{self.median:.3f}", str(self.max), str(self.blocks),
                str(self.registration_blocks), str(self.certification_blocks))


def write_csv(path: Path, reports: Iterable[LatencyReport]) -> None:
    with Path(path).open("w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_HEADER)
        for report in reports:
            writer.writerow(report.csv_row())


def write_dat(path: Path, reports: Iterable[LatencyReport]) -> None:
    """Writes whitespace-separated columns (users, mean s, max s) that gnuplot plots directly."""
    with Path(path).open("w") as f:
        f.write("# users mean_s max_s\n")
        for report in reports:
            f.write(f"{report.n_users} {report.mean / 1000:.6f} {report.max / 1000:.6f}\n")
