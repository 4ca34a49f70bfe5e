"""CSV and JSON artifact writers. Output is a pure function of the inputs."""
import csv
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

from pydantic import BaseModel

from .envelope import ExponentSet
from .sums import SumSeries

logger = logging.getLogger(__name__)

EXPONENT_HEADER = ["r", "delta_minus", "rho_minus", "theta", "rho_plus", "delta_plus"]


def _prepare(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]]) -> Path:
    path = _prepare(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info("Wrote %s", path)
    return path


def exponent_rows(table: Sequence[ExponentSet]) -> List[List[str]]:
    return [[f"{row.r:g}", *(f"{value:.4f}" for value in row.row())] for row in table]


def write_exponent_table(path: Path, table: Sequence[ExponentSet]) -> Path:
    return write_csv(path, EXPONENT_HEADER, exponent_rows(table))


def write_series(path: Path, series: SumSeries) -> Path:
    return write_csv(path, ["x", "value"], ([x, repr(v)] for x, v in series.rows()))


def write_residuals(path: Path, rows: Sequence[Tuple[int, int, int, Sequence[float]]]) -> Path:
    depth = max((len(coeffs) for *_, coeffs in rows), default=0)
    header = ["p", "j", "depth", *(f"c{k}" for k in range(1, depth + 1))]
    return write_csv(path, header, ([p, j, d, *(repr(c) for c in coeffs)] for p, j, d, coeffs in rows))


def write_json(path: Path, report: BaseModel) -> Path:
    path = _prepare(path)
    path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("Wrote %s", path)
    return path
