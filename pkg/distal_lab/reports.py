"""CSV report records shared by every experiment kind."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

logger = logging.getLogger(__name__)

COLUMNS: Dict[str, List[str]] = {
    "ergodicity": ["system", "function", "start", "n", "score", "detected"],
    "perturb": ["seed", "k0", "fraction", "c_a", "pass"],
    "lemmas": ["lemma", "params", "bound", "empirical", "margin", "pass"],
    "tower": ["column", "level", "lo", "hi", "value", "in_c"],
}


class ReportError(ValueError):
    """Raised for malformed or unknown reports."""


def format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _sort_key(value: object) -> Tuple[int, float, str]:
    try:
        return (0, float(value), "")
    except (TypeError, ValueError):
        return (1, 0.0, str(value))


@dataclass
class Report:
    """Rows of one experiment kind, written sorted and in a fixed column order."""

    kind: str
    rows: List[Sequence[object]] = field(default_factory=list)
    passed: bool = True

    def __post_init__(self) -> None:
        if self.kind not in COLUMNS:
            raise ReportError(f"unknown report kind {self.kind!r}")

    @property
    def columns(self) -> List[str]:
        return COLUMNS[self.kind]

    def add(self, row: Sequence[object]) -> None:
        if len(row) != len(self.columns):
            raise ReportError(f"{self.kind} rows have {len(self.columns)} fields, got {len(row)}")
        self.rows.append(tuple(row))

    def fail(self) -> None:
        self.passed = False

    def formatted(self) -> List[List[str]]:
        ordered = sorted(self.rows, key=lambda row: tuple(_sort_key(v) for v in row))
        return [[format_value(v) for v in row] for row in ordered]


def write_csv(report: Report, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(report.columns)
        writer.writerows(report.formatted())
    logger.info("wrote %d %s rows to %s", len(report.rows), report.kind, path)
    return path


def read_csv(path: str | Path) -> Report:
    """Read a report back; the header decides the kind."""
    path = Path(path)
    if not path.exists():
        raise ReportError(f"report not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ReportError(f"{path}: empty file, expected a header line")
    header, body = rows[0], rows[1:]
    for kind, columns in COLUMNS.items():
        if header == columns:
            report = Report(kind)
            for number, row in enumerate(body, start=2):
                if len(row) != len(columns):
                    raise ReportError(f"{path}:{number}: expected {len(columns)} fields")
                report.add(row)
            return report
    raise ReportError(f"{path}: unrecognised header {','.join(header)}")
