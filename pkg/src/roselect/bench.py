"""Benchmark sweeps: one measured selection per ``N S ALG`` cell."""

from __future__ import annotations

import logging
import statistics
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from .readonly import InputError, generate
from .structs import Algorithm, Distribution, GeneratorSpec
from .selection import run_algorithm
from .workspace import WorkspaceError

logger = logging.getLogger(__name__)

_COLUMNS = (
    ("n", 9),
    ("budget_bits", 12),
    ("algorithm", 12),
    ("comparisons", 13),
    ("reads", 13),
    ("passes", 7),
    ("peak_workspace_bits", 20),
    ("elapsed_ms", 11),
)


@dataclass(frozen=True)
class BenchCell:
    n: int
    budget_bits: Optional[int]
    algorithm: str
    error: Optional[str] = None


@dataclass
class BenchRow:
    n: int
    budget_bits: Optional[int]
    algorithm: str
    comparisons: Optional[int] = None
    reads: Optional[int] = None
    passes: Optional[int] = None
    peak_workspace_bits: Optional[int] = None
    elapsed_ms: Optional[float] = None
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def parse_sweep(text: str) -> List[BenchCell]:
    """Parse ``N S ALG`` lines; ``S`` may be ``-``. Blank lines and ``#``
    comments are skipped. A bad budget becomes a cell error, a bad line a
    config error."""

    cells: List[BenchCell] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InputError(f"sweep line {number}: expected 'N S ALG', got '{line}'")
        try:
            n = int(parts[0])
        except ValueError as exc:
            raise InputError(f"sweep line {number}: N must be an integer") from exc
        if n < 1:
            raise InputError(f"sweep line {number}: N must be at least 1")
        budget: Optional[int] = None
        error: Optional[str] = None
        if parts[1] != "-":
            try:
                budget = int(parts[1])
            except ValueError:
                error = f"invalid budget '{parts[1]}'"
            else:
                if budget < 0:
                    error = f"invalid budget '{parts[1]}'"
                    budget = None
        cells.append(BenchCell(n, budget, parts[2], error))
    return cells


def load_sweep(path: Path) -> List[BenchCell]:
    try:
        return parse_sweep(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise InputError(f"Sweep file not found: {path}") from exc


def run_cell(
    cell: BenchCell,
    *,
    seed: int = 0,
    repeats: int = 1,
    distribution: Distribution = Distribution.PERMUTATION,
) -> BenchRow:
    """Run one cell at the worst-case rank ``ceil(N/2)``; counts and times
    are medians over ``repeats`` seeds."""

    row = BenchRow(cell.n, cell.budget_bits, cell.algorithm)
    if cell.error is not None:
        row.error = cell.error
        return row
    try:
        algorithm = Algorithm.from_name(cell.algorithm)
        k = (cell.n + 1) // 2
        results = []
        for offset in range(repeats):
            a = generate(GeneratorSpec(cell.n, seed + offset, distribution))
            results.append(run_algorithm(a, k, algorithm, cell.budget_bits).stats)
    except (ValueError, WorkspaceError) as exc:
        logger.info("Cell N=%d S=%s %s failed: %s", cell.n, cell.budget_bits, cell.algorithm, exc)
        row.error = str(exc)
        return row
    row.algorithm = results[0].algorithm
    row.comparisons = int(statistics.median(stats.comparisons for stats in results))
    row.reads = int(statistics.median(stats.reads for stats in results))
    row.passes = int(statistics.median(stats.passes for stats in results))
    row.peak_workspace_bits = int(statistics.median(stats.peak_workspace_bits for stats in results))
    row.elapsed_ms = round(statistics.median(stats.elapsed_ms for stats in results), 3)
    return row


def run_sweep(
    cells: List[BenchCell],
    *,
    seed: int = 0,
    repeats: int = 1,
    distribution: Distribution = Distribution.PERMUTATION,
) -> List[BenchRow]:
    """Cells run one after another, each with its own meter."""

    rows = []
    for cell in cells:
        rows.append(run_cell(cell, seed=seed, repeats=repeats, distribution=distribution))
        logger.debug("Finished cell %s", rows[-1])
    return rows


def format_table(rows: List[BenchRow]) -> str:
    header = " ".join(name.rjust(width) for name, width in _COLUMNS)
    lines = [header]
    for row in rows:
        values = row.to_dict()
        if row.error is not None:
            prefix = " ".join(
                str(values[name] if values[name] is not None else "-").rjust(width)
                for name, width in _COLUMNS[:3]
            )
            lines.append(f"{prefix}  error: {row.error}")
            continue
        lines.append(
            " ".join(
                str(values[name] if values[name] is not None else "-").rjust(width)
                for name, width in _COLUMNS
            )
        )
    return "\n".join(lines)
