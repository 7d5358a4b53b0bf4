"""Command line interface for read-only selection."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Iterable, List, NoReturn, Optional

from .bench import format_table, load_sweep, run_sweep
from .logging_utils import configure_logging
from .readonly import InputError, load
from .selection import SelectionParameterError, oracle_order, run_algorithm
from .structs import Algorithm, GeneratorSpec, RunConfig, SelectionResult
from .workspace import BudgetExceededError

logger = logging.getLogger(__name__)

EXIT_MISMATCH = 1
EXIT_BUDGET = 3


class ConfigError(ValueError):
    """Raised for option combinations or values argparse cannot check."""


def _resolve_version() -> str:
    try:
        return metadata.version("roselect")
    except metadata.PackageNotFoundError:
        from . import __version__

        return __version__


def _rank(text: str) -> Optional[int]:
    if text == "all":
        return None
    try:
        k = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"k must be an integer or 'all', got '{text}'") from exc
    if k < 1:
        raise argparse.ArgumentTypeError(f"k must be at least 1, got {k}")
    return k


def _budget(text: str) -> int:
    try:
        bits = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"budget must be an integer number of bits, got '{text}'") from exc
    if bits < 0:
        raise argparse.ArgumentTypeError(f"budget must be non-negative, got {bits}")
    return bits


def _generator(text: str) -> GeneratorSpec:
    try:
        return GeneratorSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roselect",
        description="Select the k-th smallest element of a read-only array under a bit budget",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {_resolve_version()}",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Increase log verbosity (-v for INFO, -vv for DEBUG)",
    )
    parser.add_argument(
        "-q", "--quiet", action="store_true", help="Only log errors"
    )

    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", type=Path, help="Text input, one integer per line")
    source.add_argument(
        "--input-binary", type=Path, help="Binary input of little-endian signed 64-bit integers"
    )
    source.add_argument(
        "--gen",
        type=_generator,
        metavar="N:seed=X[,dist=D]",
        help="Generate N values (dist: permutation, sorted, reverse-sorted, few-distinct)",
    )
    source.add_argument(
        "--bench",
        type=Path,
        metavar="FILE",
        help="Run a benchmark sweep, one 'N S ALG' cell per line (S may be '-')",
    )

    parser.add_argument(
        "--k",
        type=_rank,
        default=argparse.SUPPRESS,
        metavar="INT|all",
        help="Rank to select (1-based) or 'all' for every rank",
    )
    parser.add_argument(
        "--alg",
        choices=[member.value for member in Algorithm],
        default=Algorithm.AUTO.value,
        help="Selection algorithm (default: auto)",
    )
    parser.add_argument(
        "--budget-bits",
        type=_budget,
        help="Workspace budget in bits (default: unbounded)",
    )
    parser.add_argument(
        "--json", action="store_true", help="Emit JSON instead of text"
    )
    parser.add_argument(
        "--verify", action="store_true", help="Check every answer against a full sort"
    )
    parser.add_argument(
        "--seed", type=int, help="Override the generator seed (and the bench base seed)"
    )
    parser.add_argument(
        "--repeats",
        type=int,
        default=1,
        help="Seeds per bench cell; counts are medians (default: 1)",
    )
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if not hasattr(args, "k"):
        raise ConfigError("--k is required unless --bench is given")
    if args.gen is not None:
        source: Any = args.gen
    else:
        source = args.input if args.input is not None else args.input_binary
    return RunConfig(
        source=source,
        binary=args.input_binary is not None,
        k=args.k,
        algorithm=Algorithm.from_name(args.alg),
        budget_bits=args.budget_bits,
        output="json" if args.json else "text",
        verify=args.verify,
        seed=args.seed,
    )


def _record(
    n: int, k: int, cfg: RunConfig, result: SelectionResult, verified: Optional[bool]
) -> Dict[str, Any]:
    stats = result.stats
    return {
        "n": n,
        "k": k,
        "algorithm": stats.algorithm,
        "budget_bits": cfg.budget_bits,
        "answer_index": result.answer_index,
        "answer_value": result.answer_value,
        "comparisons": stats.comparisons,
        "reads": stats.reads,
        "passes": stats.passes,
        "peak_workspace_bits": stats.peak_workspace_bits,
        "elapsed_ms": round(stats.elapsed_ms, 3),
        "verified": verified,
    }


def _verdict(verified: Optional[bool]) -> str:
    if verified is None:
        return "not verified"
    return "MATCH" if verified else "MISMATCH"


def _describe(record: Dict[str, Any]) -> str:
    lines = [
        f"answer: x{record['answer_index']} = {record['answer_value']}"
        f" (k={record['k']}, n={record['n']}, algorithm={record['algorithm']})",
        f"comparisons: {record['comparisons']}",
        f"reads: {record['reads']}",
        f"passes: {record['passes']}",
        f"peak workspace bits: {record['peak_workspace_bits']}",
        f"elapsed: {record['elapsed_ms']:.3f} ms",
    ]
    if record["verified"] is not None:
        lines.append(f"verify: {_verdict(record['verified'])}")
    return "\n".join(lines)


def _summarize(records: List[Dict[str, Any]], cfg: RunConfig) -> str:
    n = records[0]["n"]
    lines = [
        f"ran {len(records)} ranks on n={n} with {records[0]['algorithm']}",
        f"comparisons: {sum(r['comparisons'] for r in records)}",
        f"reads: {sum(r['reads'] for r in records)}",
        f"max peak workspace bits: {max(r['peak_workspace_bits'] for r in records)}",
    ]
    if cfg.verify:
        matched = sum(1 for r in records if r["verified"])
        lines.append(f"verify: {matched} MATCH, {len(records) - matched} MISMATCH")
    return "\n".join(lines)


def _emit_output(output: str, payload: Any, *, text: str) -> None:
    """Emit payload according to the caller's preferred output format."""
    if output == "json":
        print(json.dumps(payload, ensure_ascii=False))
    else:
        print(text)


def run(cfg: RunConfig) -> int:
    """Load the input, select every requested rank and print the report.

    Returns the exit status: 0, or 1 if verification found a mismatch.
    """

    source = cfg.source
    if isinstance(source, GeneratorSpec):
        source = source.with_seed(cfg.seed)
    a = load(source, binary=cfg.binary)
    n = len(a)
    if cfg.k is not None and cfg.k > n:
        raise ConfigError(f"--k {cfg.k} outside [1, {n}]")
    ranks = range(1, n + 1) if cfg.k is None else range(cfg.k, cfg.k + 1)
    order = oracle_order(a.array) if cfg.verify else None

    records = []
    for k in ranks:
        result = run_algorithm(a, k, cfg.algorithm, cfg.budget_bits)
        verified: Optional[bool] = None
        if order is not None:
            expected = int(order[k - 1])
            verified = expected == result.answer_index
            if not verified:
                logger.error("Rank %d: selected x%d, a full sort gives x%d", k, result.answer_index, expected)
        records.append(_record(n, k, cfg, result, verified))

    if cfg.exhaustive:
        _emit_output(cfg.output, records, text=_summarize(records, cfg))
    else:
        _emit_output(cfg.output, records[0], text=_describe(records[0]))
    return EXIT_MISMATCH if any(r["verified"] is False for r in records) else 0


def run_bench(path: Path, *, output: str, seed: Optional[int], repeats: int) -> int:
    cells = load_sweep(path)
    rows = run_sweep(cells, seed=seed or 0, repeats=repeats)
    _emit_output(output, [row.to_dict() for row in rows], text=format_table(rows))
    return 0


def _fail_budget(exc: Exception) -> NoReturn:
    print(f"error: {exc}", file=sys.stderr)
    report = getattr(exc, "report", None)
    if report is not None:
        print(report.describe(), file=sys.stderr)
    raise SystemExit(EXIT_BUDGET)


def main(argv: Iterable[str] | None = None) -> None:
    parser = build_parser()
    args = parser.parse_args(list(argv) if argv is not None else None)
    configure_logging(-1 if args.quiet else args.verbose)
    if args.repeats < 1:
        parser.error("--repeats must be at least 1")

    try:
        if args.bench is not None:
            status = run_bench(
                args.bench,
                output="json" if args.json else "text",
                seed=args.seed,
                repeats=args.repeats,
            )
        else:
            status = run(config_from_args(args))
    except BudgetExceededError as exc:
        _fail_budget(exc)
    except SelectionParameterError as exc:
        _fail_budget(exc)
    except (InputError, ConfigError) as exc:
        parser.error(str(exc))
    if status:
        raise SystemExit(status)


if __name__ == "__main__":
    main()
