"""Data structures shared across the selection modules and the CLI."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union


@dataclass(frozen=True, order=True, slots=True)
class OrderedKey:
    """An element paired with its 1-based position.

    Ordering is lexicographic on ``(value, index)`` so two positions never
    compare equal, even when their values do.
    """

    value: int
    index: int


class Algorithm(Enum):
    AUTO = "auto"
    LINEAR_BITS = "linear-bits"
    GENERAL = "general"
    LOGSQ = "logsq"
    BASELINE = "baseline"
    ORACLE = "oracle"

    @staticmethod
    def from_name(name: str) -> "Algorithm":
        for member in Algorithm:
            if member.value == name:
                return member
        choices = ", ".join(member.value for member in Algorithm)
        raise ValueError(f"Unknown algorithm '{name}' (choose from {choices})")


class Distribution(Enum):
    PERMUTATION = "uniform-random-permutation"
    SORTED = "sorted"
    REVERSE_SORTED = "reverse-sorted"
    FEW_DISTINCT = "few-distinct"

    @staticmethod
    def from_name(name: str) -> "Distribution":
        aliases = {
            "permutation": Distribution.PERMUTATION,
            "random": Distribution.PERMUTATION,
            "reverse": Distribution.REVERSE_SORTED,
        }
        if name in aliases:
            return aliases[name]
        for member in Distribution:
            if member.value == name:
                return member
        choices = ", ".join(member.value for member in Distribution)
        raise ValueError(f"Unknown distribution '{name}' (choose from {choices})")


@dataclass
class SelectionStats:
    """Counters collected during one selection run.

    ``passes`` counts loops that touch every currently active element (or
    every input element). ``rounds`` holds ``(active_before, survivors)``
    pairs of the median-of-medians rounds, ``zone_steps`` the same for the
    zone algorithm's classify steps.
    """

    algorithm: str = ""
    comparisons: int = 0
    reads: int = 0
    passes: int = 0
    peak_workspace_bits: int = 0
    elapsed: float = 0.0
    rounds: List[Tuple[int, int]] = field(default_factory=list)
    zone_steps: List[Tuple[int, int]] = field(default_factory=list)
    bucket_reads: int = 0
    rate_violations: int = 0
    peak_by_label: Dict[str, int] = field(default_factory=dict)

    @property
    def elapsed_ms(self) -> float:
        return self.elapsed * 1000.0


@dataclass(frozen=True)
class SelectionResult:
    answer_index: int
    answer_value: int
    stats: SelectionStats


@dataclass(frozen=True)
class GeneratorSpec:
    """Synthetic input description parsed from ``N:seed=X,dist=D``."""

    count: int
    seed: int = 0
    distribution: Distribution = Distribution.PERMUTATION

    @staticmethod
    def parse(text: str) -> "GeneratorSpec":
        head, _, tail = text.strip().partition(":")
        try:
            count = int(head)
        except ValueError as exc:
            raise ValueError(f"Generator count must be an integer: '{head}'") from exc
        if count < 1:
            raise ValueError("Generator count must be at least 1")
        seed = 0
        distribution = Distribution.PERMUTATION
        for option in filter(None, (part.strip() for part in tail.split(","))):
            key, sep, value = option.partition("=")
            if not sep:
                raise ValueError(f"Generator option must be key=value: '{option}'")
            if key == "seed":
                try:
                    seed = int(value)
                except ValueError as exc:
                    raise ValueError(f"Generator seed must be an integer: '{value}'") from exc
            elif key == "dist":
                distribution = Distribution.from_name(value)
            else:
                raise ValueError(f"Unknown generator option '{key}'")
        return GeneratorSpec(count=count, seed=seed, distribution=distribution)

    def with_seed(self, seed: Optional[int]) -> "GeneratorSpec":
        if seed is None:
            return self
        return GeneratorSpec(self.count, seed, self.distribution)


Source = Union[Path, GeneratorSpec]


@dataclass(frozen=True)
class RunConfig:
    """Everything the CLI needs for one run; ``k=None`` means every rank."""

    source: Source
    binary: bool = False
    k: Optional[int] = None
    algorithm: Algorithm = Algorithm.AUTO
    budget_bits: Optional[int] = None
    output: str = "text"
    verify: bool = False
    seed: Optional[int] = None

    @property
    def exhaustive(self) -> bool:
        return self.k is None
