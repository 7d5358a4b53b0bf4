"""Bit-granular workspace accounting.

Every structure the selection algorithms build is charged to a
:class:`WorkspaceMeter`. Allocations are rounded up to whole 64-bit words;
the meter tracks the live total, the run's peak and a per-label peak so a
budget violation can be traced back to the structure that caused it.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional

import numpy as np

logger = logging.getLogger(__name__)

WORD_BITS = 64


class WorkspaceError(RuntimeError):
    """Raised when the meter is used incorrectly (double release, bad size)."""


class BudgetExceededError(WorkspaceError):
    """Raised when an allocation would push the live total past the budget."""

    def __init__(
        self,
        label: str,
        requested: int,
        budget: int,
        current: int,
        report: Optional["WorkspaceReport"] = None,
    ) -> None:
        super().__init__(f"workspace budget exceeded ({label}, {requested}, {budget})")
        self.label = label
        self.requested = requested
        self.budget = budget
        self.current = current
        self.report = report


def words_for(bits: int) -> int:
    return -(-bits // WORD_BITS)


def ceil_lg(n: int) -> int:
    """Return ``ceil(lg n)`` for ``n >= 1``, never less than 1."""

    return max(1, (n - 1).bit_length())


def index_dtype(universe: int) -> np.dtype:
    """Narrowest unsigned dtype able to hold every value in ``[0, universe]``."""

    for dtype in (np.uint8, np.uint16, np.uint32):
        if universe <= np.iinfo(dtype).max:
            return np.dtype(dtype)
    return np.dtype(np.uint64)


def index_bits(universe: int) -> int:
    return index_dtype(universe).itemsize * 8


@dataclass(eq=False)
class Region:
    """A live allocation. ``size`` is the word-rounded charge in bits."""

    size: int
    label: str
    requested: int
    released: bool = False


@dataclass(frozen=True)
class WorkspaceReport:
    current: int
    peak: int
    by_label: Dict[str, int] = field(default_factory=dict)

    def describe(self) -> str:
        lines = [f"workspace current={self.current} peak={self.peak} bits"]
        for label, bits in sorted(self.by_label.items(), key=lambda item: -item[1]):
            lines.append(f"  {label}: {bits}")
        return "\n".join(lines)


class WorkspaceMeter:
    """Arena of accounted bits with an optional hard budget."""

    def __init__(self, budget: Optional[int] = None) -> None:
        if budget is not None and budget < 0:
            raise WorkspaceError("budget must be non-negative")
        self.budget = budget
        self.current = 0
        self.peak = 0
        self._live: set[Region] = set()
        self._label_current: Dict[str, int] = {}
        self._label_peak: Dict[str, int] = {}

    def allocate(self, bits: int, label: str) -> Region:
        if bits < 0:
            raise WorkspaceError(f"cannot allocate a negative size ({label}, {bits})")
        size = words_for(bits) * WORD_BITS
        if self.budget is not None and self.current + size > self.budget:
            logger.debug(
                "Refusing %d bits for %s (current %d, budget %d)",
                size,
                label,
                self.current,
                self.budget,
            )
            raise BudgetExceededError(label, size, self.budget, self.current, self.report())
        region = Region(size=size, label=label, requested=bits)
        self._live.add(region)
        self.current += size
        self.peak = max(self.peak, self.current)
        live = self._label_current.get(label, 0) + size
        self._label_current[label] = live
        if live > self._label_peak.get(label, 0):
            self._label_peak[label] = live
        return region

    def release(self, region: Region) -> None:
        if region not in self._live:
            state = "already released" if region.released else "unknown to this meter"
            raise WorkspaceError(f"region '{region.label}' is {state}")
        self._live.remove(region)
        region.released = True
        self.current -= region.size
        self._label_current[region.label] -= region.size

    def report(self) -> WorkspaceReport:
        return WorkspaceReport(self.current, self.peak, dict(self._label_peak))

    @contextmanager
    def scoped(self, bits: int, label: str) -> Iterator[Region]:
        region = self.allocate(bits, label)
        try:
            yield region
        finally:
            self.release(region)

    def array(self, length: int, universe: int, label: str) -> "MeteredArray":
        return MeteredArray(self, length, universe, label)


class MeteredArray:
    """A zero-filled numpy index array whose storage is charged to a meter.

    Values live in ``[0, universe]``; the dtype is the narrowest unsigned type
    that fits, and the charge is the array's real storage.
    """

    __slots__ = ("data", "region", "_meter")

    def __init__(self, meter: WorkspaceMeter, length: int, universe: int, label: str) -> None:
        dtype = index_dtype(universe)
        self.region = meter.allocate(length * dtype.itemsize * 8, label)
        self.data = np.zeros(length, dtype=dtype)
        self._meter = meter

    def __len__(self) -> int:
        return int(self.data.shape[0])

    def release(self) -> None:
        if not self.region.released:
            self._meter.release(self.region)

    def __enter__(self) -> "MeteredArray":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        self.release()
        return False
