"""Wavelet stack: survival bit vectors for shrinking sets of active elements.

Level 1 holds one bit per input element. Each pushed level holds one bit
per 1-bit of the level below it, in left-to-right order, so the top level
describes the active elements of the current round. All levels share one
contiguous metered word store; a small per-level header records where each
level starts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, List

import numpy as np

from .bitvector import BitBuffer, RsBitVector
from .workspace import WORD_BITS, Region, WorkspaceMeter, ceil_lg, words_for

logger = logging.getLogger(__name__)

GEOMETRIC_RATIO = Fraction(7, 8)
RESERVE_FACTOR = 4
HEADER_WORDS = 2


class WaveletStackError(ValueError):
    """Raised for invalid stack construction or level pushes."""


class ActiveRangeError(WaveletStackError, IndexError):
    """Raised when a query names an element or rank that does not exist."""


@dataclass
class _Level:
    offset: int
    vector: RsBitVector
    header: Region


class WaveletStack:
    def __init__(self, n: int, meter: WorkspaceMeter) -> None:
        if n < 1:
            raise WaveletStackError("a wavelet stack needs at least one element")
        self.base_length = n
        self.level_visits = 0
        self.violations = 0
        self._meter = meter
        self._exempt_below = -(-n // ceil_lg(n))
        self._levels: List[_Level] = []
        self._used = 0
        capacity = words_for(RESERVE_FACTOR * n) + 8
        self._store_region = meter.allocate(capacity * WORD_BITS, "wavelet-store")
        self._store = np.zeros(capacity, dtype=np.uint64)

        buffer = self._claim(n)
        buffer.append_run(1, n)
        self._commit(buffer, n)

    @classmethod
    def create(cls, n: int, meter: WorkspaceMeter) -> "WaveletStack":
        return cls(n, meter)

    @property
    def height(self) -> int:
        return len(self._levels)

    @property
    def active_count(self) -> int:
        return self._levels[-1].vector.ones_total

    def _claim(self, n: int) -> BitBuffer:
        need = words_for(n)
        if self._used + need > self._store.shape[0]:
            self._grow(self._used + need)
        return BitBuffer.over(self._store[self._used : self._used + need], n)

    def _grow(self, minimum: int) -> None:
        capacity = max(minimum, self._store.shape[0] * 3 // 2 + 1)
        region = self._meter.allocate(capacity * WORD_BITS, "wavelet-store")
        store = np.zeros(capacity, dtype=np.uint64)
        store[: self._used] = self._store[: self._used]
        for level in self._levels:
            count = words_for(level.vector.length)
            level.vector.rebind(store[level.offset : level.offset + count])
        self._meter.release(self._store_region)
        self._store_region = region
        self._store = store
        logger.debug("Wavelet store grown to %d words", capacity)

    def _commit(self, buffer: BitBuffer, previous: int) -> None:
        height = len(self._levels) + 1
        header = self._meter.allocate(HEADER_WORDS * WORD_BITS, "wavelet-header")
        vector = RsBitVector(buffer, self._meter, label=f"wavelet-level-{height}")
        self._levels.append(_Level(self._used, vector, header))
        self._used += words_for(buffer.length)
        kept = vector.ones_total
        if height > 1 and previous > self._exempt_below and kept > GEOMETRIC_RATIO * previous:
            self.violations += 1
            logger.warning(
                "Level %d keeps %d of %d active elements (more than %s)",
                height,
                kept,
                previous,
                GEOMETRIC_RATIO,
            )

    def push_level(self, keep_mask: Iterable[int]) -> None:
        """Push a level whose j-th bit keeps the j-th active element."""

        n = self.active_count
        buffer = self._claim(n)
        for bit in keep_mask:
            if buffer.length == n:
                raise WaveletStackError(f"keep mask longer than the {n} active elements")
            buffer.append(1 if bit else 0)
        if buffer.length != n:
            raise WaveletStackError(f"keep mask has {buffer.length} bits, expected {n}")
        if buffer.ones == 0:
            raise WaveletStackError("empty level refused")
        self._commit(buffer, n)

    def is_active(self, i: int) -> bool:
        if not 1 <= i <= self.base_length:
            raise ActiveRangeError(f"element {i} outside [1, {self.base_length}]")
        pos = i
        for level in self._levels:
            self.level_visits += 1
            vector = level.vector
            if not vector.access(pos):
                return False
            pos = vector.rank(pos)
        return True

    def index(self, j: int) -> int:
        """Input index of the j-th active element."""

        if not 1 <= j <= self.active_count:
            raise ActiveRangeError(f"fewer active elements than j ({self.active_count} < {j})")
        pos = j
        for level in reversed(self._levels):
            self.level_visits += 1
            pos = level.vector.select(pos)
        return pos

    def first_active(self) -> int:
        return self.index(1)

    def last_active(self) -> int:
        return self.index(self.active_count)

    def iter_active(self) -> Iterator[int]:
        for j in range(1, self.active_count + 1):
            yield self.index(j)

    def level_lengths(self) -> List[int]:
        return [level.vector.length for level in self._levels]

    @property
    def bits(self) -> int:
        """Metered size of the store, headers and per-level support."""

        total = self._store_region.size
        for level in self._levels:
            total += level.header.size + level.vector.bits
        return total

    def release(self) -> None:
        for level in self._levels:
            level.vector.release()
            self._meter.release(level.header)
        self._levels = []
        if not self._store_region.released:
            self._meter.release(self._store_region)
