"""Plain bit vectors with constant-time rank and select.

Bits are stored LSB-first in 64-bit words and indexed from 1. Rank keeps
one landmark per word (the number of 1-bits before it) and finishes with a
masked population count. Select samples every ``b``-th target bit with
``b = max(32, ceil(lg L))``; a block of ``b`` targets spanning at least
``b * b`` bits stores all its positions explicitly, any other block is
answered by a landmark walk over at most ``b * b / 64 + 1`` words.
"""

from __future__ import annotations

import logging
from typing import Iterable, Iterator, Optional

import numpy as np

from .workspace import (
    WORD_BITS,
    MeteredArray,
    Region,
    WorkspaceMeter,
    ceil_lg,
    words_for,
)

logger = logging.getLogger(__name__)

SELECT_SAMPLE_MIN = 32
_WORD_MASK = (1 << WORD_BITS) - 1


class BitVectorError(IndexError):
    """Raised for out-of-range queries and writes to frozen buffers."""


class BitBuffer:
    """Append-only bit writer over a word array.

    Either owns its words (:meth:`allocate`, charged to a meter) or writes
    into a caller-provided slice (:meth:`over`). Words are flushed whole, so
    bits past ``length`` in the last word are always zero.
    """

    __slots__ = ("_words", "capacity", "length", "ones", "frozen", "_acc", "_fill", "_meter", "_region")

    def __init__(
        self,
        words: np.ndarray,
        capacity: int,
        *,
        meter: Optional[WorkspaceMeter] = None,
        region: Optional[Region] = None,
    ) -> None:
        if words.shape[0] < words_for(capacity):
            raise BitVectorError(f"{words.shape[0]} words cannot hold {capacity} bits")
        self._words = words
        self.capacity = capacity
        self.length = 0
        self.ones = 0
        self.frozen = False
        self._acc = 0
        self._fill = 0
        self._meter = meter
        self._region = region

    @classmethod
    def allocate(cls, meter: WorkspaceMeter, capacity: int, label: str) -> "BitBuffer":
        count = words_for(capacity)
        region = meter.allocate(count * WORD_BITS, label)
        return cls(np.zeros(count, dtype=np.uint64), capacity, meter=meter, region=region)

    @classmethod
    def over(cls, words: np.ndarray, capacity: int) -> "BitBuffer":
        return cls(words, capacity)

    @property
    def words(self) -> np.ndarray:
        return self._words

    def append(self, bit: int) -> None:
        if self.frozen:
            raise BitVectorError("bit buffer is frozen")
        if self.length >= self.capacity:
            raise BitVectorError(f"bit buffer full ({self.capacity} bits)")
        if bit:
            self._acc |= 1 << self._fill
            self.ones += 1
        self._fill += 1
        self.length += 1
        if self._fill == WORD_BITS:
            self._words[(self.length >> 6) - 1] = self._acc
            self._acc = 0
            self._fill = 0

    def append_run(self, bit: int, count: int) -> None:
        """Append ``count`` copies of ``bit`` a word at a time."""

        if self.frozen:
            raise BitVectorError("bit buffer is frozen")
        if self.length + count > self.capacity:
            raise BitVectorError(f"bit buffer full ({self.capacity} bits)")
        while count:
            take = min(count, WORD_BITS - self._fill)
            if bit:
                self._acc |= ((1 << take) - 1) << self._fill
                self.ones += take
            self._fill += take
            self.length += take
            count -= take
            if self._fill == WORD_BITS:
                self._words[(self.length >> 6) - 1] = self._acc
                self._acc = 0
                self._fill = 0

    def extend(self, bits: Iterable[int]) -> None:
        for bit in bits:
            self.append(bit)

    def freeze(self) -> None:
        if self.frozen:
            return
        if self._fill:
            self._words[self.length >> 6] = self._acc
        self.frozen = True

    def release(self) -> None:
        if self._region is not None and self._meter is not None and not self._region.released:
            self._meter.release(self._region)


def _select_in_word(word: int, r: int) -> int:
    """1-based position of the ``r``-th 1-bit of ``word`` (byte skip, then clear)."""

    shift = 0
    while True:
        byte = (word >> shift) & 0xFF
        count = byte.bit_count()
        if r <= count:
            break
        r -= count
        shift += 8
    for _ in range(r - 1):
        byte &= byte - 1
    return shift + (byte & -byte).bit_length()


class _SelectDirectory:
    """Sampled select support for the 1-bits (or 0-bits) of a vector."""

    def __init__(self, vector: "RsBitVector", *, zeros: bool, meter: WorkspaceMeter, label: str) -> None:
        self._vector = vector
        self._zeros = zeros
        length = vector.length
        self.total = vector.zeros_total if zeros else vector.ones_total
        self.rate = rate = max(SELECT_SAMPLE_MIN, ceil_lg(length))
        span = rate * rate
        blocks = -(-self.total // rate)

        self._samples = meter.array(blocks, length, f"{label}-samples")
        flags = BitBuffer.allocate(meter, blocks, f"{label}-sparse-flags")
        samples = self._samples.data
        first = 0
        for count, pos in enumerate(self._positions()):
            block, offset = divmod(count, rate)
            if offset == 0:
                samples[block] = pos
                first = pos
            if offset == rate - 1 or count == self.total - 1:
                flags.append(pos - first + 1 >= span)
        flags.freeze()
        self._flags = RsBitVector(flags, meter, select_ones=False, label=f"{label}-flags")

        sparse = self._flags.ones_total
        self._explicit = meter.array(sparse * rate, length, f"{label}-sparse")
        if sparse:
            explicit = self._explicit.data
            slot = -1
            for count, pos in enumerate(self._positions()):
                block, offset = divmod(count, rate)
                if offset == 0:
                    slot = self._flags.rank(block + 1) - 1 if self._flags.access(block + 1) else -1
                if slot >= 0:
                    explicit[slot * rate + offset] = pos
        logger.debug(
            "Select directory over %d bits: %d targets, %d blocks, %d sparse",
            length,
            self.total,
            blocks,
            sparse,
        )

    def _word(self, wi: int) -> int:
        word = int(self._vector._words[wi])
        if not self._zeros:
            return word
        tail = self._vector.length - wi * WORD_BITS
        mask = _WORD_MASK if tail >= WORD_BITS else (1 << tail) - 1
        return ~word & mask

    def _before(self, wi: int) -> int:
        ones = int(self._vector._landmarks.data[wi])
        if not self._zeros:
            return ones
        return min(wi * WORD_BITS, self._vector.length) - ones

    def _positions(self) -> Iterator[int]:
        for wi in range(words_for(self._vector.length)):
            word = self._word(wi)
            base = wi * WORD_BITS
            while word:
                low = word & -word
                yield base + low.bit_length()
                word ^= low

    def select(self, j: int) -> int:
        block, offset = divmod(j - 1, self.rate)
        if self._flags.access(block + 1):
            slot = self._flags.rank(block + 1) - 1
            return int(self._explicit.data[slot * self.rate + offset])
        pos = int(self._samples.data[block])
        if offset == 0:
            return pos
        wi = (pos - 1) >> 6
        while self._before(wi + 1) < j:
            wi += 1
        return wi * WORD_BITS + _select_in_word(self._word(wi), j - self._before(wi))

    @property
    def bits(self) -> int:
        return self._samples.region.size + self._explicit.region.size + self._flags.bits

    def release(self) -> None:
        self._samples.release()
        self._explicit.release()
        self._flags.release()


class RsBitVector:
    """Frozen bit vector with rank, select and complement select."""

    def __init__(
        self,
        buffer: BitBuffer,
        meter: WorkspaceMeter,
        *,
        select_ones: bool = True,
        select_zeros: bool = False,
        label: str = "bitvector",
    ) -> None:
        buffer.freeze()
        self._buffer = buffer
        self._words = buffer.words
        self.length = buffer.length
        count = words_for(self.length)
        self._landmarks: MeteredArray = meter.array(count + 1, self.length, f"{label}-rank")
        landmarks = self._landmarks.data
        total = 0
        for wi in range(count):
            landmarks[wi] = total
            total += int(self._words[wi]).bit_count()
        landmarks[count] = total
        self.ones_total = total
        self._ones = _SelectDirectory(self, zeros=False, meter=meter, label=label) if select_ones else None
        self._zeros = _SelectDirectory(self, zeros=True, meter=meter, label=f"{label}-zeros") if select_zeros else None

    @classmethod
    def build(cls, buffer: BitBuffer, meter: WorkspaceMeter, **options) -> "RsBitVector":
        return cls(buffer, meter, **options)

    @classmethod
    def from_bits(cls, bits: Iterable[int], meter: WorkspaceMeter, **options) -> "RsBitVector":
        values = list(bits)
        buffer = BitBuffer.allocate(meter, len(values), options.get("label", "bitvector"))
        buffer.extend(values)
        return cls(buffer, meter, **options)

    def __len__(self) -> int:
        return self.length

    @property
    def zeros_total(self) -> int:
        return self.length - self.ones_total

    def access(self, i: int) -> int:
        if not 1 <= i <= self.length:
            raise BitVectorError(f"bit index {i} outside [1, {self.length}]")
        i -= 1
        return (int(self._words[i >> 6]) >> (i & 63)) & 1

    def rank(self, i: int) -> int:
        if not 0 <= i <= self.length:
            raise BitVectorError(f"rank index {i} outside [0, {self.length}]")
        wi, r = divmod(i, WORD_BITS)
        ones = int(self._landmarks.data[wi])
        if r:
            ones += (int(self._words[wi]) & ((1 << r) - 1)).bit_count()
        return ones

    def rank0(self, i: int) -> int:
        return i - self.rank(i)

    def select(self, j: int) -> int:
        if self._ones is None:
            raise BitVectorError("select support was not built")
        if not 1 <= j <= self.ones_total:
            raise BitVectorError(f"no such one: {j} (vector holds {self.ones_total})")
        return self._ones.select(j)

    def complement_select(self, j: int) -> int:
        if self._zeros is None:
            raise BitVectorError("complement select support was not built")
        if not 1 <= j <= self.zeros_total:
            raise BitVectorError(f"no such zero: {j} (vector holds {self.zeros_total})")
        return self._zeros.select(j)

    def read_bits(self, i: int, width: int) -> int:
        """Bits ``i .. i + width - 1`` as an integer, bit ``i`` lowest."""

        if not 1 <= width <= WORD_BITS:
            raise BitVectorError(f"width {width} outside [1, {WORD_BITS}]")
        if i < 1 or i + width - 1 > self.length:
            raise BitVectorError(f"bits {i}..{i + width - 1} outside [1, {self.length}]")
        wi, shift = divmod(i - 1, WORD_BITS)
        value = int(self._words[wi]) >> shift
        if shift + width > WORD_BITS:
            value |= int(self._words[wi + 1]) << (WORD_BITS - shift)
        return value & ((1 << width) - 1)

    def iter_ones(self) -> Iterator[int]:
        for wi in range(words_for(self.length)):
            word = int(self._words[wi])
            base = wi * WORD_BITS
            while word:
                low = word & -word
                yield base + low.bit_length()
                word ^= low

    @property
    def bits(self) -> int:
        """Metered size of the rank and select support, excluding the bits."""

        total = self._landmarks.region.size
        for directory in (self._ones, self._zeros):
            if directory is not None:
                total += directory.bits
        return total

    def rebind(self, words: np.ndarray) -> None:
        """Point the vector at a relocated copy of its words."""

        if words.shape[0] < words_for(self.length):
            raise BitVectorError("relocated storage is too small")
        self._words = words

    def release(self) -> None:
        self._landmarks.release()
        for directory in (self._ones, self._zeros):
            if directory is not None:
                directory.release()
        self._buffer.release()

    def __repr__(self) -> str:
        shown = "".join(str(self.access(i)) for i in range(1, min(self.length, 64) + 1))
        suffix = "..." if self.length > 64 else ""
        return f"RsBitVector({shown}{suffix}, ones={self.ones_total})"
