"""Read-only input arrays and their loaders.

:class:`ReadOnlyArray` is the only way the algorithms see the input. Every
element access bumps ``reads`` and every order test bumps ``comparisons``,
so the cost claims of the algorithms can be measured exactly.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .structs import Distribution, GeneratorSpec, OrderedKey

logger = logging.getLogger(__name__)

_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1


class InputError(ValueError):
    """Raised for empty or malformed input sources."""


class IndexBoundsError(IndexError):
    """Raised when an element index falls outside ``[1, N]``."""


class ReadOnlyArray:
    """Immutable sequence of 64-bit integers with access counters.

    Indices are 1-based. Element order is the tie-broken order on
    ``(value, index)``.
    """

    __slots__ = ("_items", "_array", "reads", "comparisons")

    def __init__(self, values: Union[Iterable[int], np.ndarray]) -> None:
        array = np.array(values, dtype=np.int64)
        if array.ndim != 1:
            raise InputError("input must be one-dimensional")
        if array.size == 0:
            raise InputError("empty input")
        array.setflags(write=False)
        self._array = array
        self._items: tuple[int, ...] = tuple(array.tolist())
        self.reads = 0
        self.comparisons = 0

    def __len__(self) -> int:
        return len(self._items)

    @property
    def n(self) -> int:
        return len(self._items)

    @property
    def array(self) -> np.ndarray:
        """Uncounted read-only view, for oracles and writers only."""

        return self._array

    def counters(self) -> tuple[int, int]:
        return self.reads, self.comparisons

    def _check(self, i: int) -> None:
        if not 1 <= i <= len(self._items):
            raise IndexBoundsError(f"index {i} outside [1, {len(self._items)}]")

    def value(self, i: int) -> int:
        self._check(i)
        self.reads += 1
        return self._items[i - 1]

    def get(self, i: int) -> OrderedKey:
        return OrderedKey(self.value(i), i)

    def less(self, i: int, j: int) -> bool:
        self._check(i)
        self._check(j)
        self.reads += 2
        self.comparisons += 1
        vi = self._items[i - 1]
        vj = self._items[j - 1]
        return vi < vj or (vi == vj and i < j)

    def key_less(self, i: int, key: OrderedKey) -> bool:
        """Whether element ``i`` precedes ``key``."""

        self._check(i)
        self.reads += 1
        self.comparisons += 1
        v = self._items[i - 1]
        return v < key.value or (v == key.value and i < key.index)

    def key_greater(self, i: int, key: OrderedKey) -> bool:
        """Whether element ``i`` follows ``key``."""

        self._check(i)
        self.reads += 1
        self.comparisons += 1
        v = self._items[i - 1]
        return v > key.value or (v == key.value and i > key.index)

    def between(self, i: int, low: Optional[OrderedKey], high: Optional[OrderedKey]) -> bool:
        """Whether element ``i`` lies strictly inside ``(low, high)``.

        ``None`` stands for the matching infinity and costs no comparison.
        """

        self._check(i)
        self.reads += 1
        v = self._items[i - 1]
        if low is not None:
            self.comparisons += 1
            if v < low.value or (v == low.value and i <= low.index):
                return False
        if high is not None:
            self.comparisons += 1
            if v > high.value or (v == high.value and i >= high.index):
                return False
        return True


def load_text(path: Path) -> ReadOnlyArray:
    try:
        text = Path(path).read_text(encoding="ascii")
    except FileNotFoundError as exc:
        raise InputError(f"File not found: {path}") from exc
    except UnicodeDecodeError as exc:
        raise InputError(f"{path}: not an ASCII text file") from exc
    if not text.strip():
        raise InputError("empty input")
    values = []
    for number, line in enumerate(text.splitlines(), start=1):
        token = line.strip()
        try:
            value = int(token)
        except ValueError as exc:
            raise InputError(f"{path}:{number}: malformed integer '{token}'") from exc
        if not _INT64_MIN <= value <= _INT64_MAX:
            raise InputError(f"{path}:{number}: value {value} does not fit in 64 bits")
        values.append(value)
    return ReadOnlyArray(values)


def load_binary(path: Path) -> ReadOnlyArray:
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise InputError(f"File not found: {path}") from exc
    if not data:
        raise InputError("empty input")
    if len(data) % 8:
        raise InputError(f"{path}: truncated binary input ({len(data)} bytes is not a multiple of 8)")
    return ReadOnlyArray(np.frombuffer(data, dtype="<i8"))


def generate(spec: GeneratorSpec) -> ReadOnlyArray:
    """Build a synthetic input; identical specs give identical arrays."""

    rng = np.random.default_rng(spec.seed)
    n = spec.count
    if spec.distribution is Distribution.PERMUTATION:
        values = rng.permutation(np.arange(1, n + 1, dtype=np.int64))
    elif spec.distribution is Distribution.SORTED:
        values = np.arange(1, n + 1, dtype=np.int64)
    elif spec.distribution is Distribution.REVERSE_SORTED:
        values = np.arange(n, 0, -1, dtype=np.int64)
    else:
        distinct = max(2, n.bit_length())
        values = rng.integers(1, distinct + 1, size=n, dtype=np.int64)
    logger.debug("Generated %d values (%s, seed=%d)", n, spec.distribution.value, spec.seed)
    return ReadOnlyArray(values)


def load(
    source: Union[Path, str, GeneratorSpec], *, binary: bool = False
) -> ReadOnlyArray:
    if isinstance(source, GeneratorSpec):
        return generate(source)
    path = Path(source)
    return load_binary(path) if binary else load_text(path)


def write_text(path: Path, values: Sequence[int]) -> None:
    Path(path).write_text("".join(f"{int(v)}\n" for v in values), encoding="ascii")


def write_binary(path: Path, values: Sequence[int]) -> None:
    Path(path).write_bytes(np.asarray(values, dtype="<i8").tobytes())
