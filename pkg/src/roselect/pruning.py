"""Sampling passes that shrink the set of active elements.

A pass scans the input once, collects the elements strictly between the
current filters into size-``s`` batches and condenses every batch into a
sorted sample: the whole batch sorted (plain passes) or its ``d``-quantiles
(quantile passes). Samples of equal level are merged bottom-up, thinned to
every other element once they reach ``s`` entries. The single sample left
at the end yields two new candidate filters, and a second scan classifies
the sought element against them.

Every sample carries a weight ``w`` and error bounds ``lo_err``/``hi_err``:
its q-th element has rank between ``q*w - lo_err`` and ``q*w + hi_err``
among the elements it stands for. Candidate filters are read at sample
ranks ``floor((k - 1 - hi_err) / w)`` and ``ceil((k + lo_err) / w)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

import numpy as np

from .baseline import heap_sort, select_ranks
from .readonly import ReadOnlyArray
from .structs import OrderedKey
from .workspace import WORD_BITS, MeteredArray, Region, WorkspaceMeter, ceil_lg

logger = logging.getLogger(__name__)

SAMPLE_MIN = 4
FRED_PHASE_PASSES = 3


class PruningError(ValueError):
    """Raised for invalid sample parameters or ranks."""


@dataclass(frozen=True)
class FilterPair:
    """Exclusive bounds on the candidates; ``None`` is the matching infinity."""

    low: Optional[OrderedKey] = None
    high: Optional[OrderedKey] = None

    def __post_init__(self) -> None:
        if self.low is not None and self.high is not None and not self.low < self.high:
            raise PruningError(f"filters out of order: {self.low} >= {self.high}")

    def admits(self, a: ReadOnlyArray, i: int) -> bool:
        return a.between(i, self.low, self.high)

    def contains(self, key: OrderedKey) -> bool:
        """Uncounted membership test, for oracles."""

        return (self.low is None or self.low < key) and (self.high is None or key < self.high)

    def describe(self) -> str:
        low = "-inf" if self.low is None else f"x{self.low.index}={self.low.value}"
        high = "+inf" if self.high is None else f"x{self.high.index}={self.high.value}"
        return f"({low}, {high})"


@dataclass(frozen=True)
class PruneState:
    """Filters, the running rank inside them and the active count.

    ``answer`` is set once a candidate filter turned out to be the sought
    element; ``endgame`` once too few elements remain to sample.
    """

    filters: FilterPair
    k: int
    active: int
    answer: Optional[int] = None
    endgame: bool = False
    passes: int = 0

    @property
    def found(self) -> bool:
        return self.answer is not None


Observer = Callable[[PruneState], None]


def lg_star(x: float) -> int:
    count = 0
    value = float(x)
    while value > 1.0:
        value = math.log2(value)
        count += 1
    return count


def iterated_lg(x: float, times: int) -> float:
    value = float(x)
    for _ in range(times):
        value = math.log2(value) if value > 1.0 else 0.0
    return value


def sample_size(budget_bits: int, n: int) -> int:
    """``2 * ceil(S / (2 lg^2 N))``, at least :data:`SAMPLE_MIN`."""

    lg = ceil_lg(n)
    return max(SAMPLE_MIN, 2 * -(-budget_bits // (2 * lg * lg)))


def filter_ranks(k: int, weight: Fraction, lo_err: Fraction, hi_err: Fraction) -> Tuple[int, int]:
    """Sample ranks of the candidate low and high filters for running rank k."""

    return math.floor((k - 1 - hi_err) / weight), math.ceil((k + lo_err) / weight)


def count_active(a: ReadOnlyArray, filters: FilterPair) -> int:
    return sum(1 for i in range(1, len(a) + 1) if filters.admits(a, i))


@dataclass(eq=False)
class Sample:
    """Sorted element indices; ``0`` entries are +infinity padding."""

    store: MeteredArray
    weight: Fraction
    lo_err: Fraction
    hi_err: Fraction
    level: int

    @property
    def size(self) -> int:
        return len(self.store)

    def real_count(self) -> int:
        return int(np.count_nonzero(self.store.data))

    def release(self) -> None:
        self.store.release()


class SampleBuffer:
    """Batches offered elements and keeps at most one sample per level."""

    def __init__(
        self,
        a: ReadOnlyArray,
        s: int,
        d: int,
        meter: WorkspaceMeter,
        *,
        sort_level0: bool = False,
    ) -> None:
        if s < SAMPLE_MIN or s % 2:
            raise PruningError(f"sample size must be even and at least {SAMPLE_MIN}, got {s}")
        if not 2 <= d <= s:
            raise PruningError(f"quantile count {d} outside [2, {s}]")
        self.s = s
        self.d = d
        self._a = a
        self._meter = meter
        self._universe = len(a)
        self._sort = sort_level0
        self._levels: List[Optional[Sample]] = []
        self._slots: Optional[Region] = None
        self._batch = meter.array(s, self._universe, "sample-batch")
        self._fill = 0

    def offer(self, i: int) -> None:
        self._batch.data[self._fill] = i
        self._fill += 1
        if self._fill == self.s:
            self._flush()

    def occupancy(self) -> List[Optional[int]]:
        return [None if sample is None else sample.size for sample in self._levels]

    def _flush(self) -> None:
        real = self._fill
        if real == 0:
            return
        batch = self._batch
        batch.data[real:] = 0
        self._fill = 0
        if self._sort:
            heap_sort(batch, self._a, hi=real)
            self._batch = self._meter.array(self.s, self._universe, "sample-batch")
            sample = Sample(batch, Fraction(1), Fraction(0), Fraction(0), 0)
        else:
            s, d = self.s, self.d
            rank = lambda j: -(-j * s // d)  # noqa: E731
            wanted = sum(1 for j in range(1, d + 1) if rank(j) <= real)
            select_ranks(batch, self._a, rank, wanted, self._meter, hi=real)
            store = self._meter.array(d, self._universe, "sample")
            for j in range(1, wanted + 1):
                store.data[j - 1] = batch.data[rank(j) - 1]
            exact = s % d == 0
            sample = Sample(store, Fraction(s, d), Fraction(0), Fraction(0 if exact else 1), 0)
        self._insert(sample)

    def _insert(self, sample: Sample) -> None:
        level = sample.level
        while level < len(self._levels) and self._levels[level] is not None:
            other = self._levels[level]
            self._levels[level] = None
            sample = self._combine(other, sample)
            level += 1
        if level >= len(self._levels):
            self._levels.extend([None] * (level + 1 - len(self._levels)))
            if self._slots is not None:
                self._meter.release(self._slots)
            self._slots = self._meter.allocate(len(self._levels) * WORD_BITS, "sample-levels")
        self._levels[level] = sample

    def _combine(self, x: Sample, y: Optional[Sample]) -> Sample:
        """Merge two samples of one level; ``y=None`` is an all-padding partner."""

        size = x.size
        if size < self.s:
            left, right = x.store.data, (None if y is None else y.store.data)
            weight = x.weight
            out_size = 2 * size
        else:
            left, right = x.store.data[1::2], (None if y is None else y.store.data[1::2])
            weight = 2 * x.weight
            out_size = size
        lo_err = x.lo_err + (y.lo_err if y is not None else 0)
        hi_err = x.hi_err + (y.hi_err if y is not None else 0) + weight - 1
        out = self._meter.array(out_size, self._universe, "sample")
        self._merge(left, right, out.data)
        x.release()
        if y is not None:
            y.release()
        return Sample(out, weight, lo_err, hi_err, x.level + 1)

    def _merge(self, left: np.ndarray, right: Optional[np.ndarray], out: np.ndarray) -> None:
        a = self._a
        li = ri = 0
        lsize = left.shape[0]
        rsize = 0 if right is None else right.shape[0]
        for pos in range(out.shape[0]):
            lv = int(left[li]) if li < lsize else 0
            rv = int(right[ri]) if ri < rsize else 0
            if lv and (not rv or a.less(lv, rv)):
                out[pos] = lv
                li += 1
            elif rv:
                out[pos] = rv
                ri += 1
            else:
                out[pos:] = 0
                return

    def finish(self) -> Sample:
        """Flush the partial batch and pad lower samples up into one sample."""

        self._flush()
        while True:
            occupied = [level for level, sample in enumerate(self._levels) if sample is not None]
            if not occupied:
                raise PruningError("no elements were offered")
            if len(occupied) == 1:
                return self._levels[occupied[0]]
            lowest = occupied[0]
            sample = self._levels[lowest]
            self._levels[lowest] = None
            self._insert(self._combine(sample, None))

    def release(self) -> None:
        self._batch.release()
        for sample in self._levels:
            if sample is not None:
                sample.release()
        self._levels = []
        if self._slots is not None:
            self._meter.release(self._slots)
            self._slots = None


def _candidates(a: ReadOnlyArray, sample: Sample, k: int) -> Tuple[Optional[OrderedKey], OrderedKey]:
    real = sample.real_count()
    q_lo, q_hi = filter_ranks(k, sample.weight, sample.lo_err, sample.hi_err)
    q_hi = min(max(q_hi, 1), real)
    q_lo = min(max(q_lo, 0), q_hi - 1)
    data = sample.store.data
    low = a.get(int(data[q_lo - 1])) if q_lo >= 1 else None
    return low, a.get(int(data[q_hi - 1]))


def _classify(
    a: ReadOnlyArray, state: PruneState, low: Optional[OrderedKey], high: OrderedKey
) -> PruneState:
    """One scan placing the sought element relative to two active candidates."""

    filters = state.filters
    below_low = 0
    up_to_high = 0
    for i in range(1, len(a) + 1):
        if not filters.admits(a, i):
            continue
        if low is not None and a.key_less(i, low):
            below_low += 1
            up_to_high += 1
        elif i == high.index or a.key_less(i, high):
            up_to_high += 1

    k = state.k
    passes = state.passes + 1
    if low is not None:
        if k <= below_low:
            return PruneState(FilterPair(filters.low, low), k, below_low, passes=passes)
        if k == below_low + 1:
            return replace(state, answer=low.index, passes=passes)
    dropped = below_low + (1 if low is not None else 0)
    if k < up_to_high:
        narrowed = FilterPair(low if low is not None else filters.low, high)
        return PruneState(narrowed, k - dropped, up_to_high - 1 - dropped, passes=passes)
    if k == up_to_high:
        return replace(state, answer=high.index, passes=passes)
    return PruneState(FilterPair(high, filters.high), k - up_to_high, state.active - up_to_high, passes=passes)


def _sample_pass(
    a: ReadOnlyArray,
    state: PruneState,
    s: int,
    d: int,
    meter: WorkspaceMeter,
    observer: Optional[Observer],
    *,
    sort_level0: bool,
) -> PruneState:
    if state.found:
        return state
    if state.active <= s:
        return replace(state, endgame=True)
    buffer = SampleBuffer(a, s, d, meter, sort_level0=sort_level0)
    try:
        filters = state.filters
        for i in range(1, len(a) + 1):
            if filters.admits(a, i):
                buffer.offer(i)
        sample = buffer.finish()
        logger.debug(
            "Pass over %d active: level-%d sample of %d, weight %s, errors -%s/+%s",
            state.active,
            sample.level,
            sample.size,
            sample.weight,
            sample.lo_err,
            sample.hi_err,
        )
        low, high = _candidates(a, sample, state.k)
    finally:
        buffer.release()
    result = _classify(a, replace(state, passes=state.passes + 1), low, high)
    logger.debug(
        "Filters %s keep %d active, k=%d%s",
        result.filters.describe(),
        result.active,
        result.k,
        "" if result.answer is None else f", answer x{result.answer}",
    )
    if observer is not None:
        observer(result)
    return result


def mp_pass(
    a: ReadOnlyArray,
    state: PruneState,
    s: int,
    meter: WorkspaceMeter,
    *,
    observer: Optional[Observer] = None,
) -> PruneState:
    """One sampling pass with fully sorted level-0 batches."""

    return _sample_pass(a, state, s, s, meter, observer, sort_level0=True)


def fred_phase(
    a: ReadOnlyArray,
    state: PruneState,
    s: int,
    d: int,
    meter: WorkspaceMeter,
    *,
    goal: int = 0,
    max_passes: int = FRED_PHASE_PASSES,
    observer: Optional[Observer] = None,
) -> PruneState:
    """Up to ``max_passes`` quantile passes, stopping once ``active <= goal``."""

    if not 2 <= d <= s:
        raise PruningError(f"quantile count {d} outside [2, {s}]")
    for _ in range(max_passes):
        if state.found or state.endgame or state.active <= goal:
            break
        state = _sample_pass(a, state, s, d, meter, observer, sort_level0=False)
    return state


def reduce_to_s(
    a: ReadOnlyArray,
    k: int,
    budget_bits: int,
    meter: WorkspaceMeter,
    *,
    target: Optional[int] = None,
    observer: Optional[Observer] = None,
) -> PruneState:
    """Prune until at most ``target`` (default ``budget_bits``) elements are active.

    Quantile phases run with ``d = lg^(P) s`` for ``P = lg* s - 2`` down to
    zero; plain passes take over once ``d >= min(s, active / s)``.
    """

    n = len(a)
    if not 1 <= k <= n:
        raise PruningError(f"rank {k} outside [1, {n}]")
    goal = budget_bits if target is None else target
    state = PruneState(FilterPair(), k, n)
    if n <= goal:
        return state
    s = sample_size(budget_bits, n)
    phase = max(0, lg_star(s) - 2)
    switched = False
    logger.debug("Reducing %d elements to %d with s=%d, starting phase %d", n, goal, s, phase)
    while state.active > goal and not state.found and not state.endgame:
        d = s if phase <= 0 else max(2, math.floor(iterated_lg(s, phase)))
        if switched or d >= min(s, state.active // s):
            switched = True
            state = mp_pass(a, state, s, meter, observer=observer)
        else:
            phase_goal = max(goal, math.ceil(n / max(1.0, iterated_lg(s, phase))))
            state = fred_phase(a, state, s, d, meter, goal=phase_goal, observer=observer)
            phase -= 1
    return state
