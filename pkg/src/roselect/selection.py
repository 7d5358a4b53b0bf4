"""Selection algorithms for read-only arrays under a workspace meter.

``select_log_squared`` keeps only a stack of constant-size zone frames,
``select_linear_bits`` records its median-of-medians rounds in a wavelet
stack of Theta(N) bits, and ``select_general`` first prunes with sampling
passes down to a budget-sized candidate set, then runs the same rounds over
a count vector that maps candidates back to input buckets.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence, Tuple

import numpy as np

from .baseline import baseline_select
from .bitvector import BitBuffer, RsBitVector
from .pruning import FilterPair, Observer, PruneState, reduce_to_s
from .readonly import ReadOnlyArray
from .structs import Algorithm, OrderedKey, SelectionResult, SelectionStats
from .wavelet_stack import WaveletStack
from .workspace import (
    WORD_BITS,
    Region,
    WorkspaceMeter,
    ceil_lg,
    index_bits,
)

logger = logging.getLogger(__name__)

ZONE_COUNT = 16
BASE_CASE_SIZE = 64
ZONE_FRAME_WORDS = 8
# candidates kept for the count vector: S // ACTIVE_DIVISOR, also the bucket count
ACTIVE_DIVISOR = 16
GENERAL_SPACE_FACTOR = 4
LINEAR_BITS_SPACE_FACTOR = 32
SCRATCH_ALLOWANCE_BITS = 8192


class SelectionParameterError(ValueError):
    """Raised for a rank or budget outside the supported range."""


def _check_rank(a: ReadOnlyArray, k: int) -> None:
    if not 1 <= k <= len(a):
        raise SelectionParameterError(f"rank {k} outside [1, {len(a)}]")


def min_budget_bits(n: int) -> int:
    return ceil_lg(n) ** 3


def linear_bits_capacity(n: int) -> int:
    """Budget from which the Theta(N)-bit algorithm is chosen automatically."""

    return LINEAR_BITS_SPACE_FACTOR * n + SCRATCH_ALLOWANCE_BITS * ceil_lg(n)


def pruning_only_threshold(n: int) -> int:
    """``ceil(sqrt(N lg N))``; budgets up to it skip the count vector."""

    product = n * ceil_lg(n)
    root = math.isqrt(product)
    return root if root * root == product else root + 1


def meter_for(algorithm: Algorithm, budget_bits: Optional[int]) -> WorkspaceMeter:
    """A meter whose hard cap matches the algorithm's space guarantee."""

    if budget_bits is None or algorithm is Algorithm.ORACLE:
        return WorkspaceMeter()
    if algorithm is Algorithm.GENERAL:
        return WorkspaceMeter(GENERAL_SPACE_FACTOR * budget_bits + SCRATCH_ALLOWANCE_BITS)
    return WorkspaceMeter(budget_bits)


def oracle_order(values: np.ndarray) -> np.ndarray:
    """1-based indices sorted by the tie-broken order."""

    positions = np.arange(1, values.shape[0] + 1)
    return np.lexsort((positions, values)) + 1


def oracle_select(a: ReadOnlyArray, k: int) -> int:
    _check_rank(a, k)
    return int(oracle_order(a.array)[k - 1])


class _Run:
    """Counter deltas, timing and the meter peak for one selection call."""

    def __init__(self, a: ReadOnlyArray, meter: WorkspaceMeter, algorithm: Algorithm) -> None:
        self.stats = SelectionStats(algorithm=algorithm.value)
        self._a = a
        self._meter = meter
        self._reads, self._comparisons = a.counters()
        self._started = time.perf_counter()

    def finish(self, answer: int, k: int) -> SelectionResult:
        stats = self.stats
        stats.elapsed = time.perf_counter() - self._started
        reads, comparisons = self._a.counters()
        stats.reads = reads - self._reads
        stats.comparisons = comparisons - self._comparisons
        report = self._meter.report()
        stats.peak_workspace_bits = report.peak
        stats.peak_by_label = report.by_label
        value = self._a.array[answer - 1].item()
        logger.info(
            "%s selected x%d (k=%d): %d comparisons, %d reads, %d passes, peak %d bits",
            stats.algorithm,
            answer,
            k,
            stats.comparisons,
            stats.reads,
            stats.passes,
            stats.peak_workspace_bits,
        )
        return SelectionResult(answer, value, stats)


def select_oracle(a: ReadOnlyArray, k: int, meter: WorkspaceMeter) -> SelectionResult:
    """Full sort in unrestricted memory; not charged to the meter."""

    run = _Run(a, meter, Algorithm.ORACLE)
    answer = oracle_select(a, k)
    return run.finish(answer, k)


def select_baseline(a: ReadOnlyArray, k: int, meter: WorkspaceMeter) -> SelectionResult:
    """Copy every index into workspace and run median of medians."""

    _check_rank(a, k)
    run = _Run(a, meter, Algorithm.BASELINE)
    n = len(a)
    with meter.array(n, n, "all-indices") as indices:
        indices.data[:] = np.arange(1, n + 1)
        run.stats.passes += 1
        answer = baseline_select(indices, a, k, meter)
    return run.finish(answer, k)


@dataclass(eq=False)
class ZoneFrame:
    """One activation of the zone recursion.

    After its heavy-zone median is classified the frame is reused in place
    for the call on the whole segment with the narrowed filters, so the
    frame needs no first-call or second-call flag.
    """

    first: int
    last: int
    filters: FilterPair
    k: int
    active: int = 0
    region: Optional[Region] = field(default=None, repr=False)


def _zone_scan(a: ReadOnlyArray, frame: ZoneFrame) -> Tuple[int, int, int, int]:
    """Active total of the segment and the leftmost heaviest zone."""

    width = -(-(frame.last - frame.first + 1) // ZONE_COUNT)
    total = 0
    heavy = -1
    heavy_first = heavy_last = frame.first
    filters = frame.filters
    for zone_first in range(frame.first, frame.last + 1, width):
        zone_last = min(zone_first + width - 1, frame.last)
        count = sum(1 for i in range(zone_first, zone_last + 1) if filters.admits(a, i))
        total += count
        if count > heavy:
            heavy, heavy_first, heavy_last = count, zone_first, zone_last
    return total, heavy_first, heavy_last, heavy


def _scan_select(a: ReadOnlyArray, frame: ZoneFrame) -> int:
    """k-th active element of a small segment by repeated minimum scans."""

    floor_key = frame.filters.low
    high = frame.filters.high
    best: Optional[OrderedKey] = None
    for _ in range(frame.k):
        best = None
        for i in range(frame.first, frame.last + 1):
            if a.between(i, floor_key, high) and (best is None or a.key_less(i, best)):
                best = a.get(i)
        floor_key = best
    assert best is not None
    return best.index


def select_log_squared(a: ReadOnlyArray, k: int, meter: WorkspaceMeter) -> SelectionResult:
    """Zone recursion with an explicit, metered stack of :class:`ZoneFrame`."""

    _check_rank(a, k)
    run = _Run(a, meter, Algorithm.LOGSQ)
    stats = run.stats
    frame_bits = ZONE_FRAME_WORDS * WORD_BITS
    stack: list[ZoneFrame] = []

    def push(frame: ZoneFrame) -> None:
        frame.region = meter.allocate(frame_bits, "zone-frame")
        stack.append(frame)

    def pop() -> None:
        frame = stack.pop()
        assert frame.region is not None
        meter.release(frame.region)

    push(ZoneFrame(1, len(a), FilterPair(), k))
    returned: Optional[int] = None
    while stack:
        frame = stack[-1]
        if returned is not None:
            median = returned
            returned = None
            pivot = a.get(median)
            filters = frame.filters
            sigma = sum(
                1
                for i in range(frame.first, frame.last + 1)
                if filters.admits(a, i) and a.key_less(i, pivot)
            )
            stats.passes += 1
            if frame.k == sigma + 1:
                pop()
                returned = median
                continue
            if frame.k <= sigma:
                frame.filters = FilterPair(filters.low, pivot)
                remaining = sigma
            else:
                frame.filters = FilterPair(pivot, filters.high)
                frame.k -= sigma + 1
                remaining = frame.active - sigma - 1
            stats.zone_steps.append((frame.active, remaining))
            continue

        total, heavy_first, heavy_last, heavy = _zone_scan(a, frame)
        stats.passes += 1
        frame.active = total
        if total < BASE_CASE_SIZE:
            returned = _scan_select(a, frame)
            stats.passes += frame.k
            pop()
            continue
        push(ZoneFrame(heavy_first, heavy_last, frame.filters, (heavy + 1) // 2))

    assert returned is not None
    return run.finish(returned, k)


def _median_rounds(
    a: ReadOnlyArray,
    k: int,
    stack: WaveletStack,
    meter: WorkspaceMeter,
    stats: SelectionStats,
    *,
    group_size: int,
    actives: Callable[[], Iterator[int]],
    finished: Callable[[int], bool],
) -> Tuple[Optional[int], int]:
    """Median-of-medians pruning recorded as wavelet stack levels.

    Returns the answer if a pivot hit rank ``k``, else ``None`` and the
    running rank among the surviving actives.
    """

    n = stack.active_count
    universe = len(a)
    slack = ceil_lg(universe)
    while not finished(n):
        groups = -(-n // group_size)
        base, extra = divmod(n, groups)
        medians = meter.array(groups, universe, "group-medians")
        group = meter.array(base + (1 if extra else 0), universe, "group")
        try:
            it = actives()
            for g in range(groups):
                size = base + (1 if g < extra else 0)
                for slot in range(size):
                    group.data[slot] = next(it)
                medians.data[g] = baseline_select(group, a, (size + 1) // 2, meter, hi=size)
            stats.passes += 1
            median = baseline_select(medians, a, (groups + 1) // 2, meter)
        finally:
            group.release()
            medians.release()

        pivot = a.get(median)
        sigma = sum(1 for i in actives() if a.key_less(i, pivot))
        stats.passes += 1
        if k == sigma + 1:
            stats.rounds.append((n, 0))
            return median, k
        if k <= sigma:
            survivors = sigma
            stack.push_level(1 if a.key_less(i, pivot) else 0 for i in actives())
        else:
            survivors = n - sigma - 1
            k -= sigma + 1
            stack.push_level(1 if a.key_greater(i, pivot) else 0 for i in actives())
        stats.passes += 1
        stats.rounds.append((n, survivors))
        if survivors > 0.75 * n + slack:
            stats.rate_violations += 1
            logger.warning("Round kept %d of %d active elements", survivors, n)
        logger.debug("Round: %d -> %d active, k=%d", n, survivors, k)
        n = survivors
    return None, k


def _finish_in_workspace(
    a: ReadOnlyArray,
    k: int,
    n: int,
    actives: Iterator[int],
    meter: WorkspaceMeter,
    release: Callable[[], None],
) -> int:
    """Copy the ``n`` remaining actives, drop the structures, select."""

    with meter.array(n, len(a), "active-copy") as copy:
        for slot, i in enumerate(actives):
            copy.data[slot] = i
        release()
        return baseline_select(copy, a, k, meter)


def select_linear_bits(a: ReadOnlyArray, k: int, meter: WorkspaceMeter) -> SelectionResult:
    """Median-of-medians rounds over a wavelet stack, Theta(N) bits."""

    _check_rank(a, k)
    run = _Run(a, meter, Algorithm.LINEAR_BITS)
    stats = run.stats
    n = len(a)
    group_size = -(-n // ceil_lg(n))
    stack = WaveletStack.create(n, meter)
    try:
        answer, k_left = _median_rounds(
            a,
            k,
            stack,
            meter,
            stats,
            group_size=group_size,
            actives=stack.iter_active,
            finished=lambda active: active <= group_size,
        )
        if answer is None:
            stats.passes += 1
            answer = _finish_in_workspace(
                a, k_left, stack.active_count, stack.iter_active(), meter, stack.release
            )
    finally:
        stack.release()
    return run.finish(answer, k)


@dataclass(frozen=True)
class BucketLocation:
    """Where the j-th candidate sits: count-vector position ``a``, bucket
    ``u``, bucket border ``z`` (0 for the first bucket) and ``g``, its rank
    among the candidates of bucket ``u``."""

    position: int
    bucket: int
    border: int
    offset: int


class CountVector:
    """Unary per-bucket candidate counts, 0-bits separating buckets."""

    def __init__(self, bits: RsBitVector, bucket_width: int, length: int) -> None:
        self.bits = bits
        self.bucket_width = bucket_width
        self.length = length
        self.buckets = bits.zeros_total + 1

    @property
    def active(self) -> int:
        return self.bits.ones_total

    @classmethod
    def build(
        cls,
        a: ReadOnlyArray,
        filters: FilterPair,
        buckets: int,
        active: int,
        meter: WorkspaceMeter,
    ) -> "CountVector":
        n = len(a)
        width = -(-n // buckets)
        count = -(-n // width)
        buffer = BitBuffer.allocate(meter, active + count - 1, "count-vector")
        for u in range(count):
            start = u * width + 1
            stop = min(start + width, n + 1)
            buffer.append_run(1, sum(1 for i in range(start, stop) if filters.admits(a, i)))
            if u < count - 1:
                buffer.append(0)
        bits = RsBitVector(buffer, meter, select_zeros=True, label="count-vector")
        return cls(bits, width, n)

    @classmethod
    def from_counts(
        cls, counts: Sequence[int], bucket_width: int, meter: WorkspaceMeter
    ) -> "CountVector":
        buffer = BitBuffer.allocate(meter, sum(counts) + len(counts) - 1, "count-vector")
        for u, count in enumerate(counts):
            buffer.append_run(1, count)
            if u < len(counts) - 1:
                buffer.append(0)
        bits = RsBitVector(buffer, meter, select_zeros=True, label="count-vector")
        return cls(bits, bucket_width, bucket_width * len(counts))

    def locate(self, j: int) -> BucketLocation:
        position = self.bits.select(j)
        bucket = position - j + 1
        if bucket == 1:
            return BucketLocation(position, bucket, 0, position)
        border = self.bits.complement_select(bucket - 1)
        return BucketLocation(position, bucket, border, position - border)

    def bucket_start(self, u: int) -> int:
        return (u - 1) * self.bucket_width + 1

    def release(self) -> None:
        self.bits.release()


class BucketCursor:
    """Iterates input indices of the actives recorded in a wavelet stack
    built over the candidates of a :class:`CountVector`."""

    def __init__(
        self,
        a: ReadOnlyArray,
        counts: CountVector,
        stack: WaveletStack,
        filters: FilterPair,
    ) -> None:
        self._a = a
        self._counts = counts
        self._stack = stack
        self._filters = filters
        self.bucket_reads = 0

    def __iter__(self) -> Iterator[int]:
        a, counts, filters = self._a, self._counts, self._filters
        bucket = 0
        pos = 0
        seen = 0
        for i in range(1, self._stack.active_count + 1):
            where = counts.locate(self._stack.index(i))
            if where.bucket != bucket:
                bucket = where.bucket
                pos = counts.bucket_start(bucket)
                seen = 0
            while seen < where.offset:
                self.bucket_reads += 1
                if filters.admits(a, pos):
                    seen += 1
                pos += 1
            yield pos - 1


def select_by_pruning(
    a: ReadOnlyArray,
    k: int,
    budget_bits: int,
    meter: WorkspaceMeter,
    *,
    observer: Optional[Observer] = None,
    algorithm: Algorithm = Algorithm.GENERAL,
) -> SelectionResult:
    """Sampling passes until the candidates fit in half the budget, then copy."""

    _check_rank(a, k)
    run = _Run(a, meter, algorithm)
    target = max(1, (budget_bits // 2) // index_bits(len(a)))
    state = reduce_to_s(a, k, budget_bits, meter, target=target, observer=observer)
    run.stats.passes += state.passes
    if state.found:
        assert state.answer is not None
        return run.finish(state.answer, k)
    return run.finish(_copy_candidates(a, state, meter, run.stats), k)


def _copy_candidates(
    a: ReadOnlyArray, state: PruneState, meter: WorkspaceMeter, stats: SelectionStats
) -> int:
    filters = state.filters
    candidates = (i for i in range(1, len(a) + 1) if filters.admits(a, i))
    stats.passes += 1
    return _finish_in_workspace(a, state.k, state.active, candidates, meter, lambda: None)


def select_general(
    a: ReadOnlyArray,
    k: int,
    budget_bits: int,
    meter: WorkspaceMeter,
    *,
    observer: Optional[Observer] = None,
) -> SelectionResult:
    """Selection in Theta(S) bits for ``lg^3 N <= S``."""

    _check_rank(a, k)
    n = len(a)
    if budget_bits < min_budget_bits(n):
        raise SelectionParameterError(
            f"budget of {budget_bits} bits is below the supported minimum "
            f"lg^3 N = {min_budget_bits(n)} bits for N = {n}"
        )
    if budget_bits <= pruning_only_threshold(n):
        return select_by_pruning(a, k, budget_bits, meter, observer=observer)

    run = _Run(a, meter, Algorithm.GENERAL)
    stats = run.stats
    active_target = max(1, budget_bits // ACTIVE_DIVISOR)
    state = reduce_to_s(a, k, budget_bits, meter, target=active_target, observer=observer)
    stats.passes += state.passes
    if state.found:
        assert state.answer is not None
        return run.finish(state.answer, k)

    counts = CountVector.build(a, state.filters, min(active_target, n), state.active, meter)
    stats.passes += 1
    stack = WaveletStack.create(counts.active, meter)
    cursor = BucketCursor(a, counts, stack, state.filters)
    half = budget_bits // 2
    bits_per_index = index_bits(n)

    def finished(active: int) -> bool:
        if active * bits_per_index > half:
            return False
        if active <= counts.bucket_width:
            return True
        first = counts.locate(stack.first_active()).bucket
        return first == counts.locate(stack.last_active()).bucket

    def release() -> None:
        stack.release()
        counts.release()

    try:
        answer, k_left = _median_rounds(
            a,
            state.k,
            stack,
            meter,
            stats,
            group_size=-(-counts.active // ceil_lg(counts.active)),
            actives=cursor.__iter__,
            finished=finished,
        )
        if answer is None:
            stats.passes += 1
            answer = _finish_in_workspace(
                a, k_left, stack.active_count, iter(cursor), meter, release
            )
    finally:
        release()
    stats.bucket_reads = cursor.bucket_reads
    return run.finish(answer, k)


def resolve_algorithm(n: int, budget_bits: Optional[int]) -> Algorithm:
    """The algorithm ``auto`` stands for at this size and budget."""

    if budget_bits is None or budget_bits >= linear_bits_capacity(n):
        return Algorithm.LINEAR_BITS
    if budget_bits >= min_budget_bits(n):
        return Algorithm.GENERAL
    raise SelectionParameterError(
        f"budget of {budget_bits} bits is outside the supported range: at least "
        f"lg^3 N = {min_budget_bits(n)} bits for N = {n}"
    )


def select_auto(
    a: ReadOnlyArray,
    k: int,
    budget_bits: Optional[int],
    meter: Optional[WorkspaceMeter] = None,
) -> SelectionResult:
    algorithm = resolve_algorithm(len(a), budget_bits)
    return run_algorithm(a, k, algorithm, budget_bits, meter)


def run_algorithm(
    a: ReadOnlyArray,
    k: int,
    algorithm: Algorithm,
    budget_bits: Optional[int],
    meter: Optional[WorkspaceMeter] = None,
) -> SelectionResult:
    _check_rank(a, k)
    if algorithm is Algorithm.AUTO:
        algorithm = resolve_algorithm(len(a), budget_bits)
    if meter is None:
        meter = meter_for(algorithm, budget_bits)
    if algorithm is Algorithm.GENERAL:
        if budget_bits is None:
            raise SelectionParameterError("the general algorithm needs a bit budget")
        return select_general(a, k, budget_bits, meter)
    runners = {
        Algorithm.LINEAR_BITS: select_linear_bits,
        Algorithm.LOGSQ: select_log_squared,
        Algorithm.BASELINE: select_baseline,
        Algorithm.ORACLE: select_oracle,
    }
    return runners[algorithm](a, k, meter)
