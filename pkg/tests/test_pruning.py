import math
from fractions import Fraction

import numpy as np
import pytest

from roselect.pruning import (
    FilterPair,
    PruneState,
    PruningError,
    SampleBuffer,
    count_active,
    filter_ranks,
    fred_phase,
    iterated_lg,
    lg_star,
    mp_pass,
    reduce_to_s,
    sample_size,
)
from roselect.readonly import ReadOnlyArray, generate
from roselect.selection import oracle_order
from roselect.structs import Distribution, GeneratorSpec, OrderedKey
from roselect.workspace import WorkspaceMeter, ceil_lg

# passes (scan plus classify, two per sampling pass) per lg N / lg s once plain
# sampling passes run
PLAIN_PASS_FACTOR = 8


class OracleObserver:
    """Checks every pruning state against a full sort of the input."""

    def __init__(self, a, k):
        self.values = a.array
        self.order = oracle_order(a.array)
        self.answer = int(self.order[k - 1])
        self.states = []

    def key(self, i):
        return OrderedKey(int(self.values[i - 1]), i)

    def __call__(self, state):
        previous = self.states[-1].active if self.states else len(self.values)
        self.states.append(state)
        if state.found:
            assert state.answer == self.answer
            return
        filters = state.filters
        inside = [int(i) for i in self.order if filters.contains(self.key(int(i)))]
        assert self.answer in inside
        assert inside.index(self.answer) + 1 == state.k
        assert state.active == len(inside)
        assert state.active < previous


def _sorted_array(n):
    return ReadOnlyArray(np.arange(1, n + 1))


def test_filter_rank_example():
    assert filter_ranks(100, Fraction(16), Fraction(0), Fraction(49)) == (3, 7)


@pytest.mark.parametrize("x, expected", [(1, 0), (2, 1), (16, 3), (65536, 4), (1e300, 5)])
def test_lg_star(x, expected):
    assert lg_star(x) == expected


def test_iterated_lg_and_sample_size():
    assert iterated_lg(256, 2) == 3.0
    assert iterated_lg(256, 0) == 256.0
    assert sample_size(6144, 4096) == 44
    assert sample_size(10, 4096) == 4
    assert sample_size(6144, 4096) % 2 == 0


def test_sorted_batches_thin_into_exact_sample():
    a = _sorted_array(64)
    buffer = SampleBuffer(a, 4, 4, WorkspaceMeter(), sort_level0=True)
    for i in range(1, 65):
        buffer.offer(i)
    sample = buffer.finish()
    assert sample.level == 4
    assert sample.weight == 16
    assert sample.lo_err == 0
    assert sample.hi_err == 49
    assert sample.store.data.tolist() == [16, 32, 48, 64]


def test_quantile_batches_merge_plain_until_full_size():
    a = _sorted_array(64)
    buffer = SampleBuffer(a, 8, 2, WorkspaceMeter())
    trace = []
    for i in range(1, 65):
        buffer.offer(i)
        if i % 8 == 0:
            trace.append(buffer.occupancy())
    assert trace == [
        [2],
        [None, 4],
        [2, 4],
        [None, None, 8],
        [2, None, 8],
        [None, 4, 8],
        [2, 4, 8],
        [None, None, None, 8],
    ]
    sample = buffer.finish()
    assert sample.weight == 8
    assert sample.hi_err == 25
    assert sample.store.data.tolist() == [8, 16, 24, 32, 40, 48, 56, 64]


def test_partial_batches_are_padded():
    a = _sorted_array(10)
    buffer = SampleBuffer(a, 4, 4, WorkspaceMeter(), sort_level0=True)
    for i in range(1, 11):
        buffer.offer(i)
    sample = buffer.finish()
    assert sample.real_count() >= 1
    data = [int(v) for v in sample.store.data if v]
    assert data == sorted(data)


def test_buffer_releases_its_workspace():
    meter = WorkspaceMeter()
    buffer = SampleBuffer(generate(GeneratorSpec(100, 1)), 8, 4, meter)
    for i in range(1, 101):
        buffer.offer(i)
    buffer.finish()
    buffer.release()
    assert meter.current == 0


@pytest.mark.parametrize("s, d", [(5, 2), (2, 2), (8, 1), (8, 9)])
def test_invalid_sample_parameters(s, d):
    with pytest.raises(PruningError):
        SampleBuffer(_sorted_array(10), s, d, WorkspaceMeter())


def test_filters_must_be_ordered():
    with pytest.raises(PruningError, match="out of order"):
        FilterPair(OrderedKey(5, 2), OrderedKey(5, 1))


def test_count_active():
    a = generate(GeneratorSpec(50, 2))
    assert count_active(a, FilterPair()) == 50
    order = oracle_order(a.array)
    low = a.get(int(order[9]))
    high = a.get(int(order[10]))
    assert count_active(a, FilterPair(low, high)) == 0
    assert count_active(a, FilterPair(low, None)) == 40


@pytest.mark.parametrize(
    "distribution", [Distribution.PERMUTATION, Distribution.FEW_DISTINCT, Distribution.SORTED]
)
def test_mp_passes_keep_the_answer(distribution):
    a = generate(GeneratorSpec(700, 5, distribution))
    for k in (1, 2, 233, 350, 699, 700):
        observer = OracleObserver(a, k)
        meter = WorkspaceMeter()
        state = PruneState(FilterPair(), k, len(a))
        while not (state.found or state.endgame):
            state = mp_pass(a, state, 16, meter, observer=observer)
        assert meter.current == 0
        assert state.found or state.active <= 16


def test_fred_phases_keep_the_answer():
    a = generate(GeneratorSpec(1500, 8))
    for k in (1, 100, 750, 1500):
        observer = OracleObserver(a, k)
        state = PruneState(FilterPair(), k, len(a))
        state = fred_phase(a, state, 32, 2, WorkspaceMeter(), observer=observer)
        assert state.passes == 2 * len(observer.states)
        assert len(observer.states) <= 3


def test_fred_with_full_quantiles_matches_mp():
    a = generate(GeneratorSpec(900, 4))
    start = PruneState(FilterPair(), 400, len(a))
    by_mp = mp_pass(a, start, 20, WorkspaceMeter())
    by_fred = fred_phase(a, start, 20, 20, WorkspaceMeter(), max_passes=1)
    assert by_fred.filters == by_mp.filters
    assert by_fred.k == by_mp.k
    assert by_fred.active == by_mp.active


def test_fred_rejects_bad_quantile_counts():
    a = _sorted_array(100)
    with pytest.raises(PruningError):
        fred_phase(a, PruneState(FilterPair(), 1, 100), 8, 16, WorkspaceMeter())


def test_small_active_set_signals_endgame():
    a = _sorted_array(10)
    state = mp_pass(a, PruneState(FilterPair(), 3, 10), 16, WorkspaceMeter())
    assert state.endgame
    assert state.filters == FilterPair()
    assert state.passes == 0


def test_reduce_is_a_no_op_when_everything_fits():
    a = generate(GeneratorSpec(300, 1))
    state = reduce_to_s(a, 17, 300, WorkspaceMeter())
    assert state.filters == FilterPair()
    assert state.k == 17
    assert state.active == 300
    assert a.reads == 0


@pytest.mark.parametrize("k", [1, 1000, 2048, 4096])
def test_reduce_reaches_its_target(k):
    a = generate(GeneratorSpec(4096, 12))
    observer = OracleObserver(a, k)
    meter = WorkspaceMeter()
    state = reduce_to_s(a, k, 6144, meter, target=256, observer=observer)
    assert state.found or state.active <= 256 or state.endgame
    if k == 1 and not state.found:
        assert state.filters.low is None
    assert meter.current == 0


def test_reduce_rejects_bad_rank():
    with pytest.raises(PruningError):
        reduce_to_s(_sorted_array(5), 6, 100, WorkspaceMeter())


@pytest.mark.slow
def test_reduction_bound_at_desk_scale():
    n = 1 << 16
    a = generate(GeneratorSpec(n, 3))
    observer = OracleObserver(a, n // 2)
    state = reduce_to_s(a, n // 2, 1 << 12, WorkspaceMeter(), observer=observer)
    assert state.found or state.active <= 1 << 12
    assert a.reads <= 16 * n * max(1, lg_star(n / (1 << 12))) * 4


def _plain_passes(n, s, seed):
    a = generate(GeneratorSpec(n, seed))
    k = n // 3
    observer = OracleObserver(a, k)
    state = PruneState(FilterPair(), k, n)
    while not (state.found or state.endgame):
        state = mp_pass(a, state, s, WorkspaceMeter(), observer=observer)
    assert state.found or state.active <= s
    return state.passes


@pytest.mark.parametrize("n, s", [(4096, 64), (4096, 256)])
def test_plain_passes_stay_within_lg_n_over_lg_s(n, s):
    for seed in (1, 2):
        assert _plain_passes(n, s, seed) <= PLAIN_PASS_FACTOR * ceil_lg(n) / math.log2(s)


@pytest.mark.slow
@pytest.mark.parametrize("s", [64, 256, 1024])
def test_plain_passes_at_desk_scale(s):
    n = 1 << 16
    assert _plain_passes(n, s, 5) <= PLAIN_PASS_FACTOR * ceil_lg(n) / math.log2(s)
