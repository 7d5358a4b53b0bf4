import numpy as np
import pytest

from roselect.baseline import baseline_select, heap_sort, select_ranks
from roselect.readonly import ReadOnlyArray, generate
from roselect.selection import oracle_order
from roselect.structs import Distribution, GeneratorSpec
from roselect.workspace import WorkspaceMeter


def _indices(meter, n):
    indices = meter.array(n, n, "indices")
    indices.data[:] = np.arange(1, n + 1)
    return indices


def test_hand_sorted_example():
    a = ReadOnlyArray([3, 1, 4, 2, 5])
    meter = WorkspaceMeter()
    assert baseline_select(_indices(meter, 5), a, 2, meter) == 4
    assert baseline_select(_indices(meter, 5), a, 1, meter) == 2


def test_duplicates_break_ties_by_index():
    a = ReadOnlyArray([5, 5, 5])
    meter = WorkspaceMeter()
    assert baseline_select(_indices(meter, 3), a, 2, meter) == 2


@pytest.mark.parametrize(
    "distribution", [Distribution.PERMUTATION, Distribution.FEW_DISTINCT, Distribution.REVERSE_SORTED]
)
def test_every_rank_matches_sorting_oracle(distribution):
    a = generate(GeneratorSpec(157, 4, distribution))
    order = oracle_order(a.array)
    meter = WorkspaceMeter()
    for k in range(1, 158):
        with _indices(meter, 157) as indices:
            assert baseline_select(indices, a, k, meter) == order[k - 1]
    assert meter.current == 0


def test_selection_partitions_around_the_answer():
    a = generate(GeneratorSpec(300, 2))
    order = oracle_order(a.array)
    meter = WorkspaceMeter()
    indices = _indices(meter, 300)
    baseline_select(indices, a, 120, meter)
    assert indices.data[119] == order[119]
    assert set(indices.data[:119].tolist()) == set(order[:119].tolist())


def test_subrange_selection_leaves_the_rest_alone():
    a = generate(GeneratorSpec(50, 6))
    meter = WorkspaceMeter()
    indices = _indices(meter, 50)
    answer = baseline_select(indices, a, 3, meter, lo=10, hi=20)
    expected = sorted(range(11, 21), key=lambda i: (a.array[i - 1], i))[2]
    assert answer == expected
    assert indices.data[:10].tolist() == list(range(1, 11))
    assert indices.data[20:].tolist() == list(range(21, 51))


def test_comparisons_stay_linear():
    counts = {}
    for n in (1000, 4000):
        a = generate(GeneratorSpec(n, 1))
        meter = WorkspaceMeter()
        baseline_select(_indices(meter, n), a, n // 2, meter)
        counts[n] = a.comparisons
    assert counts[4000] <= 5 * counts[1000]


def test_rank_out_of_range():
    a = ReadOnlyArray([1, 2])
    meter = WorkspaceMeter()
    with pytest.raises(ValueError, match="outside"):
        baseline_select(_indices(meter, 2), a, 3, meter)


def test_select_ranks_places_every_quantile():
    a = generate(GeneratorSpec(64, 9))
    order = oracle_order(a.array)
    meter = WorkspaceMeter()
    indices = _indices(meter, 64)
    ranks = [8, 16, 24, 32, 40, 48, 56, 64]
    select_ranks(indices, a, lambda j: ranks[j - 1], len(ranks), meter)
    for rank in ranks:
        assert indices.data[rank - 1] == order[rank - 1]


def test_heap_sort_orders_a_slice():
    a = generate(GeneratorSpec(40, 3, Distribution.FEW_DISTINCT))
    meter = WorkspaceMeter()
    indices = _indices(meter, 40)
    heap_sort(indices, a, hi=25)
    expected = sorted(range(1, 26), key=lambda i: (a.array[i - 1], i))
    assert indices.data[:25].tolist() == expected
    assert indices.data[25:].tolist() == list(range(26, 41))


def test_recursion_frames_are_metered():
    a = generate(GeneratorSpec(500, 0))
    meter = WorkspaceMeter()
    baseline_select(_indices(meter, 500), a, 250, meter)
    assert meter.report().by_label["select-frame"] >= 256
