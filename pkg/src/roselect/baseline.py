"""In-workspace selection over arrays of element indices.

These routines permute an index array that lives in metered workspace and
compare the referenced elements through the :class:`ReadOnlyArray`, never
touching the input itself. Selection is median of medians with groups of
five: the outer narrowing loop is iterative and only the pivot search
recurses, each level charging one frame to the meter.
"""

from __future__ import annotations

from typing import Callable, Union

import numpy as np

from .readonly import ReadOnlyArray
from .workspace import MeteredArray, WorkspaceMeter

FRAME_WORDS = 4
_FRAME_BITS = FRAME_WORDS * 64
_SMALL = 5

IndexArray = Union[MeteredArray, np.ndarray]


def _data(indices: IndexArray) -> np.ndarray:
    return indices.data if isinstance(indices, MeteredArray) else indices


def _insertion_sort(a: ReadOnlyArray, idx: np.ndarray, lo: int, hi: int) -> None:
    for i in range(lo + 1, hi):
        moving = int(idx[i])
        j = i - 1
        while j >= lo and a.less(moving, int(idx[j])):
            idx[j + 1] = idx[j]
            j -= 1
        idx[j + 1] = moving


def _partition(a: ReadOnlyArray, idx: np.ndarray, lo: int, hi: int, pivot: int) -> int:
    """Partition ``idx[lo:hi]`` around the element ``pivot``; return its slot."""

    for p in range(lo, hi):
        if int(idx[p]) == pivot:
            break
    last = hi - 1
    idx[p], idx[last] = idx[last], idx[p]
    key = a.get(pivot)
    store = lo
    for i in range(lo, last):
        if a.key_less(int(idx[i]), key):
            idx[i], idx[store] = idx[store], idx[i]
            store += 1
    idx[store], idx[last] = idx[last], idx[store]
    return store


def _pivot(a: ReadOnlyArray, idx: np.ndarray, lo: int, hi: int, meter: WorkspaceMeter) -> int:
    """Median of the lower medians of groups of five, moved to the front."""

    groups = 0
    for start in range(lo, hi, _SMALL):
        end = min(start + _SMALL, hi)
        _insertion_sort(a, idx, start, end)
        median = start + (end - start - 1) // 2
        idx[lo + groups], idx[median] = idx[median], idx[lo + groups]
        groups += 1
    return _select_range(a, idx, lo, lo + groups, (groups + 1) // 2, meter)


def _select_range(
    a: ReadOnlyArray, idx: np.ndarray, lo: int, hi: int, k: int, meter: WorkspaceMeter
) -> int:
    """k-th smallest of ``idx[lo:hi]``; leaves it at ``lo + k - 1`` with
    smaller elements to its left and larger ones to its right."""

    with meter.scoped(_FRAME_BITS, "select-frame"):
        while True:
            if hi - lo <= _SMALL:
                _insertion_sort(a, idx, lo, hi)
                return int(idx[lo + k - 1])
            pivot = _pivot(a, idx, lo, hi, meter)
            slot = _partition(a, idx, lo, hi, pivot)
            rank = slot - lo + 1
            if k == rank:
                return pivot
            if k < rank:
                hi = slot
            else:
                k -= rank
                lo = slot + 1


def baseline_select(
    indices: IndexArray,
    a: ReadOnlyArray,
    k: int,
    meter: WorkspaceMeter,
    *,
    lo: int = 0,
    hi: int | None = None,
) -> int:
    """Input index of the k-th smallest element referenced by ``indices[lo:hi]``.

    The slice is permuted in place. Uses O(hi - lo) comparisons.
    """

    idx = _data(indices)
    if hi is None:
        hi = int(idx.shape[0])
    if not 1 <= k <= hi - lo:
        raise ValueError(f"rank {k} outside [1, {hi - lo}]")
    return _select_range(a, idx, lo, hi, k, meter)


def select_ranks(
    indices: IndexArray,
    a: ReadOnlyArray,
    ranks: Callable[[int], int],
    count: int,
    meter: WorkspaceMeter,
    *,
    lo: int = 0,
    hi: int | None = None,
) -> None:
    """Place the elements of ranks ``ranks(1) < ... < ranks(count)`` at their
    sorted slots of ``indices[lo:hi]``.

    Recurses on the middle rank, so the cost is O((hi - lo) * lg count).
    """

    idx = _data(indices)
    if hi is None:
        hi = int(idx.shape[0])
    base = lo

    def arrange(lo: int, hi: int, first: int, last: int) -> None:
        if first > last or hi - lo <= 0:
            return
        with meter.scoped(_FRAME_BITS, "multiselect-frame"):
            middle = (first + last) // 2
            slot = base + ranks(middle) - 1
            _select_range(a, idx, lo, hi, slot - lo + 1, meter)
            arrange(lo, slot, first, middle - 1)
            arrange(slot + 1, hi, middle + 1, last)

    arrange(lo, hi, 1, count)


def heap_sort(
    indices: IndexArray, a: ReadOnlyArray, *, lo: int = 0, hi: int | None = None
) -> None:
    """Sort ``indices[lo:hi]`` in place by the tie-broken element order."""

    idx = _data(indices)
    if hi is None:
        hi = int(idx.shape[0])
    size = hi - lo

    def sift(root: int, end: int) -> None:
        while True:
            child = 2 * root + 1
            if child >= end:
                return
            if child + 1 < end and a.less(int(idx[lo + child]), int(idx[lo + child + 1])):
                child += 1
            if not a.less(int(idx[lo + root]), int(idx[lo + child])):
                return
            idx[lo + root], idx[lo + child] = idx[lo + child], idx[lo + root]
            root = child

    for root in range(size // 2 - 1, -1, -1):
        sift(root, size)
    for end in range(size - 1, 0, -1):
        idx[lo], idx[lo + end] = idx[lo + end], idx[lo]
        sift(0, end)
