import numpy as np
import pytest

from roselect.readonly import (
    IndexBoundsError,
    InputError,
    ReadOnlyArray,
    generate,
    load,
    load_binary,
    load_text,
    write_binary,
    write_text,
)
from roselect.structs import Distribution, GeneratorSpec, OrderedKey


def test_values_are_one_based_and_counted():
    a = ReadOnlyArray([5, 3, 9])
    assert len(a) == 3
    assert a.value(1) == 5
    assert a.value(3) == 9
    assert a.counters() == (2, 0)


def test_out_of_range_index_is_an_error():
    a = ReadOnlyArray([1, 2])
    with pytest.raises(IndexBoundsError):
        a.value(0)
    with pytest.raises(IndexBoundsError):
        a.value(3)


def test_ties_break_by_position():
    a = ReadOnlyArray([4, 4, 2])
    assert a.less(1, 2)
    assert not a.less(2, 1)
    assert a.less(3, 1)
    assert a.comparisons == 3
    assert a.reads == 6


def test_key_comparisons():
    a = ReadOnlyArray([7, 7, 1])
    key = a.get(2)
    assert key == OrderedKey(7, 2)
    assert a.key_less(1, key)
    assert not a.key_less(2, key)
    assert a.key_greater(2, OrderedKey(7, 1))
    assert not a.key_greater(3, key)


def test_between_treats_none_as_infinity_and_costs_nothing():
    a = ReadOnlyArray([10, 20, 30])
    assert a.between(2, None, None)
    assert a.comparisons == 0
    assert a.between(2, OrderedKey(10, 1), OrderedKey(30, 3))
    assert a.comparisons == 2
    assert not a.between(1, OrderedKey(10, 1), None)
    assert not a.between(3, None, OrderedKey(30, 3))


def test_array_view_is_read_only():
    a = ReadOnlyArray([1, 2, 3])
    with pytest.raises(ValueError):
        a.array[0] = 9


def test_empty_input_is_rejected(tmp_path):
    with pytest.raises(InputError, match="empty input"):
        ReadOnlyArray([])
    path = tmp_path / "empty.txt"
    path.write_text("\n\n")
    with pytest.raises(InputError, match="empty input"):
        load_text(path)


def test_malformed_token_names_the_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1\n2\nthree\n")
    with pytest.raises(InputError, match=":3: malformed integer"):
        load_text(path)


def test_text_values_must_fit_64_bits(tmp_path):
    path = tmp_path / "wide.txt"
    path.write_text(f"{2**63}\n")
    with pytest.raises(InputError, match="64 bits"):
        load_text(path)


def test_missing_file(tmp_path):
    with pytest.raises(InputError, match="File not found"):
        load(tmp_path / "nope.txt")


def test_text_and_binary_files_load_identically(tmp_path):
    values = [3, -1, 2**62, -(2**63), 0]
    write_text(tmp_path / "v.txt", values)
    write_binary(tmp_path / "v.bin", values)
    text = load(tmp_path / "v.txt")
    binary = load(tmp_path / "v.bin", binary=True)
    assert text.array.tolist() == values
    assert binary.array.tolist() == values


def test_truncated_binary_input(tmp_path):
    path = tmp_path / "short.bin"
    path.write_bytes(b"\x01" * 12)
    with pytest.raises(InputError, match="truncated"):
        load_binary(path)


def test_generator_is_deterministic():
    spec = GeneratorSpec(100, seed=7)
    first = generate(spec).array
    second = generate(spec).array
    assert np.array_equal(first, second)
    assert sorted(first.tolist()) == list(range(1, 101))
    assert not np.array_equal(first, generate(spec.with_seed(8)).array)


@pytest.mark.parametrize(
    "distribution, expected",
    [
        (Distribution.SORTED, [1, 2, 3, 4, 5]),
        (Distribution.REVERSE_SORTED, [5, 4, 3, 2, 1]),
    ],
)
def test_ordered_distributions(distribution, expected):
    assert generate(GeneratorSpec(5, 0, distribution)).array.tolist() == expected


def test_few_distinct_repeats_values():
    values = generate(GeneratorSpec(1000, 3, Distribution.FEW_DISTINCT)).array
    assert len(set(values.tolist())) <= (1000).bit_length()


def test_generator_spec_parsing():
    spec = GeneratorSpec.parse("1000:seed=7,dist=few-distinct")
    assert spec == GeneratorSpec(1000, 7, Distribution.FEW_DISTINCT)
    assert GeneratorSpec.parse("12") == GeneratorSpec(12)
    assert GeneratorSpec.parse("5:dist=reverse").distribution is Distribution.REVERSE_SORTED


@pytest.mark.parametrize("text", ["x", "0", "10:seed", "10:seed=a", "10:colour=red", "10:dist=zigzag"])
def test_generator_spec_errors(text):
    with pytest.raises(ValueError):
        GeneratorSpec.parse(text)
