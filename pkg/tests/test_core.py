import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from altseq.core import (
    StreamingLAS,
    TiesError,
    check_permutation,
    las,
    las_alphabet,
    las_alphabet_batch,
    las_bruteforce,
    las_distinct,
    las_distinct_batch,
    local_extrema,
    rank_map,
)

words = st.lists(st.integers(1, 5), min_size=1, max_size=40)
distinct_reals = st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=40, unique=True)


@st.composite
def permutations(draw, max_n=30):
    n = draw(st.integers(1, max_n))
    return draw(st.permutations(range(1, n + 1)))


def is_zigzag_from_descent(seq):
    return all((a > b) if k % 2 == 0 else (a < b) for k, (a, b) in enumerate(zip(seq, seq[1:])))


@pytest.mark.parametrize("seq, expected", [
    ((1, 2, 3), 1),
    ((2, 1), 2),
    ((1, 3, 2, 4), 3),
    ((0.5,), 1),
])
def test_las_distinct_examples(seq, expected):
    assert las_distinct(seq) == expected


def test_las_distinct_rejects_ties():
    with pytest.raises(TiesError, match="ties not allowed in distinct-value path"):
        las_distinct((1, 2, 2))


@pytest.mark.parametrize("seq, expected", [
    ((1, 1, 1), 1),
    ((2, 2, 1), 2),
    ((1, 2), 1),
    ((2, 1), 2),
    ((1,), 1),
])
def test_las_alphabet_examples(seq, expected):
    assert las_alphabet(seq) == expected


@pytest.mark.parametrize("seq, expected", [
    ((3, 1, 2), 3),
    ((1, 2, 3), 1),
    ((2, 1, 2, 1, 2), 5),
    ((2, 2, 2), 1),
])
def test_las_bruteforce_examples(seq, expected):
    assert las_bruteforce(seq) == expected


@pytest.mark.parametrize("seq, maxima, minima", [
    ((1, 3, 2, 4), [2, 4], [3]),
    ((1, 1, 1), [3], []),
    ((2, 1), [1], [2]),
    ((2, 2, 1), [2], [3]),
])
def test_local_extrema_examples(seq, maxima, minima):
    # the API is 0-based; the listed positions are 1-based
    got_max, got_min = local_extrema(seq)
    assert [k + 1 for k in got_max] == maxima
    assert [k + 1 for k in got_min] == minima


def test_rank_map_examples():
    assert rank_map((0.3, 0.1, 0.2)).tolist() == [3, 1, 2]
    assert rank_map((0.1, 0.2, 0.3)).tolist() == [1, 2, 3]
    with pytest.raises(TiesError):
        rank_map((0.1, 0.1))


def test_las_dispatch():
    assert las((2, 2, 1)) == 2
    assert las((3, 1, 2)) == 3
    assert las((3, 1, 2), method="bruteforce") == 3
    with pytest.raises(ValueError):
        las((1, 2), method="nope")


def test_input_validation():
    with pytest.raises(ValueError):
        las_alphabet([])
    with pytest.raises(ValueError):
        las_alphabet([[1, 2], [3, 4]])
    with pytest.raises(ValueError):
        check_permutation([1, 1, 3])
    assert check_permutation([2, 1]).tolist() == [2, 1]


def test_unsigned_dtypes_do_not_wrap():
    seq = np.array([3, 1, 2, 2, 0], dtype=np.uint8)
    assert las_alphabet(seq) == las_bruteforce(seq.tolist()) == 4
    assert las_distinct(np.array([2, 0, 1], dtype=np.uint16)) == 3


def test_exhaustive_small_words():
    for q in (1, 2, 3):
        for n in range(1, 7):
            rows = np.array(list(itertools.product(range(1, q + 1), repeat=n)))
            got = las_alphabet_batch(rows).tolist()
            assert got == [las_bruteforce(r) for r in rows.tolist()]


def test_exhaustive_small_permutations():
    for n in range(1, 7):
        rows = np.array(list(itertools.permutations(range(1, n + 1))))
        assert las_distinct_batch(rows).tolist() == [las_bruteforce(r) for r in rows.tolist()]


@given(words)
def test_alphabet_matches_bruteforce(seq):
    assert las_alphabet(seq) == las_bruteforce(seq)


@given(permutations())
def test_distinct_matches_bruteforce(perm):
    assert las_distinct(perm) == las_bruteforce(perm)


@given(words)
def test_las_range_and_full_length(seq):
    value = las(seq)
    assert 1 <= value <= len(seq)
    assert (value == len(seq)) == is_zigzag_from_descent(seq)


@given(words)
def test_extrema_interleave_and_count(seq):
    maxima, minima = local_extrema(seq)
    assert len(maxima) + len(minima) == las_alphabet(seq)
    merged = sorted([(k, "max") for k in maxima] + [(k, "min") for k in minima])
    kinds = [kind for _, kind in merged]
    assert kinds == ["max", "min"] * (len(kinds) // 2) + ["max"] * (len(kinds) % 2)


@given(distinct_reals)
def test_rank_map_preserves_order_and_las(values):
    ranks = rank_map(values)
    assert sorted(ranks.tolist()) == list(range(1, len(values) + 1))
    for i, j in itertools.combinations(range(len(values)), 2):
        assert (values[i] < values[j]) == (ranks[i] < ranks[j])
    assert las_distinct(values) == las_distinct(ranks)


@given(words, st.integers(1, 7))
@settings(max_examples=60)
def test_streaming_matches_prefix_las(seq, chunk):
    pushed = StreamingLAS()
    assert [pushed.push(x) for x in seq] == [las_alphabet(seq[: k + 1]) for k in range(len(seq))]
    chunked = StreamingLAS()
    out = []
    for start in range(0, len(seq), chunk):
        out.extend(chunked.extend(seq[start:start + chunk]).tolist())
    assert out == [las_alphabet(seq[: k + 1]) for k in range(len(seq))]
    assert chunked.value == pushed.value and chunked.length == len(seq)
