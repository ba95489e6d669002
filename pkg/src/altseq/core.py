"""Longest alternating subsequence (LAS) of finite sequences.

An alternating subsequence starts with a descent: ``a[l1] > a[l2] < a[l3] > ...``.
Three independent routes compute its maximal length:

* :func:`las_distinct` -- closed counting formula over peaks, valid when all
  values are distinct (permutations, iid continuous samples);
* :func:`las_alphabet` -- plateau-aware local maxima + minima, valid for any
  totally ordered values including ties;
* :func:`las_bruteforce` -- quadratic dynamic program straight from the
  definition, used as an oracle.

Indices returned by :func:`local_extrema` are 0-based.
"""

from __future__ import annotations

from typing import Sequence as _Seq

import numpy as np

__all__ = [
    "TiesError",
    "as_sequence",
    "check_permutation",
    "las",
    "las_distinct",
    "las_distinct_batch",
    "las_alphabet",
    "las_alphabet_batch",
    "las_bruteforce",
    "local_extrema",
    "rank_map",
    "StreamingLAS",
]


class TiesError(ValueError):
    """Raised when a distinct-value routine receives repeated values."""


def as_sequence(seq, alphabet_size: int | None = None) -> np.ndarray:
    """Validate ``seq`` and return it as a 1-D array.

    With ``alphabet_size=q`` the values must be integers in ``1..q``.
    """
    arr = np.asarray(seq)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"sequence must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("sequence must have length >= 1")
    if alphabet_size is not None:
        if not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("alphabet sequences must hold integers")
        if arr.min() < 1 or arr.max() > alphabet_size:
            raise ValueError(f"alphabet values must lie in 1..{alphabet_size}")
    return arr


def check_permutation(perm) -> np.ndarray:
    """Return ``perm`` as an int array, raising unless it is a bijection on 1..n."""
    arr = as_sequence(perm)
    n = arr.size
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("permutation entries must be integers")
    if not np.array_equal(np.sort(arr), np.arange(1, n + 1)):
        raise ValueError(f"not a permutation of 1..{n}")
    return arr.astype(np.int64, copy=False)


def _has_ties(arr: np.ndarray) -> bool:
    if arr.shape[-1] < 2:
        return False
    srt = np.sort(arr, axis=-1)
    return bool(np.any(srt[..., 1:] == srt[..., :-1]))


def las_distinct_batch(rows: np.ndarray, check: bool = True) -> np.ndarray:
    """Vectorised :func:`las_distinct` over the rows of a 2-D array."""
    rows = np.asarray(rows)
    if rows.ndim != 2 or rows.shape[1] == 0:
        raise ValueError("expected a non-empty 2-D array of sequences")
    if check and _has_ties(rows):
        raise TiesError("ties not allowed in distinct-value path")
    m, n = rows.shape
    if n == 1:
        return np.ones(m, dtype=np.int64)
    up = rows[:, 1:] > rows[:, :-1]
    out = up[:, -1].astype(np.int64)
    out += 2 * (~up[:, 0])
    # interior peaks k = 2..n-1 (1-based): ascent into k, descent out of k
    out += 2 * np.count_nonzero(up[:, :-1] & ~up[:, 1:], axis=1)
    return out


def las_distinct(seq, check: bool = True) -> int:
    """LAS of a sequence with pairwise-distinct values, in linear time.

    Uses ``1(a_n > a_{n-1}) + 2*1(a_1 > a_2) + 2*#{interior peaks}``;
    a single element has LAS 1.

    Raises
    ------
    TiesError
        If ``check`` is true and some value is repeated.
    """
    arr = as_sequence(seq)
    return int(las_distinct_batch(arr[None, :], check=check)[0])


def _step_signs(rows: np.ndarray) -> np.ndarray:
    """Sign of ``rows[:, k+1] - rows[:, k]`` without unsigned wrap-around."""
    nxt, cur = rows[:, 1:], rows[:, :-1]
    return (nxt > cur).astype(np.int8) - (nxt < cur).astype(np.int8)


def _last_strict_direction(rows: np.ndarray) -> np.ndarray:
    """Sign of the last strict comparison strictly before each position.

    Entry ``[i, k]`` is +1 (last change was an ascent), -1 (descent) or 0 (all
    values up to ``k`` are equal).
    """
    m, n = rows.shape
    steps = _step_signs(rows)
    pos = np.where(steps != 0, np.arange(n - 1), -1)
    last = np.maximum.accumulate(pos, axis=1) if n > 1 else pos
    filled = np.where(last >= 0, np.take_along_axis(steps, np.maximum(last, 0), axis=1), 0)
    out = np.zeros((m, n), dtype=np.int8)
    out[:, 1:] = filled
    return out


def _extrema_masks(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Plateau-aware local maxima / minima masks for each row."""
    m, n = rows.shape
    before = _last_strict_direction(rows)
    after = np.zeros((m, n), dtype=np.int8)
    if n > 1:
        after[:, :-1] = _step_signs(rows)
    at_end = np.zeros(n, dtype=bool)
    at_end[-1] = True
    is_max = (at_end | (after == -1)) & (before >= 0)
    is_min = (at_end | (after == 1)) & (before == -1)
    return is_max, is_min


def las_alphabet_batch(rows: np.ndarray) -> np.ndarray:
    """Vectorised :func:`las_alphabet` over the rows of a 2-D array."""
    rows = np.asarray(rows)
    if rows.ndim != 2 or rows.shape[1] == 0:
        raise ValueError("expected a non-empty 2-D array of sequences")
    is_max, is_min = _extrema_masks(rows)
    return np.count_nonzero(is_max, axis=1) + np.count_nonzero(is_min, axis=1)


def las_alphabet(seq) -> int:
    """LAS of a sequence that may contain ties.

    Counts plateau-aware local maxima and minima. A maximum sits at the last
    index of a run of equal values that was entered by an ascent (or that
    starts the sequence) and is left by a descent (or ends it). A minimum is
    the mirror image, except that a leading run never counts as a minimum.
    """
    arr = as_sequence(seq)
    return int(las_alphabet_batch(arr[None, :])[0])


def las_bruteforce(seq) -> int:
    """LAS by an O(n^2) dynamic program over (end index, parity).

    ``odd[i]`` is the longest alternating subsequence ending at ``i`` with odd
    length (so the next chosen element must be strictly smaller), ``even[i]``
    the longest with even length (next must be strictly larger).
    """
    a = list(as_sequence(seq).tolist())
    n = len(a)
    odd = [1] * n
    even = [0] * n
    best = 1
    for i in range(n):
        ai = a[i]
        o, e = 1, 0
        for j in range(i):
            aj = a[j]
            if aj > ai:
                # a[j] closes an odd-length prefix; a[i] extends to even length
                if odd[j] + 1 > e:
                    e = odd[j] + 1
            elif aj < ai and even[j]:
                if even[j] + 1 > o:
                    o = even[j] + 1
        odd[i], even[i] = o, e
        best = max(best, o, e)
    return best


def local_extrema(seq) -> tuple[list[int], list[int]]:
    """0-based indices of local maxima and minima, in increasing order.

    Sequences without ties use the nearest-neighbour rule; sequences with ties
    use the plateau-aware rule (which reduces to the former when values are
    distinct). The two lists interleave as max, min, max, ...
    """
    arr = as_sequence(seq)
    n = arr.size
    if _has_ties(arr):
        is_max, is_min = _extrema_masks(arr[None, :])
        return np.flatnonzero(is_max[0]).tolist(), np.flatnonzero(is_min[0]).tolist()
    maxima, minima = [], []
    for k in range(n):
        left_lower = k == 0 or arr[k] > arr[k - 1]
        right_lower = k == n - 1 or arr[k] > arr[k + 1]
        if left_lower and right_lower:
            maxima.append(k)
        elif k > 0 and arr[k] < arr[k - 1] and (k == n - 1 or arr[k] < arr[k + 1]):
            minima.append(k)
    return maxima, minima


def las(seq, method: str = "auto") -> int:
    """LAS with automatic path selection.

    ``method`` is ``"auto"`` (plateau-aware path if any value repeats),
    ``"distinct"``, ``"alphabet"`` or ``"bruteforce"``.
    """
    if method == "auto":
        arr = as_sequence(seq)
        return las_alphabet(arr) if _has_ties(arr) else las_distinct(arr, check=False)
    if method == "distinct":
        return las_distinct(seq)
    if method == "alphabet":
        return las_alphabet(seq)
    if method == "bruteforce":
        return las_bruteforce(seq)
    raise ValueError(f"unknown method {method!r}")


def rank_map(seq: _Seq[float]) -> np.ndarray:
    """Map distinct reals to their rank vector (a permutation of 1..n).

    Position ``i`` receives the rank of ``seq[i]``, so the map preserves order
    and hence every order statistic, LAS included.
    """
    arr = as_sequence(seq)
    if _has_ties(arr):
        raise TiesError("rank_map requires pairwise-distinct values")
    ranks = np.empty(arr.size, dtype=np.int64)
    ranks[np.argsort(arr, kind="stable")] = np.arange(1, arr.size + 1)
    return ranks


class StreamingLAS:
    """LAS of a growing sequence, updated in O(1) per appended value.

    Tracks the gradient sign of the sequence (ties inherit the previous sign,
    the empty prefix counts as rising); the LAS of the prefix is one plus the
    number of sign flips so far.
    """

    def __init__(self):
        self.length = 0
        self.value = 0
        self._last = None
        self._sign = 1

    def push(self, x) -> int:
        if self._last is None:
            self.value = 1
        elif x > self._last:
            if self._sign < 0:
                self.value += 1
            self._sign = 1
        elif x < self._last:
            if self._sign > 0:
                self.value += 1
            self._sign = -1
        self._last = x
        self.length += 1
        return self.value

    def extend(self, values) -> np.ndarray:
        """Append a chunk; return the LAS of every new prefix."""
        vals = np.asarray(values)
        if vals.size == 0:
            return np.empty(0, dtype=np.int64)
        if self._last is None:
            head = vals[:1]
            prev = np.concatenate([head, vals[:-1]])
        else:
            prev = np.concatenate([[self._last], vals[:-1]])
        step = (vals > prev).astype(np.int8) - (vals < prev).astype(np.int8)
        pos = np.where(step != 0, np.arange(vals.size), -1)
        last = np.maximum.accumulate(pos)
        sign = np.where(last >= 0, step[np.maximum(last, 0)], self._sign).astype(np.int8)
        prev_sign = np.concatenate([[self._sign], sign[:-1]]).astype(np.int8)
        flips = np.cumsum(sign != prev_sign, dtype=np.int64)
        base = 1 if self._last is None else self.value
        out = base + flips
        self.value = int(out[-1])
        self._sign = int(sign[-1])
        self._last = vals[-1]
        self.length += vals.size
        return out
