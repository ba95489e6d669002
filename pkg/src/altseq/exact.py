"""Closed-form LAS statistics and exhaustive enumeration oracles.

Rational inputs (``fractions.Fraction``) stay rational throughout: the
formulas below are rational functions of the letter probabilities, so exact
equality with an enumeration can be asserted. Float inputs give float
results.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable

import numpy as np

from .core import las_alphabet_batch, las_distinct_batch

__all__ = [
    "Distribution",
    "ExactMoments",
    "perm_mean",
    "perm_variance",
    "perm_moments",
    "enumerate_permutations",
    "pattern_probability",
    "perm_clt_sigma2",
    "lil_constant",
    "osc_at",
    "osc",
    "osc_bounds",
    "exact_mean_iid",
    "iid_mean_terms",
    "gamma2_iid",
    "gamma2_series",
    "gamma2_uniform_closed",
    "mixing_bound",
    "enumerate_words",
    "transfer_las_distribution",
    "las_distribution_iid",
    "moments_from_histogram",
    "MAX_PERMUTATION_N",
    "MAX_WORDS",
]

MAX_PERMUTATION_N = 10
MAX_WORDS = 2**24
FLOAT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Distribution:
    """Probability vector on the ordered alphabet ``1..q``.

    ``probs[x - 1]`` is the mass of letter ``x``. Entries that are all
    rationals keep the distribution in exact mode.
    """

    probs: tuple

    def __post_init__(self):
        probs = tuple(self.probs)
        if not probs:
            raise ValueError("distribution needs at least one symbol")
        exact = all(isinstance(p, Rational) for p in probs)
        probs = tuple(Fraction(p) if exact else float(p) for p in probs)
        if any(p < 0 for p in probs):
            raise ValueError("probabilities must be non-negative")
        total = sum(probs)
        if exact and total != 1:
            raise ValueError(f"probabilities sum to {total}, not 1")
        if not exact and abs(total - 1.0) > FLOAT_SUM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, q: int, exact: bool = True) -> "Distribution":
        if q < 1:
            raise ValueError("alphabet size must be >= 1")
        return cls((Fraction(1, q) if exact else 1.0 / q,) * q)

    @classmethod
    def point_mass(cls, q: int, x: int = 1) -> "Distribution":
        if not 1 <= x <= q:
            raise ValueError(f"symbol {x} outside 1..{q}")
        return cls(tuple(Fraction(int(i == x)) for i in range(1, q + 1)))

    @property
    def q(self) -> int:
        return len(self.probs)

    @property
    def exact(self) -> bool:
        return isinstance(self.probs[0], Fraction)

    @property
    def lower(self) -> tuple:
        """``L_x``: mass strictly below each symbol."""
        zero = self.probs[0] * 0
        return tuple(itertools.accumulate((zero,) + self.probs[:-1]))

    @property
    def upper(self) -> tuple:
        """``U_x``: mass strictly above each symbol."""
        return tuple(1 - lo - p for lo, p in zip(self.lower, self.probs))

    @property
    def kappa(self):
        return max(self.probs)

    def as_float(self) -> np.ndarray:
        return np.array([float(p) for p in self.probs])


@dataclass
class ExactMoments:
    n: int
    mean: object
    variance: object
    source: str  # "closed_form" | "enumeration" | "transfer"
    histogram: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("variance must be non-negative")


def moments_from_histogram(hist: dict) -> tuple:
    """Mean and variance of an integer-valued law given as ``{value: prob}``."""
    mean = sum(k * w for k, w in hist.items())
    second = sum(k * k * w for k, w in hist.items())
    return mean, second - mean * mean


# --------------------------------------------------------------------------
# random permutations

def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError("n must be >= 1")


def perm_mean(n: int) -> Fraction:
    """Exact mean LAS of a uniform permutation of length ``n``."""
    _check_n(n)
    if n == 1:
        return Fraction(1)
    return Fraction(2 * n, 3) + Fraction(1, 6)


def perm_moments(n: int) -> ExactMoments:
    """Mean and variance of the permutation LAS with provenance.

    For ``n < 4`` the affine variance formula does not apply, so the exact
    value comes from enumerating the symmetric group.
    """
    _check_n(n)
    if n < 4:
        return enumerate_permutations(n)
    return ExactMoments(
        n=n,
        mean=perm_mean(n),
        variance=Fraction(8 * n, 45) - Fraction(13, 180),
        source="closed_form",
    )


def perm_variance(n: int) -> Fraction:
    """Exact variance of the permutation LAS (enumeration below n = 4)."""
    return perm_moments(n).variance


def _all_permutations(n: int) -> Iterable[np.ndarray]:
    """Yield all permutations of 1..n as stacked int8 blocks."""
    chunk = 1 << 18
    perms = itertools.permutations(range(1, n + 1))
    while True:
        block = list(itertools.islice(perms, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int8)


def enumerate_permutations(n: int) -> ExactMoments:
    """Exact LAS law over all ``n!`` permutations (``n <= 10``)."""
    _check_n(n)
    if n > MAX_PERMUTATION_N:
        raise ValueError(f"n = {n} exceeds the enumeration bound n <= {MAX_PERMUTATION_N}")
    counts = np.zeros(n + 1, dtype=np.int64)
    for block in _all_permutations(n):
        counts += np.bincount(las_distinct_batch(block, check=False), minlength=n + 1)
    total = math.factorial(n)
    hist = {k: Fraction(int(c), total) for k, c in enumerate(counts) if c}
    mean, var = moments_from_histogram(hist)
    return ExactMoments(n=n, mean=mean, variance=var, source="enumeration", histogram=hist)


def pattern_probability(pattern: str) -> Fraction:
    """Probability that a uniform permutation follows an up/down pattern.

    ``pattern`` is a string of ``<`` and ``>`` relating consecutive entries,
    e.g. ``"<>"`` is the event ``t1 < t2 > t3``.
    """
    if not pattern or set(pattern) - {"<", ">"}:
        raise ValueError("pattern must be a non-empty string of '<' and '>'")
    n = len(pattern) + 1
    want = np.array([c == "<" for c in pattern])
    hits = 0
    for block in _all_permutations(n):
        up = block[:, 1:] > block[:, :-1]
        hits += int(np.count_nonzero(np.all(up == want, axis=1)))
    return Fraction(hits, math.factorial(n))


def perm_clt_sigma2() -> Fraction:
    """Asymptotic variance per letter of the permutation LAS."""
    return Fraction(8, 45)


def lil_constant() -> float:
    """Almost-sure limsup of ``(LA_n - E LA_n) / sqrt(n log log n)``.

    Equals ``sqrt(2 * 8/45) = 4 / (3 sqrt 5)``; the liminf is its negative.
    """
    return 4.0 / (3.0 * math.sqrt(5.0))


# --------------------------------------------------------------------------
# iid words over a finite alphabet

def _check_symbol(mu: Distribution, x: int) -> None:
    if not 1 <= x <= mu.q:
        raise ValueError(f"symbol {x} outside alphabet 1..{mu.q}")


def osc_at(mu: Distribution, x: int):
    """Oscillation of ``mu`` at symbol ``x``: ``(L^2 + U^2) / (L + U)``.

    Zero when ``x`` carries all the mass.
    """
    _check_symbol(mu, x)
    lo, up = mu.lower[x - 1], mu.upper[x - 1]
    if lo + up == 0:
        return lo * 0
    return (lo * lo + up * up) / (lo + up)


def osc(mu: Distribution):
    """Total oscillation ``sum_x osc_mu(x) p_x``; the a.s. limit of LA_n / n."""
    return sum(osc_at(mu, x) * p for x, p in enumerate(mu.probs, start=1))


def osc_bounds(mu: Distribution) -> tuple:
    """``(1/2 (1 - sum p^2), 2/3 (1 - sum p^3))``, which sandwich ``osc(mu)``."""
    s2 = sum(p**2 for p in mu.probs)
    s3 = sum(p**3 for p in mu.probs)
    if mu.exact:
        return Fraction(1, 2) * (1 - s2), Fraction(2, 3) * (1 - s3)
    return 0.5 * (1 - s2), (2.0 / 3.0) * (1 - s3)


def _remainders(mu: Distribution, x: int) -> tuple:
    lo, up = mu.lower[x - 1], mu.upper[x - 1]
    tot = lo + up
    if tot == 0:
        # all mass on x: the word is constant and LAS is 1, carried by R2 * 1**n
        return lo * 0, lo * 0 + 1
    cross = 2 * lo * up / tot**2
    return lo / tot + cross - osc_at(mu, x), up / tot - cross


def iid_mean_terms(mu: Distribution) -> tuple:
    """Split the exact iid mean as ``slope * n + intercept + sum_x c_x p_x**n``.

    Returns ``(slope, intercept, coeffs)`` with ``slope = Osc(mu)``,
    ``intercept = sum_x R1(x) p_x`` and ``coeffs[x-1] = R2(x)``, where with
    ``s = L_x + U_x``: ``R1 = L/s + 2LU/s^2 - osc(x)``, ``R2 = U/s - 2LU/s^2``.
    A symbol with ``s = 0`` (a point mass) takes ``R1 = 0, R2 = 1``, the
    common limit from either side, so the mean is exactly 1.
    """
    intercept = mu.probs[0] * 0
    coeffs = []
    for x, p in enumerate(mu.probs, start=1):
        r1, r2 = _remainders(mu, x)
        intercept += r1 * p
        coeffs.append(r2)
    return osc(mu), intercept, tuple(coeffs)


def exact_mean_iid(mu: Distribution, n: int):
    """Exact ``E LA_n`` for an iid word of length ``n`` with letter law ``mu``."""
    _check_n(n)
    slope, intercept, coeffs = iid_mean_terms(mu)
    return n * slope + intercept + sum(c * p**n for c, p in zip(coeffs, mu.probs))


def gamma2_iid(mu: Distribution):
    """Asymptotic variance slope ``lim Var(LA_n) / n`` for iid words.

    Closed double sum::

        Osc (2 - 3 Osc - 4 sum_x (L_x/(1-p_x))^2 p_x)
            + 8 sum_{x,y} L_x L_y L_{min(x,y)} p_x p_y / ((1-p_x)(1-p_y))

    A point mass gives 0.
    """
    if mu.kappa == 1:
        return mu.probs[0] * 0
    p, lo = mu.probs, mu.lower
    o = osc(mu)
    q = mu.q
    s1 = sum((lo[x] / (1 - p[x])) ** 2 * p[x] for x in range(q))
    s2 = sum(
        lo[x] * lo[y] * lo[min(x, y)] * p[x] * p[y] / ((1 - p[x]) * (1 - p[y]))
        for x in range(q)
        for y in range(q)
    )
    return o * (2 - 3 * o - 4 * s1) + 8 * s2


def gamma2_series(mu: Distribution, tol: float = 1e-14, max_terms: int = 10**6) -> float:
    """Asymptotic variance from the covariance series of the maxima process.

    Sums ``Var(f) + 2 sum_k Cov(f, f o shift^k)`` where ``f`` is twice the
    indicator of a local maximum at 0, split by plateau length ``l``.
    Terms are added until the geometric mixing bound ``2 q kappa**(l-1)``
    falls below ``tol``.
    """
    if mu.kappa == 1:
        return 0.0
    p = mu.as_float()
    lo = np.array([float(v) for v in mu.lower])
    o = float(osc(mu))
    low_min = lo[np.minimum.outer(np.arange(mu.q), np.arange(mu.q))]
    # weight of "plateau of any length at x ending above a_1 < min(x, y)"
    left = lo * p / (1 - p)
    total = 2 * o - o * o
    pl = np.ones_like(p)
    for l in range(1, max_terms + 1):
        pl = pl * p
        a_l = float(np.sum(lo**2 * pl))
        c_l = float(left @ low_min @ (lo * pl))
        # k = 1..l: plateaus overlap, product vanishes; k = l + 1: adjacent
        total += 2 * ((l + 1) * (-2 * o * a_l) + 4 * c_l)
        if mixing_bound(l + 1, mu) < tol:
            break
    return total


def gamma2_uniform_closed(q: int) -> Fraction:
    """Candidate closed form for the uniform-alphabet slope.

    ``(8/45) (1 + 1/q)(1 - 3/(4q))(1 - 1/(2q)) / (1 - 1/(2q))``, evaluated
    term by term without simplification. It disagrees with
    :func:`gamma2_iid` (1/6 against 1/4 at q = 2) and exact variance
    differences side with :func:`gamma2_iid`; it is kept only so that the
    comparison stays visible.
    """
    if q < 1:
        raise ValueError("alphabet size must be >= 1")
    inv = Fraction(1, q)
    half = 1 - inv / 2
    return Fraction(8, 45) * (1 + inv) * (1 - Fraction(3, 4) * inv) * half / half


def mixing_bound(n: int, mu: Distribution) -> float:
    """Uniform mixing rate bound ``min(1, 2 q kappa**(n-1))``."""
    _check_n(n)
    return min(1.0, 2 * mu.q * float(mu.kappa) ** (n - 1))


def enumerate_words(mu: Distribution, n: int, chunk: int = 1 << 18) -> ExactMoments:
    """Exact LAS law over all ``q**n`` words, each weighted by ``prod p_{a_i}``.

    Words are generated in blocks and scored with the plateau-aware extremum
    counter; weights are aggregated per (LAS, letter-count vector) so exact
    rational weights never overflow.
    """
    _check_n(n)
    q = mu.q
    size = q**n
    if size > MAX_WORDS:
        raise ValueError(f"q**n = {size} words exceeds the enumeration bound {MAX_WORDS}")
    uniform = len(set(mu.probs)) == 1
    powers = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    base = n + 1
    key_scale = base ** np.arange(q, dtype=np.int64)
    tallies: dict[int, int] = {}
    for start in range(0, size, chunk):
        idx = np.arange(start, min(start + chunk, size), dtype=np.int64)
        words = ((idx[:, None] // powers) % q + 1).astype(np.int8)
        scores = las_alphabet_batch(words).astype(np.int64)
        if uniform:
            keys = scores
        else:
            counts = np.stack([np.count_nonzero(words == x, axis=1) for x in range(1, q + 1)], axis=1)
            keys = scores * base**q + counts @ key_scale
        uniq, mult = np.unique(keys, return_counts=True)
        for k, m in zip(uniq.tolist(), mult.tolist()):
            tallies[k] = tallies.get(k, 0) + m
    hist: dict[int, object] = {}
    for key, mult in tallies.items():
        if uniform:
            score, weight = key, mu.probs[0] ** n
        else:
            score, rest = divmod(key, base**q)
            weight = mu.probs[0] * 0 + 1
            for x in range(q):
                rest, c = divmod(rest, base)
                if c:
                    weight *= mu.probs[x] ** c
        if weight:
            hist[score] = hist.get(score, 0) + mult * weight
    hist = dict(sorted(hist.items()))
    mean, var = moments_from_histogram(hist)
    if not mu.exact:
        var = max(var, 0.0)
    return ExactMoments(n=n, mean=mean, variance=var, source="enumeration", histogram=hist)


def transfer_las_distribution(initial, transition, n: int) -> dict:
    """Exact LAS law of ``n`` letters of a Markov chain by transfer matrices.

    The state is (current letter, gradient sign, LAS so far); the sign
    starts at +1, a tie keeps it, and every flip adds one to the LAS.
    ``initial`` and ``transition`` may hold ``Fraction`` entries, in which
    case the result is exact.
    """
    _check_n(n)
    q = len(initial)
    # state[(x, up)] -> {las: prob}
    state = {}
    for x in range(q):
        if initial[x]:
            state[(x, True)] = {1: initial[x]}
    for _ in range(n - 1):
        nxt: dict = {}
        for (x, up), law in state.items():
            row = transition[x]
            for z in range(q):
                w = row[z]
                if not w:
                    continue
                new_up = up if z == x else z > x
                bump = int(new_up != up)
                dest = nxt.setdefault((z, new_up), {})
                for k, pk in law.items():
                    dest[k + bump] = dest.get(k + bump, 0) + pk * w
        state = nxt
    hist: dict = {}
    for law in state.values():
        for k, pk in law.items():
            hist[k] = hist.get(k, 0) + pk
    return dict(sorted(hist.items()))


def las_distribution_iid(mu: Distribution, n: int) -> ExactMoments:
    """Exact LAS law of an iid word via :func:`transfer_las_distribution`."""
    rows = [mu.probs] * mu.q
    hist = transfer_las_distribution(mu.probs, rows, n)
    mean, var = moments_from_histogram(hist)
    if not mu.exact:
        var = max(var, 0.0)
    return ExactMoments(n=n, mean=mean, variance=var, source="transfer", histogram=hist)
