import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from altseq.core import las_bruteforce
from altseq.exact import (
    Distribution,
    enumerate_permutations,
    enumerate_words,
    exact_mean_iid,
    gamma2_iid,
    gamma2_series,
    gamma2_uniform_closed,
    las_distribution_iid,
    lil_constant,
    mixing_bound,
    osc,
    osc_at,
    osc_bounds,
    pattern_probability,
    perm_clt_sigma2,
    perm_mean,
    perm_moments,
    perm_variance,
    transfer_las_distribution,
)


@st.composite
def rational_dists(draw, max_q=4):
    q = draw(st.integers(1, max_q))
    weights = draw(st.lists(st.integers(0, 9), min_size=q, max_size=q).filter(lambda w: sum(w) > 0))
    return Distribution(tuple(F(w, sum(weights)) for w in weights))


@st.composite
def float_dists(draw, max_q=8):
    q = draw(st.integers(2, max_q))
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=q, max_size=q))
    total = sum(raw)
    probs = [r / total for r in raw]
    probs[-1] = 1.0 - sum(probs[:-1])
    return Distribution(tuple(probs))


def brute_mean_var(words_weights):
    """Mean and variance of the brute-force LAS over (word, weight) pairs."""
    mean = sum(w * las_bruteforce(x) for x, w in words_weights)
    second = sum(w * las_bruteforce(x) ** 2 for x, w in words_weights)
    return mean, second - mean * mean


# permutations -------------------------------------------------------------

def test_perm_mean_examples():
    assert perm_mean(2) == F(3, 2)
    assert perm_mean(1) == 1
    assert perm_mean(6) == F(25, 6)
    with pytest.raises(ValueError):
        perm_mean(0)


def test_perm_variance_examples():
    assert perm_variance(4) == F(23, 36)
    assert perm_variance(2) == F(1, 4)
    assert perm_variance(8) == F(27, 20)
    assert perm_moments(2).source == "enumeration"
    assert perm_moments(5).source == "closed_form"
    with pytest.raises(ValueError):
        perm_variance(0)


@pytest.mark.parametrize("n", range(1, 8))
def test_enumeration_matches_bruteforce_oracle(n):
    total = math.factorial(n)
    pairs = [(p, F(1, total)) for p in itertools.permutations(range(1, n + 1))]
    mean, var = brute_mean_var(pairs)
    law = enumerate_permutations(n)
    assert (law.mean, law.variance) == (mean, var)
    assert sum(law.histogram.values()) == 1


def test_enumerate_permutations_bound():
    with pytest.raises(ValueError, match="n <= 10"):
        enumerate_permutations(11)


def test_enumerate_permutations_two():
    assert enumerate_permutations(2).histogram == {1: F(1, 2), 2: F(1, 2)}


def _count_pattern(pattern):
    n = len(pattern) + 1
    hits = sum(
        all((a < b) == (c == "<") for a, b, c in zip(p, p[1:], pattern))
        for p in itertools.permutations(range(n))
    )
    return F(hits, math.factorial(n))


@pytest.mark.parametrize("pattern, value", [
    ("<>", F(1, 3)),
    ("<><>", F(2, 15)),
    # both length-4 alternating patterns hold for 5 of the 24 permutations
    ("><>", F(5, 24)),
    ("<><", F(5, 24)),
])
def test_pattern_probability(pattern, value):
    assert pattern_probability(pattern) == value == _count_pattern(pattern)


def test_pattern_probability_validation():
    with pytest.raises(ValueError):
        pattern_probability("<=>")


def test_clt_and_lil_constants():
    assert perm_clt_sigma2() == F(8, 45)
    assert lil_constant() == pytest.approx(0.5962847940, abs=1e-9)
    assert lil_constant() == pytest.approx(math.sqrt(2 * 8 / 45), rel=1e-15)
    assert perm_variance(10**6) / 10**6 == pytest.approx(8 / 45, abs=1e-6)


# oscillation --------------------------------------------------------------

def test_osc_at_examples():
    assert osc_at(Distribution.uniform(2), 1) == F(1, 2)
    assert osc_at(Distribution.uniform(3), 2) == F(1, 3)
    assert osc_at(Distribution.point_mass(3, 2), 2) == 0
    with pytest.raises(ValueError):
        osc_at(Distribution.uniform(2), 3)


def test_osc_uniform_closed_form():
    for q in range(2, 65):
        assert osc(Distribution.uniform(q)) == F(2, 3) - F(1, 3 * q)
    # q = 1 is a point mass: constant words, so the rate is 0 rather than 1/3
    assert osc(Distribution.uniform(1)) == 0


def test_osc_bounds_examples():
    assert osc_bounds(Distribution.uniform(2)) == (F(1, 4), F(1, 2))
    assert osc(Distribution.uniform(2)) == F(1, 2)
    assert osc_bounds(Distribution.point_mass(4, 3)) == (0, 0)
    assert osc(Distribution.point_mass(4, 3)) == 0


@given(float_dists())
def test_osc_bounds_sandwich(mu):
    lower, upper = osc_bounds(mu)
    assert lower - 1e-15 <= osc(mu) <= upper + 1e-15


@given(rational_dists(max_q=6))
def test_distribution_invariants(mu):
    for lo, p, up in zip(mu.lower, mu.probs, mu.upper):
        assert lo + p + up == 1


def test_distribution_validation():
    with pytest.raises(ValueError, match="sum"):
        Distribution((F(1, 2), F(1, 3)))
    with pytest.raises(ValueError, match="non-negative"):
        Distribution((F(3, 2), F(-1, 2)))
    with pytest.raises(ValueError):
        Distribution((0.5, 0.4))
    assert Distribution((0.5, 0.5)).exact is False


# iid mean -----------------------------------------------------------------

def test_exact_mean_iid_examples():
    assert exact_mean_iid(Distribution.uniform(2), 2) == F(5, 4)
    mu3 = Distribution.uniform(3)
    assert exact_mean_iid(mu3, 6) == enumerate_words(mu3, 6).mean


def test_point_mass_mean_is_one():
    for mu in (Distribution.point_mass(1), Distribution.point_mass(3, 2), Distribution.point_mass(4, 4)):
        for n in (1, 2, 7):
            assert exact_mean_iid(mu, n) == 1 == enumerate_words(mu, n).mean


@given(rational_dists(), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_exact_mean_iid_matches_bruteforce(mu, n):
    pairs = []
    for word in itertools.product(range(1, mu.q + 1), repeat=n):
        weight = F(1)
        for x in word:
            weight *= mu.probs[x - 1]
        pairs.append((word, weight))
    mean, var = brute_mean_var(pairs)
    assert exact_mean_iid(mu, n) == mean
    law = enumerate_words(mu, n)
    assert (law.mean, law.variance) == (mean, var)


def test_mean_per_letter_limits():
    n = 10**6
    assert float(perm_mean(n)) / n == pytest.approx(2 / 3, abs=1e-6)
    for q in (2, 3, 7):
        value = exact_mean_iid(Distribution.uniform(q), n) / n
        assert float(value) == pytest.approx(2 / 3 - 1 / (3 * q), abs=1e-6)


# gamma squared ------------------------------------------------------------

def test_gamma2_examples():
    assert gamma2_iid(Distribution.uniform(2)) == F(1, 4)
    assert gamma2_iid(Distribution.point_mass(3, 1)) == 0
    assert gamma2_uniform_closed(2) == F(1, 6)
    assert float(gamma2_uniform_closed(10**7)) == pytest.approx(8 / 45, rel=1e-6)


@given(float_dists())
@settings(max_examples=40, deadline=None)
def test_gamma2_nonnegative_and_series_agrees(mu):
    g = gamma2_iid(mu)
    assert g >= -1e-15
    assert gamma2_series(mu) == pytest.approx(g, abs=1e-10)


@pytest.mark.parametrize("q, slope", [(2, F(1, 4)), (3, F(2, 9))])
def test_gamma2_matches_exact_variance_differences(q, slope):
    mu = Distribution.uniform(q)
    v = [las_distribution_iid(mu, n).variance for n in (49, 50)]
    assert float(v[1] - v[0]) == pytest.approx(float(slope), abs=1e-9)
    assert gamma2_iid(mu) == slope


def test_gamma2_skewed_matches_exact_variance_differences():
    mu = Distribution((F(1, 5), F(1, 2), F(3, 10)))
    v = [las_distribution_iid(mu, n).variance for n in (39, 40)]
    assert float(v[1] - v[0]) == pytest.approx(float(gamma2_iid(mu)), abs=1e-9)


# mixing and enumeration ---------------------------------------------------

def test_mixing_bound_examples():
    assert mixing_bound(4, Distribution.uniform(2)) == 0.5
    assert mixing_bound(1, Distribution.uniform(5)) == 1.0
    skew = Distribution((F(9, 10), F(1, 10)))
    assert mixing_bound(50, skew) == pytest.approx(4 * 0.9**49, rel=1e-12)
    assert mixing_bound(50, skew) == pytest.approx(0.0229, abs=1e-4)


def test_enumerate_words_examples():
    law = enumerate_words(Distribution.uniform(2), 2)
    assert law.mean == F(5, 4)
    one = enumerate_words(Distribution.uniform(2), 1)
    assert (one.mean, one.variance) == (1, 0)
    assert enumerate_words(Distribution((F(1), F(0), F(0))), 6).mean == 1
    with pytest.raises(ValueError, match="enumeration bound"):
        enumerate_words(Distribution.uniform(4), 13)


@given(rational_dists(), st.integers(1, 7))
@settings(max_examples=30, deadline=None)
def test_transfer_matches_enumeration(mu, n):
    assert las_distribution_iid(mu, n).histogram == enumerate_words(mu, n).histogram


def test_transfer_single_letter():
    assert transfer_las_distribution([F(1)], [[F(1)]], 5) == {1: 1}


def test_float_distribution_enumeration():
    mu = Distribution((0.25, 0.75))
    assert enumerate_words(mu, 5).mean == pytest.approx(float(exact_mean_iid(mu, 5)), abs=1e-12)
    assert isinstance(np.float64(gamma2_iid(mu)), np.floating)
