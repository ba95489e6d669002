import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from altseq.core import las_alphabet
from altseq.exact import Distribution, osc
from altseq.markov import (
    MarkovModel,
    NotErgodicError,
    augment_pair,
    augment_triple,
    augment_triple_stationary,
    closed_classes,
    iid_model,
    las_via_y,
    osc_markov,
    osc_plus_minus,
    simulate_markov,
    stationary,
    triple_law_vector,
    y_process,
)

STICKY = [[0.9, 0.1], [0.1, 0.9]]


@st.composite
def chains(draw, max_q=6):
    q = draw(st.integers(2, max_q))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    P = rng.random((q, q)) + 0.01
    return MarkovModel(P / P.sum(axis=1, keepdims=True))


@st.composite
def simplex(draw, max_q=8):
    q = draw(st.integers(2, max_q))
    raw = np.array(draw(st.lists(st.floats(0.01, 1.0), min_size=q, max_size=q)))
    return raw / raw.sum()


def test_stationary_examples():
    assert stationary(STICKY) == pytest.approx([0.5, 0.5], abs=1e-15)
    mu = [0.2, 0.5, 0.3]
    assert stationary([mu] * 3) == pytest.approx(mu, abs=1e-15)


def test_stationary_rejects_reducible():
    with pytest.raises(NotErgodicError, match="no unique stationary distribution"):
        stationary([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(NotErgodicError, match="no unique stationary distribution"):
        stationary([[0.5, 0.5], [0.0, 1.0]])
    assert stationary([[0.5, 0.5], [0.0, 1.0]], allow_transient=True) == pytest.approx([0, 1])


def test_stationary_power_iteration_fallback():
    # nearly decoupled blocks make the direct system ill-conditioned
    eps = 1e-15
    P = np.array([[1 - eps, eps], [eps, 1 - eps]])
    assert stationary(P) == pytest.approx([0.5, 0.5], abs=1e-9)


@given(chains())
@settings(max_examples=50)
def test_stationary_residual(model):
    pi = model.pi
    assert abs(pi.sum() - 1) < 1e-12
    assert np.max(np.abs(pi @ model.P - pi)) <= 1e-10


def test_validation_messages():
    with pytest.raises(ValueError, match="row 1 sums to"):
        MarkovModel([[0.5, 0.5], [0.2, 0.2]])
    with pytest.raises(ValueError, match="negative entry at row 0"):
        MarkovModel([[1.5, -0.5], [0.5, 0.5]])
    with pytest.raises(ValueError, match="square"):
        MarkovModel([[1.0, 0.0]])


def test_ergodicity_flags():
    periodic = MarkovModel([[0.0, 1.0], [1.0, 0.0]])
    assert periodic.irreducible and not periodic.aperiodic and not periodic.ergodic
    with pytest.raises(NotErgodicError):
        periodic.require_ergodic()
    reducible = MarkovModel([[1.0, 0.0], [0.5, 0.5]])
    assert not reducible.irreducible and reducible.pi is None
    assert closed_classes(reducible.P) == [{0}]
    assert MarkovModel(STICKY).ergodic


def test_absorbing_plateau_rejected():
    # ergodic as a letter chain is impossible with p_rr = 1, so test the one-letter chain
    with pytest.raises(NotErgodicError, match="gradient states"):
        augment_pair(MarkovModel([[1.0]]))


def test_pair_sticky():
    Q, law = augment_pair(MarkovModel(STICKY))
    assert law == pytest.approx([0.0, 0.5, 0.5, 0.0], abs=1e-15)
    assert stationary(Q, allow_transient=True) == pytest.approx(law, abs=1e-12)
    assert Q.sum(axis=1) == pytest.approx(np.ones(4))


def test_triple_sticky():
    model = MarkovModel(STICKY)
    law = augment_triple_stationary(model)
    assert law[(1, 1, -1)] == pytest.approx(0.05, abs=1e-15)
    assert sum(law.values()) == pytest.approx(1.0, abs=1e-12)
    vec = triple_law_vector(law, 2)
    assert stationary(augment_triple(model), allow_transient=True) == pytest.approx(vec, abs=1e-12)


@given(chains())
@settings(max_examples=40)
def test_augmented_fixed_points_and_marginals(model):
    Q, pair = augment_pair(model)
    assert np.max(np.abs(pair @ Q - pair)) <= 1e-10
    assert pair.reshape(-1, 2).sum(axis=1) == pytest.approx(model.pi, abs=1e-12)
    vec = triple_law_vector(augment_triple_stationary(model), model.q)
    assert np.max(np.abs(vec @ augment_triple(model) - vec)) <= 1e-10
    assert vec.sum() == pytest.approx(1.0, abs=1e-10)
    plus, minus = osc_plus_minus(model)
    assert abs(plus - minus) <= 1e-12


def test_osc_markov_examples():
    assert osc_markov(MarkovModel(STICKY)) == pytest.approx(0.1, abs=1e-15)
    assert osc_markov(iid_model([0.5, 0.5])) == pytest.approx(0.5, abs=1e-15)


@given(simplex())
def test_iid_reduction(p):
    p = p / p.sum()
    model = iid_model(p)
    mu = Distribution(tuple(p.tolist()))
    assert osc_markov(model) == pytest.approx(float(osc(mu)), abs=1e-12)
    law = augment_triple_stationary(model)
    peaks = sum(m for (r, a, b), m in law.items() if (a, b) == (1, -1))
    assert peaks == pytest.approx(float(osc(mu)) / 2, abs=1e-12)


def test_y_process_examples():
    assert y_process((1, 2)) == [1, 1]
    assert y_process((3, 1, 2)) == [1, -1, 1]
    assert y_process((2, 2, 1)) == [1, 1, -1]
    assert las_via_y((1, 2)) == 1
    assert las_via_y((3, 1, 2)) == 3
    assert las_via_y((4, 4, 4, 4)) == 1


@given(st.lists(st.integers(1, 5), min_size=1, max_size=50))
def test_las_via_y_matches_alphabet(seq):
    assert las_via_y(seq) == las_alphabet(seq)


def test_simulate_markov_determinism_and_shape():
    model = MarkovModel(STICKY)
    a = simulate_markov(model, 1000, np.random.default_rng(5))
    b = simulate_markov(model, 1000, np.random.default_rng(5))
    assert np.array_equal(a, b)
    assert a.shape == (1001,) and set(np.unique(a)) <= {1, 2}


def test_simulate_markov_chunking_invariant():
    model = MarkovModel([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.3, 0.3, 0.4]])
    a = simulate_markov(model, 5000, np.random.default_rng(9), chunk=5000)
    b = simulate_markov(model, 5000, np.random.default_rng(9), chunk=64)
    assert np.array_equal(a, b)


def test_simulate_iid_rows_letter_frequencies():
    mu = np.array([0.2, 0.5, 0.3])
    path = simulate_markov(iid_model(mu), 10**5 - 1, np.random.default_rng(11))
    counts = np.bincount(path, minlength=4)[1:]
    assert stats.chisquare(counts, mu * counts.sum()).pvalue > 0.001


def test_simulate_sticky_rate():
    model = MarkovModel(STICKY)
    rates = [las_alphabet(simulate_markov(model, 10**5, np.random.default_rng(s))) / 10**5 for s in range(10)]
    se = np.std(rates, ddof=1) / np.sqrt(len(rates))
    assert abs(np.mean(rates) - 0.1) <= 3 * se
