import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffsample.cascade import Cascade
from diffsample.estimation import (
    EstimationError,
    cascade_visit_prob,
    hansen_hurwitz,
    node_visit_prob_oracle,
    node_visit_prob_raw,
    plain_mean,
)
from diffsample.graph import from_edges

from conftest import ring_with_chords

values = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40)


def test_worked_example():
    r = hansen_hurwitz([2, 4], [0.5, 0.25])
    assert abs(r.estimate - 10 / 3) <= 1e-12
    assert (r.n_draws, r.method) == (2, "hansen-hurwitz")


def test_plain_mean_examples():
    assert plain_mean([1, 2, 3]).estimate == 2
    assert plain_mean([5]).estimate == 5
    assert plain_mean([0, 0]).estimate == 0


@pytest.mark.parametrize("bad", [[], [0.0], [-0.1]])
def test_rejects_bad_input(bad):
    with pytest.raises(EstimationError):
        hansen_hurwitz([1.0] * len(bad), bad)


def test_plain_mean_empty():
    with pytest.raises(EstimationError):
        plain_mean([])


@settings(max_examples=200)
@given(values, st.floats(1e-6, 1.0))
def test_uniform_pi_is_plain_mean(f, p):
    assert math.isclose(hansen_hurwitz(f, [p] * len(f)).estimate, plain_mean(f).estimate, rel_tol=1e-12, abs_tol=1e-9)


@settings(max_examples=200)
@given(st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(1e-3, 1.0)), min_size=1, max_size=40),
       st.floats(1e-3, 1e3))
def test_scale_invariance(pairs, c):
    f, p = zip(*pairs)
    a = hansen_hurwitz(f, p).estimate
    b = hansen_hurwitz(f, [x * c for x in p]).estimate
    # tolerance is relative to the magnitude of the values being averaged
    assert abs(a - b) <= 1e-12 * max(1.0, max(abs(x) for x in f))


@settings(max_examples=100)
@given(st.floats(-100, 100), st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=30))
def test_constant_values(c, p):
    assert math.isclose(hansen_hurwitz([c] * len(p), p).estimate, c, rel_tol=1e-12, abs_tol=1e-12)


def test_single_draw_ratio_expectation_by_enumeration():
    f = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    pi = np.array([0.1, 0.1, 0.15, 0.15, 0.2, 0.3])
    expectation = sum(pi[e] * f[e] / pi[e] for e in range(6))
    assert abs(expectation - f.sum()) <= 1e-12
    # two draws: the ratio estimator is exactly enumerable too and stays close
    two = sum(pi[a] * pi[b] * hansen_hurwitz(f[[a, b]], pi[[a, b]]).estimate
              for a, b in itertools.product(range(6), repeat=2))
    assert abs(two - f.mean()) < 0.5


def _solve_stationary(T):
    n = T.shape[0]
    A = np.vstack([T.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    return np.linalg.lstsq(A, b, rcond=None)[0]


def test_three_node_oracle_matches_linear_solve():
    g = from_edges(3, [(0, 1), (0, 2), (1, 0), (2, 0)])
    P = np.array([0.8, 0.2, 1.0, 1.0])
    T = np.zeros((3, 3))
    T[g.src, g.dst] = P
    direct = _solve_stationary(T)
    np.testing.assert_allclose(direct, [0.5, 0.4, 0.1], atol=1e-12)
    np.testing.assert_allclose(node_visit_prob_oracle(g, P), direct, atol=1e-9)
    # rows already sum to one, so the raw form agrees
    np.testing.assert_allclose(node_visit_prob_raw(g, P), direct, atol=1e-9)


def test_three_cycle_uniform():
    g = from_edges(3, [(0, 1), (1, 2), (2, 0)])
    np.testing.assert_allclose(node_visit_prob_oracle(g, np.full(3, 0.3)), [1 / 3] * 3, atol=1e-9)


def test_two_node_chain():
    g = from_edges(2, [(0, 1), (1, 0)])
    np.testing.assert_allclose(node_visit_prob_oracle(g, [0.6, 0.6]), [0.5, 0.5], atol=1e-9)


def test_dead_rows_teleport():
    g = from_edges(3, [(0, 1), (1, 2)])
    pi = node_visit_prob_oracle(g, [1.0, 0.0])
    T = np.array([[0, 1, 0], [1 / 3, 1 / 3, 1 / 3], [1 / 3, 1 / 3, 1 / 3]])
    np.testing.assert_allclose(pi, _solve_stationary(T), atol=1e-9)


def test_non_convergence_reported():
    g = ring_with_chords(10)
    with pytest.raises(EstimationError):
        node_visit_prob_oracle(g, np.linspace(0.1, 1, g.m), max_iter=2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_is_a_distribution(seed):
    rng = np.random.default_rng(seed)
    g = ring_with_chords(10)
    w = rng.random(g.m) * (rng.random(g.m) < 0.8)
    pi = node_visit_prob_oracle(g, w)
    assert np.all(pi >= 0)
    assert abs(pi.sum() - 1.0) <= 1e-9


def test_cascade_visit_prob():
    g = from_edges(3, [(0, 1), (1, 2)])
    one = Cascade.from_dense([0.0, 0.5, np.inf], seed=0, g=g, parents=[-1, 0, -1])
    two = Cascade.from_dense([0.0, 0.5, 1.0], seed=0, g=g, parents=[-1, 0, 1])
    alone = Cascade.from_dense([np.inf, 0.0, np.inf], seed=1, g=g, parents=[-1, -1, -1])
    assert abs(cascade_visit_prob(one, 0.5, g) - math.exp(-1)) <= 1e-12
    assert abs(cascade_visit_prob(two, 0.5, g) - math.exp(-2)) <= 1e-12
    assert cascade_visit_prob(alone, 0.5, g) == 1.0
