import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from classicml.errors import ConvergenceError, EmptyInputError, ShapeError
from classicml.infotheory import entropy, maxent_fit, ml_empirical, relative_entropy

DIE = np.arange(1, 7, dtype=float)


def bisect_die(beta: float) -> float:
    def g(mu):
        w = np.exp(mu * DIE - mu * DIE.max())
        return (DIE * w).sum() / w.sum() - beta

    lo, hi = -50.0, 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def test_relative_entropy_examples():
    assert relative_entropy([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert relative_entropy([1, 0], [0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)
    assert relative_entropy([2, 2], [0.5, 0.5]) == pytest.approx(4 * math.log(4) - 3, abs=1e-14)
    assert relative_entropy([2, 2], [0.5, 0.5]) == pytest.approx(2.54517744, abs=1e-8)
    assert relative_entropy([1, 1], [1, 0]) == math.inf
    assert relative_entropy([0, 0], [0, 0]) == 0.0
    with pytest.raises(ShapeError):
        relative_entropy([1], [1, 1])


pairs = st.integers(1, 8).flatmap(
    lambda n: st.tuples(
        arrays(float, n, elements=st.floats(0, 10)), arrays(float, n, elements=st.floats(0, 10))
    )
)


@settings(max_examples=1000, deadline=None)
@given(pairs)
def test_relative_entropy_nonnegative(xy):
    x, y = xy
    d = relative_entropy(x, y)
    assert d >= -1e-12 * (1 + x.sum() + y.sum())
    assert relative_entropy(x, x) <= 1e-12 * (1 + x.sum())


def test_ml_empirical_examples():
    np.testing.assert_array_equal(ml_empirical([3, 1]), [0.75, 0.25])
    p = ml_empirical([2, 0, 2])
    assert p[1] == 0.0 and p[0] == 0.5
    with pytest.raises(EmptyInputError):
        ml_empirical([0, 0])


def test_ml_empirical_grid_oracle():
    f = np.array([2, 5, 4, 2, 1], dtype=float)
    p = ml_empirical(f)
    rng = np.random.default_rng(0)
    # random points of the 0.001 simplex grid plus the neighbours of p
    best = relative_entropy(f, p)
    cand = np.round(rng.dirichlet(np.ones(5), size=20000), 3)
    cand[:, -1] = 1 - cand[:, :-1].sum(axis=1)
    cand = cand[cand[:, -1] >= 0]
    for c in cand:
        assert relative_entropy(f, c) >= best - 1e-12
    for i in range(5):
        for j in range(5):
            if i != j:
                q = p.copy()
                q[i] += 0.001
                q[j] -= 0.001
                assert relative_entropy(f, q) > best


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.integers(1, 10), elements=st.floats(0, 100)))
def test_ml_empirical_in_simplex(f):
    if f.sum() == 0:
        return
    p = ml_empirical(f)
    assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-12


def test_entropy_examples():
    assert entropy([0.25] * 4) == pytest.approx(math.log(4), abs=1e-15)
    assert entropy([1, 0, 0]) == 0.0


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.integers(1, 10), elements=st.floats(0.0, 1.0)))
def test_entropy_identity(w):
    if w.sum() == 0:
        return
    p = w / w.sum()
    n = p.size
    assert abs(relative_entropy(p, np.full(n, 1 / n)) + entropy(p) - math.log(n)) <= 1e-12


def test_maxent_uniform_die():
    m = maxent_fit(np.ones(6) / 6, DIE[None, :], [3.5])
    np.testing.assert_allclose(m.probabilities(), np.ones(6) / 6, atol=1e-8)


def test_maxent_die_matches_bisection():
    m = maxent_fit(np.ones(6) / 6, DIE[None, :], [4.2])
    mu = bisect_die(4.2)
    assert abs(m.weights[0] - mu) <= 1e-8
    assert m.weights[0] == pytest.approx(0.24904547, abs=1e-8)
    p = m.probabilities()
    w = np.exp(mu * DIE)
    np.testing.assert_allclose(p, w / w.sum(), atol=1e-8)
    assert abs(p @ DIE - 4.2) <= 1e-10
    assert abs(p.sum() - 1) <= 1e-10


def test_maxent_below_mean_gives_negative_weight():
    m = maxent_fit(np.ones(6) / 6, DIE[None, :], [2.0])
    assert m.weights[0] < 0
    assert abs(m.weights[0] - bisect_die(2.0)) <= 1e-8


def test_maxent_boundary_is_infeasible():
    with pytest.raises(ConvergenceError) as info:
        maxent_fit(np.ones(6) / 6, DIE[None, :], [6.0])
    assert info.value.residual >= 0


def test_maxent_no_constraints_returns_prior():
    p0 = np.array([0.1, 0.2, 0.7])
    m = maxent_fit(p0, np.zeros((0, 3)), [])
    np.testing.assert_allclose(m.probabilities(), p0, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(1, 3), st.integers(0, 10_000))
def test_maxent_solution_in_both_families(n, k, seed):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(k, n))
    p0 = rng.dirichlet(np.ones(n))
    target = f @ rng.dirichlet(np.ones(n))
    try:
        m = maxent_fit(p0, f, target)
    except ConvergenceError:
        # only legitimate when the sampled target sits on the boundary
        assert k >= n - 1
        return
    p = m.probabilities()
    assert np.max(np.abs(f @ p - target)) <= 1e-10
    gibbs = p0 * np.exp(m.weights @ f)
    np.testing.assert_allclose(p, gibbs / gibbs.sum(), rtol=1e-8, atol=1e-14)
    assert abs(m.normalizer - (p0 * np.exp(m.weights @ f)).sum()) <= 1e-8 * m.normalizer
