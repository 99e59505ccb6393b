import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classicml.errors import InvalidParameterError, ZeroMassError
from classicml.clustering import (
    AffinityGraph,
    affinity_rbf,
    canonical_labels,
    cut_value,
    indicator_matrix,
    kmeans,
    kmeans_objective_matrix,
    l1_identity,
    mincut_brute,
    nassoc_value,
    ncut_value,
    normalized_affinity,
    normalized_cut,
    partition_agreement,
    ratio_cut,
    sinkhorn_ds,
)
from classicml.numerics import sym_eig


def two_block(sizes=(4, 5), intra=1.0, inter=1e-4, seed=0):
    rng = np.random.default_rng(seed)
    m = sum(sizes)
    k = np.full((m, m), inter)
    start = 0
    for s in sizes:
        blk = intra * (0.5 + rng.random((s, s)))
        k[start:start + s, start:start + s] = 0.5 * (blk + blk.T)
        start += s
    np.fill_diagonal(k, 0.0)
    return AffinityGraph(k)


def planted(sizes=(4, 5)):
    return canonical_labels(np.repeat(np.arange(len(sizes)), sizes))


def random_graph(rng, m):
    w = rng.random((m, m))
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 0.0)
    return AffinityGraph(w)


def test_kmeans_k1():
    x = np.random.default_rng(0).normal(size=(15, 2))
    res = kmeans(x, 1)
    np.testing.assert_allclose(res.centers[0], x.mean(axis=0))
    assert res.objective[-1] == pytest.approx(np.sum((x - x.mean(axis=0)) ** 2))


def test_kmeans_planted_clusters():
    rng = np.random.default_rng(1)
    x = np.vstack([rng.normal(size=(20, 2)) + [10, 0], rng.normal(size=(20, 2)) - [10, 0]])
    res = kmeans(x, 2, seed=4)
    np.testing.assert_array_equal(canonical_labels(res.labels), np.repeat([0, 1], 20))


def test_kmeans_objective_non_increasing_and_k_range():
    x = np.random.default_rng(2).normal(size=(40, 3))
    res = kmeans(x, 4, seed=2)
    assert np.all(np.diff(res.objective) <= 1e-12)
    with pytest.raises(InvalidParameterError):
        kmeans(x[:3], 4)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10_000))
def test_kmeans_not_below_brute_force_optimum(m, seed):
    x = np.random.default_rng(seed).normal(size=(m, 2))
    best = math.inf
    for mask in range(1, 2 ** (m - 1)):
        labels = np.array([(mask >> i) & 1 for i in range(m)])
        best = min(best, kmeans_objective_matrix(x, labels, 2)[0])
    res = kmeans(x, 2, seed=seed)
    assert res.objective[-1] >= best - 1e-12
    assert np.all(np.diff(res.objective) <= 1e-12)


def test_objective_matrix_identities():
    x = np.full((5, 2), 3.0)
    sse, tr = kmeans_objective_matrix(x, [0, 0, 1, 1, 1])
    assert sse == 0.0 and tr == pytest.approx(np.sum(x**2))
    x = np.random.default_rng(3).normal(size=(6, 2))
    total = float(np.sum(x**2))
    for mask in range(1, 2**5):
        labels = np.array([0] + [(mask >> i) & 1 for i in range(5)])
        sse, tr = kmeans_objective_matrix(x, labels)
        assert abs(sse - (total - tr)) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=20))
def test_indicator_conditions(raw):
    labels = canonical_labels(raw)
    g = indicator_matrix(labels)
    assert np.all(g >= 0)
    np.testing.assert_allclose(g.T @ g, np.eye(g.shape[1]), atol=1e-12)
    np.testing.assert_allclose(g @ g.T @ np.ones(len(labels)), 1.0, atol=1e-12)
    assert np.all(np.count_nonzero(g, axis=1) == 1)


def test_indicator_empty_class():
    with pytest.raises(InvalidParameterError):
        indicator_matrix([0, 0, 2])


def test_affinity_rbf_examples():
    g = affinity_rbf([[0.0, 0.0], [0.0, 0.0], [2.0, 0.0]], sigma=2.0)
    assert g.weights[0, 1] == 1.0
    assert g.weights[0, 2] == pytest.approx(math.exp(-1))
    np.testing.assert_array_equal(np.diag(g.weights), 1.0)
    for s in range(30):
        x = np.random.default_rng(s).normal(size=(12, 3))
        assert sym_eig(affinity_rbf(x, 1.0).weights).values[-1] >= -1e-8


def test_mincut_examples():
    k = np.zeros((4, 4))
    k[0, 1] = k[1, 0] = 1.0
    k[2, 3] = k[3, 2] = 2.0
    r = mincut_brute(k)
    assert r.cut == 0.0
    np.testing.assert_array_equal(r.labels, [0, 0, 1, 1])
    path = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    assert mincut_brute(path).cut == 1.0
    eps = 0.01
    tri = np.array([[0, 1, 1], [1, 0, eps], [1, eps, 0]])
    r = mincut_brute(tri)
    singles = [tri[i].sum() for i in range(3)]
    assert r.cut == pytest.approx(min(singles))


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 9), st.integers(0, 10_000))
def test_mincut_matches_enumeration_and_trace(m, seed):
    g = random_graph(np.random.default_rng(seed), m)
    best = math.inf
    for labels in itertools.product([0, 1], repeat=m - 1):
        lab = np.array((0,) + labels)
        if lab.any():
            best = min(best, cut_value(g, lab))
    r = mincut_brute(g)
    assert r.cut == pytest.approx(best, abs=1e-12)
    assert r.max_trace == pytest.approx(r.total - 2 * r.cut, abs=1e-10)


def test_mincut_size_limit():
    with pytest.raises(InvalidParameterError):
        mincut_brute(np.ones((21, 21)))


def test_ratio_cut_disconnected_cliques():
    k = np.zeros((6, 6))
    k[:3, :3] = 1.0
    k[3:, 3:] = 1.0
    np.fill_diagonal(k, 0.0)
    r = ratio_cut(k)
    np.testing.assert_array_equal(r.labels, [0, 0, 0, 1, 1, 1])
    assert abs(r.value) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 10_000))
def test_laplacian_identities(m, seed):
    g = random_graph(np.random.default_rng(seed), m)
    lap = g.laplacian()
    assert np.max(np.abs(lap @ np.ones(m))) <= 1e-10
    kp = g.weights - np.diag(g.degrees()) + np.eye(m)
    a = sym_eig(lap).values
    b = sym_eig(kp).values
    np.testing.assert_allclose(np.sort(1 - a), np.sort(b), atol=1e-8)
    knorm = normalized_affinity(g)
    v = np.sqrt(g.degrees())
    assert np.max(np.abs(knorm @ v - v)) <= 1e-10
    assert abs(sym_eig(knorm).values[0] - 1) <= 1e-9


def test_normalized_cut_isolated_vertex():
    k = np.ones((3, 3))
    k[2, :] = k[:, 2] = 0
    with pytest.raises(ZeroMassError):
        normalized_cut(k)


@pytest.mark.parametrize("seed", range(5))
def test_two_blocks_recovered(seed):
    sizes = (3 + seed % 3, 4 + seed % 4)
    g = two_block(sizes, seed=seed)
    want = planted(sizes)
    np.testing.assert_array_equal(ratio_cut(g).labels, want)
    np.testing.assert_array_equal(normalized_cut(g).labels, want)
    np.testing.assert_array_equal(mincut_brute(g).labels, want)


def test_three_blobs_ncut():
    rng = np.random.default_rng(21)
    centers = np.array([[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]])
    x = np.vstack([c + 0.5 * rng.normal(size=(10, 2)) for c in centers])
    res = normalized_cut(affinity_rbf(x, 1.5), k=3, seed=0)
    assert partition_agreement(res.labels, np.repeat([0, 1, 2], 10)) == 1.0


def test_ncut_hand_value():
    # two 2-vertex blocks, intra weight 1, inter weight 0.1 between 1 and 2
    k = np.array([[0, 1, 0, 0], [1, 0, 0.1, 0], [0, 0.1, 0, 1], [0, 0, 1, 0]])
    labels = [0, 0, 1, 1]
    vol = 2.1
    assert ncut_value(k, labels) == pytest.approx(2 * 0.1 / vol)
    k0 = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=float)
    assert ncut_value(k0, labels) == 0.0
    assert nassoc_value(k0, labels) == 2.0


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 10), st.integers(0, 2**32 - 1))
def test_ncut_nassoc_identity(m, seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, m)
    labels = rng.integers(0, 2, m)
    labels[0], labels[-1] = 0, 1
    assert abs(ncut_value(g, labels) + nassoc_value(g, labels) - 2) <= 1e-10


def test_sinkhorn_examples():
    ds = np.array([[0.5, 0.5], [0.5, 0.5]])
    r = sinkhorn_ds(ds)
    np.testing.assert_allclose(r.matrix, ds, atol=1e-12)
    r = sinkhorn_ds([[2.0, 1.0], [1.0, 1.0]])
    assert r.converged
    np.testing.assert_allclose(r.matrix.sum(axis=1), 1, atol=1e-8)
    np.testing.assert_allclose(r.matrix.sum(axis=0), 1, atol=1e-8)
    with pytest.raises(ZeroMassError):
        sinkhorn_ds(np.zeros((2, 2)))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 10_000))
def test_sinkhorn_property(m, seed):
    w = np.random.default_rng(seed).random((m, m)) + 0.05
    w = 0.5 * (w + w.T)
    r = sinkhorn_ds(w, tol=1e-9)
    assert r.converged
    assert np.max(np.abs(r.matrix.sum(axis=1) - 1)) <= 1e-9
    assert np.max(np.abs(r.matrix - r.matrix.T)) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 10), st.integers(0, 10_000))
def test_l1_identity_exact(m, seed):
    w = np.random.default_rng(seed).random((m, m))
    w = 0.5 * (w + w.T)
    lhs, rhs = l1_identity(w)
    # off-diagonal terms cancel exactly; diagonal ones carry one rounding each
    assert abs(lhs - rhs) <= 4 * m * np.finfo(float).eps * max(1.0, rhs)


def test_partition_agreement():
    assert partition_agreement([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert partition_agreement([0, 0, 1, 1], [0, 1, 0, 1]) == 0.5
