"""End-to-end acceptance checks, one group per criterion.

Each check runs at the stated tolerance and inside its runtime budget. A
PASS/FAIL line per criterion is printed as it completes and again in the
terminal summary.
"""

import contextlib
import math
import time
import warnings
from fractions import Fraction

import numpy as np
import pytest

from classicml.clustering import (
    AffinityGraph,
    canonical_labels,
    l1_identity,
    nassoc_value,
    ncut_value,
    normalized_affinity,
    normalized_cut,
    ratio_cut,
    sinkhorn_ds,
)
from classicml.mixtures import (
    CoinMixtureParams,
    coin_joint_loglik,
    em_coins,
    em_gmm,
    em_lower_bound,
    em_plsa,
    exact_posterior,
    marginal_loglik,
)
from classicml.numerics import sym_eig
from classicml.pac import (
    HalfPlanes,
    Intervals,
    RectangleInstance,
    Rectangles,
    cross_and_grid,
    growth_count,
    hoeffding_check,
    phi_binomial,
    phi_recurrence,
    rectangle_experiment,
    sauer_check,
    triangle_and_interior,
    vcdim_bruteforce,
)
from classicml.probability import (
    GaussianParams,
    JointTable,
    conditional,
    gaussian_mle,
    incremental_posterior,
    marginals,
    posterior_bayes,
    two_class_normal_boundary,
)
from classicml.spectral import cca, lda2, pca, pca_smallsample, within_scatter
from classicml.svm import KernelSpec, duality_report, feature_map_poly, gram, kernel_eval, predict, train

from conftest import ACCEPTANCE

DESCRIPTIONS = {
    1: "golden Bayes values",
    2: "kernel-trick consistency",
    3: "SVM correctness",
    4: "EM properties",
    5: "spectral identities",
    6: "clustering identities",
    7: "PAC laboratory",
}
BUDGETS = {1: 1.0, 2: 5.0, 3: 30.0, 4: 60.0, 5: 10.0, 6: 20.0, 7: 60.0}


@contextlib.contextmanager
def criterion(n, check):
    budget = BUDGETS[n]
    t0 = time.perf_counter()
    passed = False
    try:
        yield
        passed = True
    finally:
        secs = time.perf_counter() - t0
        within = secs < budget
        ACCEPTANCE.setdefault(n, (DESCRIPTIONS[n], []))[1].append((check, passed and within, secs, budget))
        status = "PASS" if passed and within else "FAIL"
        print(f"{status} criterion {n} [{check}]: {secs:.2f}s (budget {budget:g}s)")
    assert secs < budget, f"criterion {n} [{check}] took {secs:.2f}s, budget {budget:g}s"


# -- 1 ----------------------------------------------------------------------


def test_criterion_1_exact_values():
    with criterion(1, "fig1 table and incremental coin"):
        t = JointTable(("x1", "x2", "x3", "x4", "x5"), ("h1", "h2"), np.array([[2, 5, 4, 2, 1], [0, 0, 3, 3, 2]]))
        prior, _ = marginals(t, exact=True)
        assert prior[0] == Fraction(14, 22)
        assert conditional(t, "x", exact=True)[1, 2] == Fraction(3, 7)
        assert conditional(t, "h", exact=True)[1, 2] == Fraction(3, 8)
        p1 = incremental_posterior([0.75, 0.25], [0.5, 0.6])
        p2 = incremental_posterior(p1, [0.5, 0.6])
        assert abs(p1[0] - 0.714) <= 0.001
        assert abs(p2[0] - 0.675) <= 0.001


@pytest.mark.xfail(
    strict=True,
    reason="with P(C)=0.01, P(+|C)=0.98, P(+|H)=0.03 the posterior is 0.0098/0.0395 = 0.248101; "
    "0.266 needs P(H)=0.9, which is not a distribution",
)
def test_criterion_1_cancer_kit():
    with criterion(1, "cancer-kit posterior 0.266"):
        post = posterior_bayes([0.98, 0.03], [0.01, 0.99])
        assert abs(post[0] - 0.266) <= 0.0005


# -- 2 ----------------------------------------------------------------------


def test_criterion_2_kernel_trick():
    with criterion(2, "feature maps"):
        rng = np.random.default_rng(20)
        for d in range(1, 5):
            for k in range(1, 6):
                for theta in (None, 0.5, 1.0, 2.0):
                    spec = KernelSpec.poly(d, theta)
                    for _ in range(200 // 4):
                        x, y = rng.normal(size=(2, k))
                        lhs = feature_map_poly(spec, x) @ feature_map_poly(spec, y)
                        rhs = kernel_eval(spec, x, y)
                        scale = (np.abs(x) @ np.abs(y) + (theta or 0)) ** d
                        assert abs(lhs - rhs) <= 1e-9 * max(abs(rhs), scale)
        s2 = math.sqrt(2)
        x = np.array([1.5, -2.0])
        got = [format(v, ".12g") for v in feature_map_poly(KernelSpec.poly(2), x)]
        assert got == [format(v, ".12g") for v in (x[0] ** 2, x[1] ** 2, s2 * x[0] * x[1])]
        x = np.array([0.3, 1.7])
        got = [format(v, ".12g") for v in feature_map_poly(KernelSpec.poly(2, 1.0), x)]
        want = (x[0] ** 2, x[1] ** 2, s2 * x[0] * x[1], s2 * x[0], s2 * x[1], 1.0)
        assert got == [format(v, ".12g") for v in want]


# -- 3 ----------------------------------------------------------------------


def separable(seed, m=30, d=2):
    rng = np.random.default_rng(seed)
    w = rng.normal(size=d)
    x = rng.normal(size=(m * 3, d))
    f = x @ w
    keep = np.abs(f) > 0.3 * np.linalg.norm(w)
    x, f = x[keep][:m], f[keep][:m]
    return x, np.where(f > 0, 1.0, -1.0)


def test_criterion_3_svm():
    with criterion(3, "svm"):
        x = np.array([[1.0, 0.0], [-1.0, 0.0]])
        y = np.array([1.0, -1.0])
        model = train(x, y, KernelSpec.linear(), nu=10)
        np.testing.assert_allclose(model.train_multipliers, [0.5, 0.5], atol=1e-6)
        assert abs(model.b) <= 1e-6
        rep = duality_report(model, x, y)
        assert abs(rep.primal - 0.5) <= 1e-6 and abs(rep.dual - 0.5) <= 1e-6

        xor = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
        xy = np.array([1.0, 1.0, -1.0, -1.0])
        model = train(xor, xy, KernelSpec.poly(2, theta=1.0), nu=10)
        np.testing.assert_array_equal(predict(model, xor), xy)

        for seed in range(20):
            x, y = separable(seed, d=2 + seed % 3)
            spec = [KernelSpec.linear(), KernelSpec.rbf(1.0), KernelSpec.poly(2, 1.0)][seed % 3]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                model = train(x, y, spec, nu=5.0)
            rep = duality_report(model, x, y)
            assert rep.gap <= 1e-4 * (1 + abs(rep.primal))

        for spec in (KernelSpec.linear(), KernelSpec.poly(3), KernelSpec.poly(2, 1.0), KernelSpec.rbf(0.8)):
            for s in range(50):
                rng = np.random.default_rng(s)
                x = rng.normal(size=(rng.integers(2, 15), rng.integers(1, 5)))
                assert sym_eig(gram(spec, x)).values[-1] >= -1e-8


# -- 4 ----------------------------------------------------------------------


def coin_data(seed, m=40):
    rng = np.random.default_rng(seed)
    p = np.where(rng.random(m) < 0.4, 0.8, 0.3)
    return (rng.random((m, 3)) >= p[:, None]).astype(int)


def gmm_data(seed, m=60):
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=4, size=(3, 2))
    return centers[rng.integers(0, 3, m)] + rng.normal(size=(m, 2))


def plsa_data(seed, n=8, m=6):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 6, size=(n, m)).astype(float) + 1


def test_criterion_4_em():
    with criterion(4, "em"):
        for seed in range(20):
            assert em_coins(coin_data(seed), seed=seed)[2].is_monotone(1e-10)
            assert em_gmm(gmm_data(seed), 3, seed=seed)[2].is_monotone(1e-10)
            assert em_plsa(plsa_data(seed), 3, seed=seed)[1].is_monotone(1e-10)

        x = np.random.default_rng(2).normal(size=(30, 3))
        theta, _, _ = em_gmm(x, 1)
        g = gaussian_mle(x, mode="isotropic")
        assert np.max(np.abs(theta.centers[0] - g.mean)) <= 1e-10
        assert abs(theta.variances[0] - g.variance) <= 1e-10

        counts = plsa_data(3)
        theta, _ = em_plsa(counts, 1)
        gn = counts / counts.sum()
        assert np.max(np.abs(theta.words[0] - gn.sum(axis=1))) <= 1e-8
        assert np.max(np.abs(theta.docs[0] - gn.sum(axis=0))) <= 1e-8

        fn = coin_joint_loglik([[0, 0, 1], [1, 1, 1], [0, 0, 0], [0, 1, 0], [1, 1, 0]])
        th = CoinMixtureParams(0.35, 0.8, 0.25)
        q = exact_posterior(fn, th)
        assert abs(em_lower_bound(fn, q, th) - marginal_loglik(fn, th)) <= 1e-10


# -- 5 ----------------------------------------------------------------------


def test_criterion_5_spectral():
    with criterion(5, "spectral"):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            x = rng.normal(size=(40, 4)) @ rng.normal(size=(4, 4)) + rng.normal(size=4)
            for q in range(1, 5):
                b = pca(x, q)
                y = b.project(x)
                err = np.sum((x - b.reconstruct(y)) ** 2)
                tail = b.spectrum[q:].sum()
                assert abs(err - tail) <= 1e-8 * max(tail, b.spectrum.sum() * 1e-8)
                cov = y.T @ y / x.shape[0]
                assert np.max(np.abs(cov - np.diag(np.diag(cov)))) <= 1e-9

        x = np.random.default_rng(2).normal(size=(5, 50))
        direct, small = pca(x, 4), pca_smallsample(x, 4)
        for j in range(4):
            assert abs(abs(direct.basis[:, j] @ small.basis[:, j]) - 1) <= 1e-7

        a = np.random.default_rng(10).normal(size=(20, 3))
        assert np.max(np.abs(cca(a, a).cosines - 1)) <= 1e-9

        for seed in range(5):
            rng = np.random.default_rng(seed)
            c1 = rng.normal(size=(30, 3)) + rng.normal(size=3) * 2
            c2 = rng.normal(size=(25, 3)) @ np.diag([1, 2, 0.5]) + rng.normal(size=3)
            m = lda2(c1, c2)
            sw = within_scatter([c1, c2])
            w, off = two_class_normal_boundary(
                GaussianParams(c1.mean(axis=0), sw), GaussianParams(c2.mean(axis=0), sw)
            )
            n = np.linalg.norm(w)
            assert np.max(np.abs(m.direction - w / n)) <= 1e-9
            assert abs(m.offset - off / n) <= 1e-9


# -- 6 ----------------------------------------------------------------------


def random_graph(rng, m):
    w = rng.random((m, m))
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 0.0)
    return AffinityGraph(w)


def two_block(sizes, seed):
    rng = np.random.default_rng(seed)
    m = sum(sizes)
    k = np.full((m, m), 1e-4)
    start = 0
    for s in sizes:
        blk = 0.5 + rng.random((s, s))
        k[start:start + s, start:start + s] = 0.5 * (blk + blk.T)
        start += s
    np.fill_diagonal(k, 0.0)
    return AffinityGraph(k)


def test_criterion_6_clustering():
    with criterion(6, "clustering"):
        rng = np.random.default_rng(60)
        for _ in range(100):
            m = int(rng.integers(2, 11))
            g = random_graph(rng, m)
            labels = rng.integers(0, 2, m)
            labels[0], labels[-1] = 0, 1
            assert abs(ncut_value(g, labels) + nassoc_value(g, labels) - 2) <= 1e-10

        for seed in range(20):
            rng = np.random.default_rng(seed)
            m = int(rng.integers(2, 13))
            g = random_graph(rng, m)
            assert np.max(np.abs(g.laplacian() @ np.ones(m))) <= 1e-10
            v = np.sqrt(g.degrees())
            v = v / np.linalg.norm(v)
            assert np.max(np.abs(normalized_affinity(g) @ v - v)) <= 1e-10

            w = rng.random((m, m)) + 0.05
            r = sinkhorn_ds(0.5 * (w + w.T))
            assert np.max(np.abs(r.matrix.sum(axis=1) - 1)) <= 1e-8
            assert np.max(np.abs(r.matrix.sum(axis=0) - 1)) <= 1e-8

            w = rng.random((m, m))
            lhs, rhs = l1_identity(0.5 * (w + w.T))
            assert abs(lhs - rhs) <= 4 * m * np.finfo(float).eps * max(1.0, rhs)

        for seed in range(5):
            sizes = (3 + seed % 3, 4 + seed % 4)
            g = two_block(sizes, seed)
            want = canonical_labels(np.repeat([0, 1], sizes))
            np.testing.assert_array_equal(ratio_cut(g).labels, want)
            np.testing.assert_array_equal(normalized_cut(g).labels, want)


# -- 7 ----------------------------------------------------------------------


def test_criterion_7_pac():
    with criterion(7, "pac"):
        for d in range(31):
            for m in range(31):
                assert phi_recurrence(d, m) == phi_binomial(d, m)
        assert growth_count(Intervals(), [0.1, 0.5, 0.9]) == 7
        assert all(r.holds for r in sauer_check(Intervals(), 2, range(1, 13)))
        assert vcdim_bruteforce(Intervals(), list(np.linspace(0, 1, 10))).dimension == 2
        assert vcdim_bruteforce(Rectangles(), cross_and_grid()).dimension == 4
        assert vcdim_bruteforce(HalfPlanes(), triangle_and_interior()).dimension == 3
        rep = rectangle_experiment(RectangleInstance(), 0.1, 0.1, m=148, trials=2000, seed=7)
        assert rep.failure_rate <= 0.1
        for p, m, eps in [(0.5, 100, 0.1), (0.5, 100, 0.2), (0.2, 50, 0.1), (0.9, 30, 0.15)]:
            h = hoeffding_check(p, m, 10_000, eps, seed=1)
            assert h.rate <= h.bound + 3 * h.std_error
