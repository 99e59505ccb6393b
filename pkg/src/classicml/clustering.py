"""K-means, graph cuts, spectral clustering and doubly-stochastic scaling.

Partitions are integer label vectors with classes ``0 .. k-1``. Partitions
returned by the graph methods are canonicalised so that classes are numbered
in order of first appearance (vertex 0 is always in class 0).
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyInputError, InvalidParameterError, ShapeError, ZeroMassError
from .numerics import make_rng, sym_eig

MINCUT_LIMIT = 20


def _points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise EmptyInputError("need a nonempty (m x n) point array")
    return x


def canonical_labels(labels) -> np.ndarray:
    """Renumber classes in order of first appearance."""
    labels = np.asarray(labels)
    mapping: dict = {}
    out = np.empty(labels.size, dtype=int)
    for i, v in enumerate(labels.tolist()):
        if v not in mapping:
            mapping[v] = len(mapping)
        out[i] = mapping[v]
    return out


def partition_agreement(a, b) -> float:
    """Fraction of points on which two labelings agree under the best relabeling."""
    a = canonical_labels(a)
    b = canonical_labels(b)
    if a.size != b.size:
        raise ShapeError("labelings differ in length")
    ka, kb = a.max() + 1, b.max() + 1
    k = max(ka, kb)
    best = 0
    for perm in itertools.permutations(range(k)):
        best = max(best, int(np.count_nonzero(np.asarray(perm)[a] == b)))
    return best / a.size


# -- k-means ----------------------------------------------------------------


@dataclass
class KmeansConfig:
    k: int = 2
    seed: int = 0
    max_iter: int = 300
    n_init: int = 1


@dataclass
class KmeansResult:
    labels: np.ndarray
    centers: np.ndarray
    objective: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def _sq_dists(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    return np.sum((x[:, None, :] - c[None, :, :]) ** 2, axis=2)


def _seed_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k distinct data points: the first uniformly, the rest with probability
    proportional to the squared distance to the nearest chosen center."""
    _, first = np.unique(x, axis=0, return_index=True)
    cand = np.sort(first)
    if cand.size < k:
        raise InvalidParameterError(f"need {k} distinct points, have {cand.size}")
    chosen = [int(rng.choice(cand))]
    for _ in range(1, k):
        d = np.min(_sq_dists(x[cand], x[chosen]), axis=1)
        total = d.sum()
        probs = d / total if total > 0 else None
        chosen.append(int(rng.choice(cand, p=probs)))
    return x[chosen].copy()


def _kmeans_once(x: np.ndarray, k: int, rng: np.random.Generator, max_iter: int) -> KmeansResult:
    centers = _seed_centers(x, k, rng)
    labels = np.full(x.shape[0], -1)
    res = KmeansResult(labels, centers)
    for _ in range(max_iter):
        d = _sq_dists(x, centers)
        new = np.argmin(d, axis=1)  # ties go to the lowest center index
        # repair empty clusters with the point farthest from its center
        for j in range(k):
            if not np.any(new == j):
                own = d[np.arange(x.shape[0]), new]
                counts = np.bincount(new, minlength=k)
                own = np.where(counts[new] > 1, own, -1.0)
                far = int(np.argmax(own))
                new[far] = j
        changed = not np.array_equal(new, labels)
        labels = new
        centers = np.array([x[labels == j].mean(axis=0) for j in range(k)])
        res.objective.append(float(np.sum((x - centers[labels]) ** 2)))
        res.iterations += 1
        if not changed:
            res.converged = True
            break
    res.labels, res.centers = labels, centers
    return res


def kmeans(points, k: int, seed: int = 0, max_iter: int = 300, n_init: int = 1) -> KmeansResult:
    """Lloyd iterations: nearest-center assignment, then mean update.

    The objective (sum of squared distances to the assigned center) is
    recorded after every iteration. With ``n_init > 1`` the best of several
    seeded restarts is returned.
    """
    x = _points(points)
    if not 1 <= k <= x.shape[0]:
        raise InvalidParameterError(f"k={k} must be in [1, {x.shape[0]}]")
    rng = make_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        res = _kmeans_once(x, k, rng, max_iter)
        if best is None or res.objective[-1] < best.objective[-1] - 1e-12:
            best = res
    return best


def indicator_matrix(labels, k: int | None = None) -> np.ndarray:
    """Normalised indicator ``G_ij = 1 / sqrt(l_j)`` if point i is in class j."""
    labels = np.asarray(labels, dtype=int)
    k = int(labels.max()) + 1 if k is None else k
    counts = np.bincount(labels, minlength=k)
    if np.any(counts == 0):
        raise InvalidParameterError(f"class {int(np.flatnonzero(counts == 0)[0])} is empty")
    g = np.zeros((labels.size, k))
    g[np.arange(labels.size), labels] = 1.0 / np.sqrt(counts[labels])
    return g


def kmeans_objective_matrix(points, labels, k: int | None = None) -> tuple[float, float]:
    """Sum of squared distances to class means, and ``trace(G^T K G)`` with ``K = X X^T``.

    The two are related by ``sse = sum_i ||x_i||^2 - trace``.
    """
    x = _points(points)
    labels = np.asarray(labels, dtype=int)
    g = indicator_matrix(labels, k)
    sse = 0.0
    for j in range(g.shape[1]):
        pts = x[labels == j]
        sse += float(np.sum((pts - pts.mean(axis=0)) ** 2))
    kmat = x @ x.T
    return sse, float(np.trace(g.T @ kmat @ g))


# -- graphs -----------------------------------------------------------------


@dataclass(frozen=True)
class AffinityGraph:
    weights: np.ndarray
    sigma: float | None = None

    def __post_init__(self):
        k = np.asarray(self.weights, dtype=float)
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ShapeError("affinity matrix must be square")
        if np.any(k < 0):
            raise InvalidParameterError("affinities must be nonnegative")
        if np.max(np.abs(k - k.T), initial=0.0) > 1e-12 * max(1.0, float(np.max(k, initial=0.0))):
            raise ShapeError("affinity matrix must be symmetric")
        object.__setattr__(self, "weights", 0.5 * (k + k.T))

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def degrees(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    def laplacian(self) -> np.ndarray:
        return np.diag(self.degrees()) - self.weights


def _graph(g) -> AffinityGraph:
    return g if isinstance(g, AffinityGraph) else AffinityGraph(np.asarray(g, dtype=float))


def affinity_rbf(points, sigma: float) -> AffinityGraph:
    """``K_ij = exp(-||x_i - x_j||^2 / sigma^2)``."""
    if not sigma > 0:
        raise InvalidParameterError("sigma must be > 0")
    x = _points(points)
    sq = _sq_dists(x, x)
    k = np.exp(-sq / sigma**2)
    return AffinityGraph(k, sigma)


def cut_value(g, labels) -> float:
    k = _graph(g).weights
    s = np.asarray(labels) == np.asarray(labels)[0]
    return float(k[np.ix_(s, ~s)].sum())


@dataclass(frozen=True)
class MinCutResult:
    labels: np.ndarray
    cut: float
    max_trace: float
    total: float


def mincut_brute(g) -> MinCutResult:
    """Exhaustive minimum cut over all nonempty bipartitions (m <= 20).

    Also returns ``max trace(G^T K G)`` over 0/1 indicators ``G``, which
    equals the total weight minus twice the minimum cut.
    """
    g = _graph(g)
    k = g.weights
    m = g.size
    if m < 2:
        raise InvalidParameterError("need at least two vertices")
    if m > MINCUT_LIMIT:
        raise InvalidParameterError(f"exhaustive min-cut limited to {MINCUT_LIMIT} vertices, got {m}")
    # vertex 0 always in side A; mask bits mark vertices 1..m-1 that go to B
    n_masks = 2 ** (m - 1) - 1
    bits = 1 << np.arange(m - 1)
    best_cut, best_mask, best_trace = np.inf, 0, -np.inf
    chunk = 1 << 14
    for start in range(1, n_masks + 1, chunk):
        masks = np.arange(start, min(start + chunk, n_masks + 1))
        side_b = np.zeros((masks.size, m))
        side_b[:, 1:] = (masks[:, None] & bits[None, :]) > 0
        side_a = 1.0 - side_b
        cuts = np.einsum("ci,ij,cj->c", side_a, k, side_b)
        traces = np.einsum("ci,ij,cj->c", side_a, k, side_a) + np.einsum("ci,ij,cj->c", side_b, k, side_b)
        i = int(np.argmin(cuts))
        if cuts[i] < best_cut:
            best_cut, best_mask = float(cuts[i]), int(masks[i])
        best_trace = max(best_trace, float(traces.max()))
    labels = np.zeros(m, dtype=int)
    labels[1:] = (best_mask & bits) > 0
    return MinCutResult(labels, best_cut, best_trace, float(k.sum()))


def _sign_partition(z: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(z))
    zz = np.where(np.abs(z) <= 1e-12 * scale, 0.0, z)
    # zero entries join the positive side
    return canonical_labels(np.where(zz >= 0, 0, 1))


@dataclass(frozen=True)
class SpectralCut:
    labels: np.ndarray
    vector: np.ndarray
    value: float


def ratio_cut(g) -> SpectralCut:
    """Bipartition by the sign of the second-smallest eigenvector of ``D - K``.

    The constant eigenvector is deflated first (shifted above the rest of
    the spectrum) so that a repeated zero eigenvalue still yields the vector
    orthogonal to ``1``.
    """
    g = _graph(g)
    m = g.size
    if m < 2:
        raise InvalidParameterError("need at least two vertices")
    lap = g.laplacian()
    shift = float(np.trace(lap)) + 1.0
    vals, vecs = sym_eig(lap + shift * np.ones((m, m)) / m)
    z = vecs[:, -1]
    return SpectralCut(_sign_partition(z), z, float(vals[-1]))


def normalized_affinity(g) -> np.ndarray:
    """``K' = D^-1/2 K D^-1/2``; raises on isolated vertices."""
    g = _graph(g)
    d = g.degrees()
    zero = np.flatnonzero(d <= 0)
    if zero.size:
        raise ZeroMassError(f"vertex {int(zero[0])} is isolated (zero degree)")
    s = 1.0 / np.sqrt(d)
    return s[:, None] * g.weights * s[None, :]


def normalized_cut(g, k: int = 2, seed: int = 0, row_normalize: bool = False, n_init: int = 10) -> SpectralCut:
    """Spectral normalized cut.

    ``k = 2``: sign of the second leading eigenvector of ``K'`` (the leading
    one, ``D^1/2 1``, is deflated). ``k > 2``: k-means on the rows of the
    top-``k`` eigenvectors (optionally row-normalised).
    """
    g = _graph(g)
    m = g.size
    if not 2 <= k <= m:
        raise InvalidParameterError(f"k={k} must be in [2, {m}]")
    kp = normalized_affinity(g)
    if k == 2:
        v1 = np.sqrt(g.degrees())
        v1 = v1 / np.linalg.norm(v1)
        vals, vecs = sym_eig(kp - 2.0 * np.outer(v1, v1))
        z = vecs[:, 0]
        return SpectralCut(_sign_partition(z), z, float(vals[0]))
    vals, vecs = sym_eig(kp)
    emb = vecs[:, :k]
    if row_normalize:
        emb = emb / np.maximum(np.linalg.norm(emb, axis=1, keepdims=True), 1e-300)
    res = kmeans(emb, k, seed=seed, n_init=n_init)
    return SpectralCut(canonical_labels(res.labels), emb, float(vals[k - 1]))


def _sides(g, labels):
    k = _graph(g).weights
    labels = np.asarray(labels)
    a = labels == labels[0]
    if a.all():
        raise InvalidParameterError("bipartition has an empty side")
    vol_a = float(k[a].sum())
    vol_b = float(k[~a].sum())
    if vol_a <= 0 or vol_b <= 0:
        raise ZeroMassError("a side of the bipartition has zero volume")
    return k, a, vol_a, vol_b


def ncut_value(g, labels) -> float:
    """``cut(A,B)/vol(A) + cut(A,B)/vol(B)`` where ``vol(S) = sum_{i in S} d_i``."""
    k, a, vol_a, vol_b = _sides(g, labels)
    cut = float(k[np.ix_(a, ~a)].sum())
    return cut / vol_a + cut / vol_b


def nassoc_value(g, labels) -> float:
    """``assoc(A,A)/vol(A) + assoc(B,B)/vol(B)``."""
    k, a, vol_a, vol_b = _sides(g, labels)
    return float(k[np.ix_(a, a)].sum()) / vol_a + float(k[np.ix_(~a, ~a)].sum()) / vol_b


@dataclass(frozen=True)
class SinkhornResult:
    matrix: np.ndarray
    converged: bool
    residual: float
    iterations: int


def sinkhorn_ds(k, tol: float = 1e-10, max_iter: int = 10000) -> SinkhornResult:
    """Symmetric scaling ``K <- D^-1/2 K D^-1/2`` until rows sum to 1.

    Stops when every row (and, by symmetry, column) sum is within ``tol`` of
    1. Hitting ``max_iter`` returns the current matrix with a warning.
    """
    mat = np.array(_graph(k).weights, dtype=float)
    it = 0
    while True:
        d = mat.sum(axis=1)
        zero = np.flatnonzero(d <= 0)
        if zero.size:
            raise ZeroMassError(f"row {int(zero[0])} has zero sum")
        residual = float(max(np.max(np.abs(d - 1.0)), np.max(np.abs(mat.sum(axis=0) - 1.0))))
        if residual <= tol:
            return SinkhornResult(mat, True, residual, it)
        if it >= max_iter:
            warnings.warn(f"scaling stopped after {it} iterations, residual {residual:.3g}", RuntimeWarning, stacklevel=2)
            return SinkhornResult(mat, False, residual, it)
        s = 1.0 / np.sqrt(d)
        mat = s[:, None] * mat * s[None, :]
        mat = 0.5 * (mat + mat.T)
        it += 1


def l1_identity(k) -> tuple[float, float]:
    """Entrywise ``||K - (K - D + I)||_1`` and ``||D - I||_1``."""
    k = np.asarray(k, dtype=float)
    d = np.diag(k.sum(axis=1))
    eye = np.eye(k.shape[0])
    return float(np.abs(k - (k - d + eye)).sum()), float(np.abs(d - eye).sum())
