"""PCA, kernel PCA, Fisher LDA and CCA on top of the numerics module.

Point sets are passed as rows (``m`` points x ``n`` coordinates). Internally
PCA works with the centred data matrix ``A`` whose columns are the points, so
reported eigenvalues are those of ``A A^T`` (the sample covariance times
``m``). Returned axes follow the numerics sign convention: first
non-negligible coordinate positive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, InvalidParameterError, ShapeError, SingularityError
from .numerics import canonical_signs, cholesky, qr, solve_spd, solve_upper, svd, sym_eig, sym_sqrt_inv
from .svm import KernelSpec, kernel_eval, kernel_matrix

RANK_TOL = 1e-12


def _points(points, min_rows: int = 1) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ShapeError("points must be a 2-D array (rows are points)")
    if x.shape[0] < min_rows:
        raise EmptyInputError(f"need at least {min_rows} points, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ShapeError("points contain non-finite values")
    return x


@dataclass(frozen=True)
class SpectralBasis:
    basis: np.ndarray  # n x q, orthonormal columns
    values: np.ndarray  # top-q eigenvalues of A A^T
    center: np.ndarray
    spectrum: np.ndarray  # all eigenvalues of A A^T
    n_samples: int

    @property
    def variances(self) -> np.ndarray:
        """Variance of each projected coordinate (eigenvalue / sample count)."""
        return self.values / self.n_samples

    def project(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        return (x - self.center) @ self.basis

    def reconstruct(self, coords) -> np.ndarray:
        return np.atleast_2d(coords) @ self.basis.T + self.center


def pca(points, q: int) -> SpectralBasis:
    """Top-``q`` principal axes: eigenvectors of ``A A^T`` for centred data ``A``."""
    x = _points(points, min_rows=2)
    m, n = x.shape
    if not 1 <= q <= min(n, m):
        raise InvalidParameterError(f"q={q} must be in [1, {min(n, m)}]")
    mu = x.mean(axis=0)
    a = (x - mu).T
    vals, vecs = sym_eig(a @ a.T)
    vals = np.where(np.abs(vals) < RANK_TOL * max(vals[0], 1e-300), 0.0, vals)
    return SpectralBasis(vecs[:, :q].copy(), vals[:q].copy(), mu, vals, m)


def pca_smallsample(points, q: int) -> SpectralBasis:
    """PCA through the (m x m) matrix ``A^T A``: ``U = A Q D^(-1/2)``.

    Useful when the dimension ``n`` is much larger than the sample count.
    """
    x = _points(points, min_rows=2)
    m, n = x.shape
    mu = x.mean(axis=0)
    a = (x - mu).T
    vals, vecs = sym_eig(a.T @ a)
    top = vals[0] if vals.size else 0.0
    rank = int(np.count_nonzero(vals > RANK_TOL * top)) if top > 0 else 0
    if not 1 <= q <= rank:
        raise InvalidParameterError(f"q={q} must be in [1, {rank}] (rank of A^T A)")
    u = a @ vecs[:, :q] / np.sqrt(vals[:q])
    spectrum = np.zeros(n)
    k = min(n, m)
    spectrum[:k] = np.where(vals[:k] > RANK_TOL * top, vals[:k], 0.0)
    return SpectralBasis(canonical_signs(u), vals[:q].copy(), mu, spectrum, m)


def random_orthonormal(n: int, q: int, rng: np.random.Generator) -> np.ndarray:
    return qr(rng.normal(size=(n, q)))[0]


# -- kernel PCA -------------------------------------------------------------


@dataclass(frozen=True)
class KpcaModel:
    points: np.ndarray
    kernel: KernelSpec
    coefficients: np.ndarray  # m x q, equals Q D^(-1/2)
    values: np.ndarray
    rank: int

    def project(self, x) -> np.ndarray:
        return kpca_project(self, x)

    def distance(self, x) -> float:
        return kpca_distance(self, x)


def kpca(points, spec: KernelSpec, q: int) -> KpcaModel:
    """Kernel PCA without feature-space centering.

    Projection of ``x`` is ``V^T (k(x_1, x), ..., k(x_m, x))`` with
    ``V = Q D^(-1/2)`` from the top-``q`` eigenpairs of the Gram matrix.
    """
    x = _points(points)
    k = kernel_matrix(spec, x, x)
    k = 0.5 * (k + k.T)
    vals, vecs = sym_eig(k)
    top = vals[0]
    rank = int(np.count_nonzero(vals > RANK_TOL * top)) if top > 0 else 0
    if not 1 <= q <= rank:
        raise InvalidParameterError(f"q={q} must be in [1, {rank}] (rank of the Gram matrix)")
    coef = vecs[:, :q] / np.sqrt(vals[:q])
    return KpcaModel(x, spec, coef, vals[:q].copy(), rank)


def kpca_project(model: KpcaModel, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    kx = kernel_matrix(model.kernel, model.points, x)
    y = model.coefficients.T @ kx
    return y[:, 0] if y.shape[1] == 1 else y.T


def kpca_distance(model: KpcaModel, x) -> float:
    """Distance from ``phi(x)`` to the principal subspace: ``k(x, x) - ||y||^2``."""
    x = np.asarray(x, dtype=float).ravel()
    y = kpca_project(model, x)
    d = kernel_eval(model.kernel, x, x) - float(y @ y)
    if -1e-9 <= d < 0:
        d = 0.0
    return d


# -- LDA --------------------------------------------------------------------


def within_scatter(classes) -> np.ndarray:
    """``S_w = sum_j (1 / l_j) A_j A_j^T``: the sum of per-class covariances."""
    n = classes[0].shape[1]
    s = np.zeros((n, n))
    for c in classes:
        a = (c - c.mean(axis=0)).T
        s += a @ a.T / c.shape[0]
    return 0.5 * (s + s.T)


def _regularize(s: np.ndarray) -> tuple[np.ndarray, float]:
    try:
        cholesky(s)
        return s, 0.0
    except SingularityError:
        n = s.shape[0]
        tr = float(np.trace(s))
        if tr <= 0:
            raise SingularityError("within-class scatter is zero; classes are single points") from None
        eps = 1e-8 * tr / n
        return s + eps * np.eye(n), eps


@dataclass(frozen=True)
class LdaModel:
    direction: np.ndarray  # unit length, points towards class 1
    offset: float
    mean1: np.ndarray
    mean2: np.ndarray
    scatter: np.ndarray
    ridge: float = 0.0

    def decision_value(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        return x @ self.direction - self.offset

    def predict(self, points) -> np.ndarray:
        """1 for class 1, 2 for class 2 (ties go to class 1)."""
        return np.where(self.decision_value(points) >= 0, 1, 2)


def lda2(class1, class2) -> LdaModel:
    """Fisher discriminant ``w ~ S_w^-1 (mu1 - mu2)`` with the midpoint boundary.

    The decision value ``w @ x - offset`` is positive on the class-1 side.
    The direction keeps that orientation rather than the positive-first-
    coordinate convention used for unsigned axes.
    """
    c1 = _points(class1)
    c2 = _points(class2)
    if c1.shape[1] != c2.shape[1]:
        raise ShapeError("classes have different dimensions")
    mu1, mu2 = c1.mean(axis=0), c2.mean(axis=0)
    sw = within_scatter([c1, c2])
    try:
        s, ridge = _regularize(sw)
    except SingularityError:
        if np.allclose(mu1, mu2):
            raise
        # zero scatter: fall back to the mean difference
        s, ridge = np.eye(sw.shape[0]), 0.0
    raw = solve_spd(s, mu1 - mu2)
    nrm = float(np.linalg.norm(raw))
    if nrm == 0.0:
        raise SingularityError("class means coincide; no discriminating direction")
    offset = 0.5 * float((mu1 + mu2) @ raw)
    return LdaModel(raw / nrm, offset / nrm, mu1, mu2, sw, ridge)


def between_scatter(classes) -> np.ndarray:
    """``S_b = (1/q) B B^T`` with columns ``mu_j - mu`` (``mu`` = overall mean)."""
    allpts = np.vstack(classes)
    mu = allpts.mean(axis=0)
    b = np.column_stack([c.mean(axis=0) - mu for c in classes])
    return b @ b.T / len(classes)


def rayleigh_quotient(w, sb: np.ndarray, sw: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    return float(w @ sb @ w) / float(w @ sw @ w)


@dataclass(frozen=True)
class LdaAxes:
    axes: np.ndarray  # n x q, unit columns
    values: np.ndarray  # generalised eigenvalues J(w)
    within: np.ndarray
    between: np.ndarray
    ridge: float = 0.0


def lda_general(classes, q: int) -> LdaAxes:
    """Multi-class Fisher axes via symmetric whitening.

    Solves ``S_b w = J S_w w`` as the symmetric problem
    ``S_w^-1/2 S_b S_w^-1/2 z = J z`` with ``w = S_w^-1/2 z``.
    """
    cs = [_points(c) for c in classes]
    if len(cs) < 2:
        raise InvalidParameterError("need at least two classes")
    if len({c.shape[1] for c in cs}) != 1:
        raise ShapeError("classes have different dimensions")
    limit = len(cs) - 1
    if q > limit:
        warnings.warn(f"at most {limit} discriminant axes exist; truncating q={q}", RuntimeWarning, stacklevel=2)
        q = limit
    if q < 1:
        raise InvalidParameterError("q must be at least 1")
    sw = within_scatter(cs)
    sb = between_scatter(cs)
    s, ridge = _regularize(sw)
    white = sym_sqrt_inv(s)
    vals, z = sym_eig(white @ sb @ white)
    w = white @ z[:, :q]
    w = w / np.linalg.norm(w, axis=0)
    return LdaAxes(canonical_signs(w), vals[:q].copy(), sw, sb, ridge)


# -- CCA --------------------------------------------------------------------


@dataclass(frozen=True)
class CcaModel:
    input_axes: np.ndarray  # k x q
    output_axes: np.ndarray  # s x q
    cosines: np.ndarray

    def predict(self, x) -> np.ndarray:
        return cca_predict(self, x)


def cca(a, b, q: int | None = None) -> CcaModel:
    """Principal angles between the column spaces of ``A`` and ``B``.

    ``A`` (n x k) and ``B`` (n x s) hold paired samples as rows; data are used
    as given (no centering). With ``A = Q_A R_A``, ``B = Q_B R_B`` and the SVD
    ``Q_A^T Q_B = U' S V'^T``, the axes are ``U = R_A^-1 U'`` and
    ``V = R_B^-1 V'`` and the cosines are the singular values.
    """
    a = _points(a)
    b = _points(b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"A has {a.shape[0]} rows but B has {b.shape[0]}")
    k, s = a.shape[1], b.shape[1]
    if q is None:
        q = min(k, s)
    if not 1 <= q <= min(k, s):
        raise InvalidParameterError(f"q={q} must be in [1, {min(k, s)}]")
    qa, ra = qr(a)
    qb, rb = qr(b)
    uh, sv, vh = svd(qa.T @ qb, q)
    # flip pairs together so that each cosine stays positive
    for j in range(q):
        col = uh[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-10 * max(np.max(np.abs(col)), 1e-300))
        if idx.size and col[idx[0]] < 0:
            uh[:, j] = -uh[:, j]
            vh[:, j] = -vh[:, j]
    u = solve_upper(ra, uh)
    v = solve_upper(rb, vh)
    return CcaModel(u, v, np.clip(sv, 0.0, None))


def cca_predict(model: CcaModel, x) -> np.ndarray:
    """Minimum-norm ``y`` solving ``V^T y = U^T x``: ``y = V (V^T V)^-1 U^T x``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xs = np.atleast_2d(x)
    v = model.output_axes
    rhs = model.input_axes.T @ xs.T
    y = v @ solve_spd(v.T @ v, rhs)
    return y[:, 0] if single else y.T
