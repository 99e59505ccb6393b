"""Dense linear algebra and reproducible randomness.

Everything here works on small-to-medium dense ``numpy`` arrays. The
eigensolver is cyclic Jacobi, QR is modified Gram-Schmidt with one
re-orthogonalisation pass, and the SVD is derived from the eigendecomposition
of the smaller Gram matrix. Random streams use numpy's Philox counter-based
generator so a seed replays identically on every platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegeneracyError, ShapeError, SingularityError

# Relative symmetry tolerance used by sym_eig's precondition check.
SYMMETRY_TOL = 1e-8
# Singular values below this fraction of the largest are reported as zero.
SVD_RANK_TOL = 1e-12
# QR declares a column dependent when its residual norm drops below this
# fraction of the original column norm.
QR_RANK_TOL = 1e-10


@dataclass(frozen=True)
class SymEigResult:
    values: np.ndarray
    vectors: np.ndarray

    def __iter__(self):
        # allows ``values, vectors = sym_eig(a)``
        yield self.values
        yield self.vectors


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeError("matrix has non-finite entries")
    return a


def canonical_signs(vectors: np.ndarray, rel_tol: float = 1e-10) -> np.ndarray:
    """Flip columns so the first non-negligible entry of each is positive."""
    v = np.array(vectors, dtype=float, copy=True)
    for j in range(v.shape[1]):
        col = v[:, j]
        scale = np.max(np.abs(col)) if col.size else 0.0
        if scale == 0.0:
            continue
        idx = np.flatnonzero(np.abs(col) > rel_tol * scale)[0]
        if col[idx] < 0:
            v[:, j] = -col
    return v


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament schedule covering every index pair once per sweep in rounds
    of disjoint pairs."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = [(players[i], players[size - 1 - i]) for i in range(size // 2)]
        pairs = [(min(a, b), max(a, b)) for a, b in pairs if a >= 0 and b >= 0]
        if pairs:
            rounds.append((np.array([a for a, _ in pairs]), np.array([b for _, b in pairs])))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def sym_eig(a, tol: float = 1e-14, max_sweeps: int = 100) -> SymEigResult:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues come back in descending order; eigenvector columns are
    orthonormal and sign-normalised (first non-negligible entry positive).
    Iteration stops once the off-diagonal Frobenius mass falls below
    ``tol * ||a||_F``.
    """
    a = _as_matrix(a)
    n, m = a.shape
    if n != m:
        raise ShapeError(f"sym_eig needs a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if np.max(np.abs(a - a.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise ShapeError("sym_eig needs a symmetric matrix")
    w = 0.5 * (a + a.T)
    v = np.eye(n)
    fro = np.linalg.norm(w)
    if n <= 1 or fro == 0.0:
        return SymEigResult(np.diag(w).copy(), v)

    target = tol * fro
    rounds = _round_robin(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(w - np.diag(np.diag(w)))
        if off <= target:
            break
        for p, q in rounds:
            # disjoint pairs: the rotations commute and are applied together
            apq = w[p, q]
            app, aqq = w[p, p], w[q, q]
            active = np.abs(apq) > 1e-18 * (np.abs(app) + np.abs(aqq))
            if not np.any(active):
                w[p, q] = w[q, p] = 0.0
                continue
            safe = np.where(active, apq, 1.0)
            theta = (aqq - app) / (2.0 * safe)
            t = np.copysign(1.0, theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            wp, wq = w[:, p], w[:, q]
            w[:, p], w[:, q] = c * wp - s * wq, s * wp + c * wq
            wp, wq = w[p, :], w[q, :]
            w[p, :], w[q, :] = c[:, None] * wp - s[:, None] * wq, s[:, None] * wp + c[:, None] * wq
            w[p, q] = w[q, p] = 0.0
            vp, vq = v[:, p], v[:, q]
            v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq

    values = np.diag(w).copy()
    order = np.argsort(-values, kind="stable")
    return SymEigResult(values[order], canonical_signs(v[:, order]))


def qr(a) -> tuple[np.ndarray, np.ndarray]:
    """Reduced QR factorisation by modified Gram-Schmidt (two passes).

    Returns ``q`` with orthonormal columns and upper-triangular ``r`` with a
    strictly positive diagonal. Raises ``DegeneracyError`` naming the first
    column that is (numerically) a combination of the earlier ones.
    """
    a = _as_matrix(a)
    rows, cols = a.shape
    if cols > rows:
        raise DegeneracyError(
            f"{cols} columns cannot be independent in R^{rows}", column=rows
        )
    q = np.zeros((rows, cols))
    r = np.zeros((cols, cols))
    for j in range(cols):
        col = a[:, j].copy()
        norm0 = np.linalg.norm(col)
        for _ in range(2):
            for i in range(j):
                coef = q[:, i] @ col
                r[i, j] += coef
                col -= coef * q[:, i]
        nrm = np.linalg.norm(col)
        if norm0 == 0.0 or nrm <= QR_RANK_TOL * norm0:
            raise DegeneracyError(f"column {j} is linearly dependent on earlier columns", column=j)
        r[j, j] = nrm
        q[:, j] = col / nrm
    return q, r


def _complete_basis(u: np.ndarray, k: int, rows: int) -> np.ndarray:
    """Extend the orthonormal columns of ``u`` to ``k`` columns."""
    cols = [u[:, j] for j in range(u.shape[1])]
    for e in np.eye(rows):
        if len(cols) == k:
            break
        x = e.copy()
        for _ in range(2):
            for c in cols:
                x -= (c @ x) * c
        nrm = np.linalg.norm(x)
        if nrm > 1e-8:
            cols.append(x / nrm)
    return np.column_stack(cols) if cols else np.zeros((rows, 0))


def svd(a, q: int | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-``q`` singular triplets ``(u, s, v)`` with ``a ~= u @ diag(s) @ v.T``.

    Computed from ``sym_eig`` of the smaller of ``a.T @ a`` and ``a @ a.T``.
    Singular values under ``1e-12 * s_max`` are reported as exactly zero and
    their left/right vectors are completed to an orthonormal set.
    """
    a = _as_matrix(a)
    rows, cols = a.shape
    kmax = min(rows, cols)
    if q is None:
        q = kmax
    if not 0 <= q <= kmax:
        raise ShapeError(f"q={q} out of range for a {rows}x{cols} matrix")
    transposed = cols > rows
    b = a.T if transposed else a
    # b is tall: rows_b >= cols_b
    vals, vecs = sym_eig(b.T @ b)
    s_all = np.sqrt(np.clip(vals, 0.0, None))
    smax = s_all[0] if s_all.size else 0.0
    s_all = np.where(s_all > SVD_RANK_TOL * smax, s_all, 0.0) if smax > 0 else np.zeros_like(s_all)
    s = s_all[:q]
    v = vecs[:, :q]
    nz = s > 0
    u_nz = (b @ v[:, nz]) / s[nz]
    u = np.zeros((b.shape[0], q))
    u[:, nz] = u_nz
    if not np.all(nz):
        filled = _complete_basis(u_nz, q, b.shape[0])
        u[:, ~nz] = filled[:, u_nz.shape[1]:q]
    if transposed:
        u, v = v, u
    return u, s, v


def cholesky(a) -> np.ndarray:
    """Lower-triangular ``l`` with ``l @ l.T == a``; raises on non-SPD input."""
    a = _as_matrix(a)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ShapeError(f"cholesky needs a square matrix, got {a.shape}")
    l = np.zeros_like(a)
    scale = max(float(np.max(np.abs(np.diag(a)), initial=0.0)), 1e-300)
    for j in range(n):
        d = a[j, j] - l[j, :j] @ l[j, :j]
        if not d > 1e-14 * scale:
            raise SingularityError(f"matrix is not positive definite (pivot {j} = {d:.3g})")
        l[j, j] = np.sqrt(d)
        l[j + 1:, j] = (a[j + 1:, j] - l[j + 1:, :j] @ l[j, :j]) / l[j, j]
    return l


def solve_lower(l: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = np.array(b, dtype=float, copy=True)
    for i in range(l.shape[0]):
        x[i] = (x[i] - l[i, :i] @ x[:i]) / l[i, i]
    return x


def solve_upper(u: np.ndarray, b: np.ndarray) -> np.ndarray:
    x = np.array(b, dtype=float, copy=True)
    n = u.shape[0]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - u[i, i + 1:] @ x[i + 1:]) / u[i, i]
    return x


def solve_spd(a, b) -> np.ndarray:
    """Solve ``a x = b`` for symmetric positive-definite ``a`` via Cholesky.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    l = cholesky(a)
    b = np.asarray(b, dtype=float)
    if b.shape[0] != l.shape[0]:
        raise ShapeError(f"rhs has {b.shape[0]} rows, matrix is {l.shape}")
    return solve_upper(l.T, solve_lower(l, b))


def sym_sqrt_inv(a) -> np.ndarray:
    """``a^{-1/2}`` for a symmetric positive-definite matrix."""
    vals, vecs = sym_eig(a)
    if vals[-1] <= 0:
        raise SingularityError("matrix is not positive definite")
    return (vecs / np.sqrt(vals)) @ vecs.T


# -- randomness -------------------------------------------------------------

RNG_ALGORITHM = "numpy.random.Philox (4x64, 10 rounds)"


def make_rng(seed: int = 0) -> np.random.Generator:
    """Generator for ``seed`` backed by the Philox counter-based bit generator."""
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


def child_rng(seed: int, stream: int) -> np.random.Generator:
    """Independent stream for parallel work: seed = parent seed XOR stream index."""
    return make_rng(int(seed) ^ int(stream))
