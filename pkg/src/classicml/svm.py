"""Soft-margin kernel SVM trained on the Lagrangian dual.

Primal: ``min 1/2 w.w + nu sum eps_i`` s.t. ``y_i (w.phi(x_i) - b) >= 1 - eps_i``.
Dual:   ``max sum mu_i - 1/2 mu^T M mu`` s.t. ``0 <= mu_i <= nu``, ``sum y_i mu_i = 0``
with ``M_ij = y_i y_j k(x_i, x_j)``. ``nu`` is not divided by the sample
count. The decision function is ``sign(sum_i mu_i y_i k(x_i, x) - b)``.

The dual is solved by pairwise coordinate ascent (SMO). Each step picks the
maximally KKT-violating pair and solves the two-variable subproblem in closed
form, so the box and equality constraints hold exactly at every step.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable

import numpy as np

from .errors import InvalidParameterError, ShapeError

FAMILIES = ("linear", "poly_homogeneous", "poly_inhomogeneous", "rbf")
FEATURE_DIM_LIMIT = 10**6
SNAP_TOL = 1e-9


@dataclass(frozen=True)
class KernelSpec:
    family: str = "linear"
    degree: int = 1
    theta: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameterError(f"unknown kernel family {self.family!r}")
        if self.family.startswith("poly") and (int(self.degree) != self.degree or self.degree < 1):
            raise InvalidParameterError("polynomial degree must be an integer >= 1")
        if self.theta < 0:
            raise InvalidParameterError("theta must be >= 0")
        if self.family == "rbf" and not self.sigma > 0:
            raise InvalidParameterError("sigma must be > 0")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear")

    @classmethod
    def poly(cls, degree: int, theta: float | None = None) -> "KernelSpec":
        if theta is None:
            return cls("poly_homogeneous", degree=degree)
        return cls("poly_inhomogeneous", degree=degree, theta=theta)

    @classmethod
    def rbf(cls, sigma: float) -> "KernelSpec":
        return cls("rbf", sigma=sigma)

    def to_dict(self) -> dict:
        return {"family": self.family, "degree": int(self.degree), "theta": float(self.theta), "sigma": float(self.sigma)}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(d["family"], int(d.get("degree", 1)), float(d.get("theta", 0.0)), float(d.get("sigma", 1.0)))


def kernel_matrix(spec: KernelSpec, a, b) -> np.ndarray:
    """``K[i, j] = k(a_i, b_j)`` for row-wise point sets."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if spec.family == "rbf":
        sq = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * a @ b.T
        return np.exp(-np.maximum(sq, 0.0) / (2.0 * spec.sigma**2))
    dot = a @ b.T
    if spec.family == "linear":
        return dot
    if spec.family == "poly_homogeneous":
        return dot ** int(spec.degree)
    return (dot + spec.theta) ** int(spec.degree)


def kernel_eval(spec: KernelSpec, x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ShapeError(f"dimension mismatch: {x.size} vs {y.size}")
    if spec.family == "rbf":
        d = x - y
        return float(np.exp(-(d @ d) / (2.0 * spec.sigma**2)))
    dot = float(x @ y)
    if spec.family == "linear":
        return dot
    if spec.family == "poly_homogeneous":
        return dot ** int(spec.degree)
    return (dot + spec.theta) ** int(spec.degree)


def feature_exponents(k: int, d: int, homogeneous: bool) -> list[tuple[int, ...]]:
    """Exponent tuples of the explicit polynomial feature map, in output order.

    Monomials are grouped by total degree in ``x`` (highest first); within a
    degree, pure powers come before mixed terms, and ties go in descending
    lexicographic order of the exponent tuple. For ``k = d = 2`` this gives
    ``x1^2, x2^2, x1 x2`` followed (inhomogeneous case) by ``x1, x2, 1``.
    """
    degrees = [d] if homogeneous else range(d, -1, -1)
    out = []
    for e in degrees:
        group = set()
        for combo in combinations_with_replacement(range(k), e):
            a = [0] * k
            for i in combo:
                a[i] += 1
            group.add(tuple(a))
        out.extend(sorted(group, key=lambda a: (sum(1 for v in a if v), tuple(-v for v in a))))
    return out


def feature_dim(k: int, d: int, homogeneous: bool) -> int:
    return math.comb(k + d - 1, d) if homogeneous else math.comb(k + d, d)


def feature_map_poly(spec: KernelSpec, x) -> np.ndarray:
    """Explicit ``phi(x)`` with ``phi(x) @ phi(y) == k(x, y)`` for polynomial kernels.

    Each coordinate is ``sqrt(c) * prod x_i^a_i`` where ``c`` is the
    multinomial coefficient of the monomial in ``(x.y + theta)^d``; in the
    inhomogeneous case ``c`` includes the factor ``theta^(d - |a|)``.
    """
    if spec.family == "linear":
        spec = KernelSpec("poly_homogeneous", degree=1)
    if not spec.family.startswith("poly"):
        raise InvalidParameterError("explicit feature maps exist only for polynomial kernels")
    x = np.asarray(x, dtype=float).ravel()
    k, d = x.size, int(spec.degree)
    homogeneous = spec.family == "poly_homogeneous"
    dim = feature_dim(k, d, homogeneous)
    if dim > FEATURE_DIM_LIMIT:
        raise InvalidParameterError(f"feature map would have {dim} coordinates (limit {FEATURE_DIM_LIMIT})")
    fd = math.factorial(d)
    out = np.empty(dim)
    for idx, a in enumerate(feature_exponents(k, d, homogeneous)):
        a0 = d - sum(a)
        coef = fd // (math.prod(math.factorial(v) for v in a) * math.factorial(a0))
        scale = math.sqrt(coef)
        if a0:
            scale *= spec.theta ** (a0 / 2)
        mono = 1.0
        for xi, v in zip(x, a):
            if v:
                mono *= xi**v
        out[idx] = scale * mono
    return out


def gram(spec: KernelSpec, points, labels=None) -> np.ndarray:
    """Gram matrix ``K``, or the labelled ``M = D_y K D_y`` when labels are given."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if x.shape[0] == 0:
        raise ShapeError("no points")
    k = kernel_matrix(spec, x, x)
    k = 0.5 * (k + k.T)
    if labels is None:
        return k
    y = np.asarray(labels, dtype=float)
    return y[:, None] * k * y[None, :]


# -- training ---------------------------------------------------------------


@dataclass
class SvmConfig:
    nu: float = 1.0
    tol: float = 1e-6
    max_passes: int | None = None


@dataclass(frozen=True)
class SvmModel:
    support_points: np.ndarray
    support_labels: np.ndarray
    support_multipliers: np.ndarray
    b: float
    kernel: KernelSpec
    nu: float
    train_multipliers: np.ndarray
    support_index: np.ndarray
    dual_objective: float
    max_violation: float
    iterations: int
    converged: bool
    b_from_margin: bool = True
    history: list[float] = field(default_factory=list, compare=False, repr=False)

    def weight_vector(self) -> np.ndarray:
        """Explicit ``w = sum mu_i y_i x_i``; meaningful for the linear kernel."""
        return (self.support_multipliers * self.support_labels) @ self.support_points


def _labels(labels) -> np.ndarray:
    y = np.asarray(labels, dtype=float).ravel()
    if not np.all((y == 1) | (y == -1)):
        raise InvalidParameterError("labels must be -1 or +1")
    return y


def _dual_value(mu: np.ndarray, grad: np.ndarray) -> float:
    # with grad = M mu - 1: sum mu - 1/2 mu^T M mu = 1/2 sum mu - 1/2 mu^T grad
    return float(0.5 * mu.sum() - 0.5 * mu @ grad)


def train(
    points,
    labels,
    spec: KernelSpec,
    nu: float = 1.0,
    tol: float = 1e-6,
    max_passes: int | None = None,
    callback: Callable[[np.ndarray], None] | None = None,
) -> SvmModel:
    """Solve the SVM dual by SMO with maximal-violating-pair selection.

    Stops when the KKT gap ``max_{I_up} -y G - min_{I_low} -y G`` drops below
    ``tol`` or after ``max_passes * m`` pair updates (default ``max_passes =
    10 m``). ``callback(mu)`` is invoked after every update.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    y = _labels(labels)
    m = x.shape[0]
    if y.size != m:
        raise ShapeError(f"{m} points but {y.size} labels")
    if not (np.any(y > 0) and np.any(y < 0)):
        raise InvalidParameterError("training needs both classes (+1 and -1)")
    if not nu > 0:
        raise InvalidParameterError("nu must be > 0")
    if max_passes is None:
        max_passes = 10 * m
    k = gram(spec, x)
    q = y[:, None] * k * y[None, :]
    mu = np.zeros(m)
    grad = -np.ones(m)
    diag = np.diag(k)
    history = [0.0]
    budget = max_passes * m
    it = 0
    gap = np.inf
    while True:
        up = ((y > 0) & (mu < nu)) | ((y < 0) & (mu > 0))
        low = ((y > 0) & (mu > 0)) | ((y < 0) & (mu < nu))
        score = -y * grad
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        j = int(np.flatnonzero(low)[np.argmin(score[low])])
        gap = float(score[i] - score[j])
        if gap < tol or it >= budget:
            break
        it += 1
        # move mu_i by +y_i t and mu_j by -y_j t (keeps sum y mu fixed)
        eta = diag[i] + diag[j] - 2.0 * k[i, j]
        eta = max(eta, 1e-12)
        t = gap / eta
        # box limits on t
        hi_i = nu - mu[i] if y[i] > 0 else mu[i]
        hi_j = mu[j] if y[j] > 0 else nu - mu[j]
        t = min(t, hi_i, hi_j)
        di, dj = y[i] * t, -y[j] * t
        mu[i] += di
        mu[j] += dj
        for idx in (i, j):
            if abs(mu[idx]) < SNAP_TOL:
                mu[idx] = 0.0
            elif abs(mu[idx] - nu) < SNAP_TOL:
                mu[idx] = nu
        grad += q[:, i] * di + q[:, j] * dj
        history.append(_dual_value(mu, grad))
        if callback is not None:
            callback(mu.copy())

    # recompute the gradient exactly after snapping
    grad = q @ mu - 1.0
    yg = y * grad
    free = (mu > 0) & (mu < nu)
    if free.any():
        b = float(np.mean(yg[free]))
        from_margin = True
    else:
        at_ub = mu >= nu
        at_lb = mu <= 0
        ub_set = (at_ub & (y < 0)) | (at_lb & (y > 0))
        lb_set = (at_ub & (y > 0)) | (at_lb & (y < 0))
        ub = float(np.min(yg[ub_set])) if ub_set.any() else np.inf
        lb = float(np.max(yg[lb_set])) if lb_set.any() else -np.inf
        b = 0.5 * (ub + lb) if np.isfinite(ub) and np.isfinite(lb) else (ub if np.isfinite(ub) else lb)
        from_margin = False
        warnings.warn("no multiplier strictly inside (0, nu); offset b taken from the KKT midpoint", RuntimeWarning, stacklevel=2)
    sv = np.flatnonzero(mu > 0)
    return SvmModel(
        support_points=x[sv].copy(),
        support_labels=y[sv].copy(),
        support_multipliers=mu[sv].copy(),
        b=b,
        kernel=spec,
        nu=float(nu),
        train_multipliers=mu.copy(),
        support_index=sv,
        dual_objective=_dual_value(mu, grad),
        max_violation=gap,
        iterations=it,
        converged=gap < tol,
        b_from_margin=from_margin,
        history=history,
    )


def decision_values(model: SvmModel, points) -> np.ndarray:
    x = np.atleast_2d(np.asarray(points, dtype=float))
    if model.support_points.shape[0] == 0:
        return np.full(x.shape[0], -model.b)
    kx = kernel_matrix(model.kernel, model.support_points, x)
    return (model.support_multipliers * model.support_labels) @ kx - model.b


def classify(model: SvmModel, x) -> tuple[int, float]:
    """Predicted label and raw decision value; an exact zero maps to +1."""
    raw = float(decision_values(model, np.asarray(x, dtype=float).ravel()[None, :])[0])
    return (1 if raw >= 0 else -1), raw


def predict(model: SvmModel, points) -> np.ndarray:
    raw = decision_values(model, points)
    return np.where(raw >= 0, 1, -1)


ON_MARGIN = "on-margin"
MARGIN_ERROR = "margin-error"
NON_SUPPORT = "non-support"


def categorize(model: SvmModel) -> list[str]:
    """Tag each training point by its multiplier: 0, strictly inside, or at nu."""
    tags = []
    for mu in model.train_multipliers:
        if mu <= SNAP_TOL:
            tags.append(NON_SUPPORT)
        elif mu >= model.nu - SNAP_TOL:
            tags.append(MARGIN_ERROR)
        else:
            tags.append(ON_MARGIN)
    return tags


@dataclass(frozen=True)
class DualityReport:
    primal: float
    dual: float
    gap: float


def duality_values(spec: KernelSpec, nu: float, mu, b: float, points, labels) -> DualityReport:
    """Primal and dual objective for multipliers ``mu`` and offset ``b``."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    y = _labels(labels)
    mu = np.asarray(mu, dtype=float)
    mm = gram(spec, x, y)
    quad = float(mu @ mm @ mu)
    f = (mu * y) @ gram(spec, x) - b
    slack = np.maximum(0.0, 1.0 - y * f)
    primal = 0.5 * quad + nu * float(slack.sum())
    dual = float(mu.sum()) - 0.5 * quad
    return DualityReport(primal, dual, primal - dual)


def duality_report(model: SvmModel, points, labels) -> DualityReport:
    return duality_values(model.kernel, model.nu, model.train_multipliers, model.b, points, labels)
