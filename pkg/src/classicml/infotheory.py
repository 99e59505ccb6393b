"""Relative entropy, empirical maximum likelihood and MaxEnt fitting.

``maxent_fit`` finds the distribution closest to a prior ``p0`` (in relative
entropy) that meets linear expectation constraints. The solution has Gibbs
form ``p_i = p0_i exp(sum_j mu_j f_ji) / Z`` and ``mu`` maximises the concave
dual ``g(mu) = mu @ b - log sum_i p0_i exp(sum_j mu_j f_ji)``. The sign of
each ``mu_j`` therefore falls out of the ascent: targets above the prior
mean give positive weights, targets below give negative ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import ConvergenceError, EmptyInputError, InvalidParameterError, ShapeError, SingularityError
from .numerics import solve_spd

MAXENT_MAX_ITER = 200
MAXENT_MU_LIMIT = 1e6
# minimum slack (smallest achievable probability) for targets to count as
# strictly inside the feasible region
FEASIBILITY_SLACK = 1e-9


def _nonneg(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError(f"{name} must be a vector")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise InvalidParameterError(f"{name} must be finite and nonnegative")
    return x


def relative_entropy(x, y) -> float:
    """``sum x ln(x / y) - sum x + sum y`` on nonnegative vectors.

    Uses ``0 ln(0 / y) = 0`` and returns ``inf`` when some ``x_i > 0`` meets
    ``y_i = 0``.
    """
    x = _nonneg(x, "x")
    y = _nonneg(y, "y")
    if x.shape != y.shape:
        raise ShapeError(f"length mismatch: {x.size} vs {y.size}")
    pos = x > 0
    if np.any(pos & (y == 0)):
        return float("inf")
    terms = x[pos] * (np.log(x[pos]) - np.log(y[pos]))
    return float(terms.sum() - x.sum() + y.sum())


def ml_empirical(f) -> np.ndarray:
    """Maximum-likelihood distribution for occurrence frequencies ``f``."""
    f = _nonneg(f, "f")
    total = f.sum()
    if total <= 0:
        raise EmptyInputError("frequency vector has zero mass")
    return f / total


def entropy(p) -> float:
    """Shannon entropy in nats with ``0 ln 0 = 0``."""
    p = _nonneg(p, "p")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidParameterError("p must sum to 1")
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


@dataclass(frozen=True)
class GibbsModel:
    prior: np.ndarray
    features: np.ndarray
    weights: np.ndarray
    log_normalizer: float
    iterations: int
    residual: float

    @property
    def normalizer(self) -> float:
        return float(np.exp(self.log_normalizer))

    def probabilities(self) -> np.ndarray:
        return _gibbs(self.prior, self.features, self.weights)[0]


def _gibbs(p0: np.ndarray, f: np.ndarray, mu: np.ndarray) -> tuple[np.ndarray, float]:
    """Gibbs distribution and log-partition, computed stably in log space."""
    with np.errstate(divide="ignore"):
        logits = np.log(p0) + mu @ f
    top = np.max(logits)
    w = np.exp(logits - top)
    s = w.sum()
    return w / s, float(top + np.log(s))


def _strictly_feasible(p0: np.ndarray, f: np.ndarray, b: np.ndarray) -> bool:
    """Whether some p with full support on supp(p0) meets the constraints.

    Solves ``max t`` s.t. ``f p = b``, ``sum p = 1``, ``p >= t`` over the
    support of the prior.
    """
    support = np.flatnonzero(p0 > 0)
    n = support.size
    fs = f[:, support]
    # variables: p (n entries) then t
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_eq = np.vstack([np.hstack([fs, np.zeros((fs.shape[0], 1))]), np.append(np.ones(n), 0.0)])
    b_eq = np.append(b, 1.0)
    a_ub = np.hstack([-np.eye(n), np.ones((n, 1))])
    b_ub = np.zeros(n)
    bounds = [(0, None)] * n + [(None, 1.0)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return bool(res.status == 0 and -res.fun > FEASIBILITY_SLACK)


def maxent_fit(prior, features, targets, tol: float = 1e-10, max_iter: int = MAXENT_MAX_ITER) -> GibbsModel:
    """Minimum relative entropy distribution subject to ``features @ p = targets``.

    ``features`` is (k constraints x n states). The dual is maximised with a
    damped Newton method; each step backtracks until the dual objective rises.
    Raises ``ConvergenceError`` (with the final residual) when the targets are
    not strictly inside the achievable region, or when the ascent fails to
    bring the residual below ``tol`` within ``max_iter`` steps.
    """
    p0 = _nonneg(prior, "prior")
    if p0.size == 0 or p0.sum() <= 0:
        raise EmptyInputError("prior has no mass")
    p0 = p0 / p0.sum()
    f = np.asarray(features, dtype=float)
    if f.ndim == 1:
        f = f[None, :]
    b = np.atleast_1d(np.asarray(targets, dtype=float))
    if f.shape[1] != p0.size or f.shape[0] != b.size:
        raise ShapeError(f"features {f.shape} incompatible with {p0.size} states and {b.size} targets")
    k = f.shape[0]
    mu = np.zeros(k)
    if k == 0:
        p, logz = _gibbs(p0, f, mu)
        return GibbsModel(p0, f, mu, logz, 0, 0.0)

    feasible = _strictly_feasible(p0, f, b)

    def dual(m):
        return float(m @ b) - _gibbs(p0, f, m)[1]

    p, _ = _gibbs(p0, f, mu)
    grad = b - f @ p
    residual = float(np.max(np.abs(grad)))
    it = 0
    while residual > tol and it < max_iter:
        it += 1
        mean = f @ p
        cov = (f * p) @ f.T - np.outer(mean, mean)
        ridge = 1e-12 * max(float(np.trace(cov)), 1e-300)
        try:
            # a near-singular covariance can overflow; the finiteness check
            # below falls back to the gradient
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                step = solve_spd(cov + ridge * np.eye(k), grad)
        except SingularityError:
            step = grad
        if not np.all(np.isfinite(step)):
            step = grad
        g0 = dual(mu)
        t = 1.0
        while t > 1e-12:
            cand = mu + t * step
            if dual(cand) >= g0 - 1e-15 * max(1.0, abs(g0)):
                break
            t *= 0.5
        mu = mu + t * step
        p, _ = _gibbs(p0, f, mu)
        grad = b - f @ p
        residual = float(np.max(np.abs(grad)))
        if np.linalg.norm(mu) > MAXENT_MU_LIMIT:
            break

    if not feasible:
        raise ConvergenceError(
            f"targets are not strictly achievable; residual {residual:.3g} with |mu| = {np.linalg.norm(mu):.3g}",
            residual=residual,
        )
    if residual > tol:
        raise ConvergenceError(
            f"dual ascent stopped after {it} iterations with residual {residual:.3g}",
            residual=residual,
        )
    _, logz = _gibbs(p0, f, mu)
    return GibbsModel(p0, f, mu, logz, it, residual)
