"""EM for latent-variable models.

Three instantiations share the same skeleton: a mixture of two biased coins
observed in triplets, an isotropic Gaussian mixture, and a multinomial
mixture over a word/document co-occurrence matrix. Likelihoods are
accumulated in the log domain. Every fit returns an ``EmTrace`` with the
log-likelihood before the first and after every iteration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ComponentCollapseError, EmptyInputError, InvalidParameterError, ShapeError
from .numerics import make_rng

COLLAPSE_VARIANCE = 1e-12


@dataclass
class EmConfig:
    tol: float = 1e-8
    max_iter: int = 500
    seed: int = 0


@dataclass
class EmTrace:
    loglik: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False

    def is_monotone(self, slack: float = 1e-10) -> bool:
        ll = np.asarray(self.loglik)
        return bool(np.all(np.diff(ll) >= -slack))


def _xlogy(x, y):
    """``x * log(y)`` with ``0 * log(0) = 0``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x * np.log(y)
    return np.where(x == 0, 0.0, out)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    top = np.max(a, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    return np.squeeze(top, axis=axis) + np.log(np.sum(np.exp(a - top), axis=axis))


def _run(step: Callable[[], float], first: float, cfg: EmConfig) -> EmTrace:
    trace = EmTrace([first])
    for _ in range(cfg.max_iter):
        ll = step()
        trace.loglik.append(ll)
        trace.iterations += 1
        if abs(ll - trace.loglik[-2]) < cfg.tol:
            trace.converged = True
            break
    return trace


# -- generic lower bound ----------------------------------------------------


def em_lower_bound(joint_loglik_fn: Callable, q, theta) -> float:
    """``Q(q, theta) = sum_i sum_j q_ij log(P(x_i, y_i = j | theta) / q_ij)``.

    ``joint_loglik_fn(theta)`` returns an (m x k) array of
    ``log P(x_i, y_i = j | theta)``. ``Q <= L(theta)`` with equality exactly
    when ``q`` is the posterior over the latent labels.
    """
    q = np.asarray(q, dtype=float)
    logj = np.asarray(joint_loglik_fn(theta), dtype=float)
    if q.shape != logj.shape:
        raise ShapeError(f"q has shape {q.shape}, joint table {logj.shape}")
    if np.any(np.abs(q.sum(axis=1) - 1.0) > 1e-9):
        raise InvalidParameterError("rows of q must sum to 1")
    pos = q > 0
    return float(np.sum(q[pos] * (logj[pos] - np.log(q[pos]))))


def marginal_loglik(joint_loglik_fn: Callable, theta) -> float:
    """``L(theta) = sum_i log sum_j P(x_i, y_i = j | theta)``."""
    return float(np.sum(_logsumexp(np.asarray(joint_loglik_fn(theta), dtype=float), axis=1)))


def exact_posterior(joint_loglik_fn: Callable, theta) -> np.ndarray:
    logj = np.asarray(joint_loglik_fn(theta), dtype=float)
    return np.exp(logj - _logsumexp(logj, axis=1)[:, None])


# -- coins ------------------------------------------------------------------


@dataclass(frozen=True)
class CoinMixtureParams:
    """Mixture of two coins; ``p`` and ``q`` are the probabilities of heads (0)."""

    lam: float
    p: float
    q: float

    def __post_init__(self):
        for name in ("lam", "p", "q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidParameterError(f"{name}={v} outside [0, 1]")


def _heads_counts(triplets) -> np.ndarray:
    t = np.asarray(triplets)
    if t.ndim != 2 or t.shape[1] != 3:
        raise ShapeError("coin data must be an (m x 3) array of bits")
    if t.shape[0] == 0:
        raise EmptyInputError("no triplets")
    if not np.all((t == 0) | (t == 1)):
        raise InvalidParameterError("triplets must contain only 0 and 1")
    return np.count_nonzero(t == 0, axis=1).astype(float)


def coin_joint_loglik(triplets) -> Callable[[CoinMixtureParams], np.ndarray]:
    """Per-triplet ``log P(x_i, coin)`` for coin 1 (column 0) and coin 2."""
    n = _heads_counts(triplets)

    def fn(theta: CoinMixtureParams) -> np.ndarray:
        a = _xlogy(1.0, theta.lam) + _xlogy(n, theta.p) + _xlogy(3 - n, 1 - theta.p)
        b = _xlogy(1.0, 1 - theta.lam) + _xlogy(n, theta.q) + _xlogy(3 - n, 1 - theta.q)
        return np.column_stack([np.broadcast_to(a, n.shape), np.broadcast_to(b, n.shape)])

    return fn


def default_coin_init(triplets, seed: int = 0) -> CoinMixtureParams:
    """Perturb the pooled heads rate in opposite directions for the two coins."""
    rate = float(_heads_counts(triplets).sum()) / (3 * len(triplets))
    rng = make_rng(seed)
    up, down = rng.uniform(0.05, 0.2, size=2)
    return CoinMixtureParams(
        0.5,
        float(np.clip(rate + up, 0.05, 0.95)),
        float(np.clip(rate - down, 0.05, 0.95)),
    )


def em_coins(
    triplets,
    init: CoinMixtureParams | None = None,
    tol: float = 1e-8,
    max_iter: int = 500,
    seed: int = 0,
) -> tuple[CoinMixtureParams, np.ndarray, EmTrace]:
    """Fit the two-coin mixture; returns params, responsibilities for coin 1, trace."""
    cfg = EmConfig(tol, max_iter, seed)
    n = _heads_counts(triplets)
    m = n.size
    theta = init if init is not None else default_coin_init(triplets, seed)
    for name in ("lam", "p", "q"):
        v = getattr(theta, name)
        if not 0.0 < v < 1.0:
            raise InvalidParameterError(f"initial {name}={v} must lie strictly inside (0, 1)")
    joint = coin_joint_loglik(triplets)
    state = {"theta": theta}

    def step() -> float:
        th = state["theta"]
        mu = exact_posterior(joint, th)[:, 0]
        s1, s2 = mu.sum(), (1 - mu).sum()
        lam = s1 / m
        p = float((n / 3) @ mu / s1) if s1 > 0 else th.p
        q = float((n / 3) @ (1 - mu) / s2) if s2 > 0 else th.q
        new = CoinMixtureParams(float(np.clip(lam, 0, 1)), float(np.clip(p, 0, 1)), float(np.clip(q, 0, 1)))
        state["theta"] = new
        return marginal_loglik(joint, new)

    trace = _run(step, marginal_loglik(joint, theta), cfg)
    theta = state["theta"]
    return theta, exact_posterior(joint, theta)[:, 0], trace


# -- Gaussian mixture -------------------------------------------------------


@dataclass(frozen=True)
class GaussianMixtureParams:
    weights: np.ndarray
    centers: np.ndarray
    variances: np.ndarray

    @property
    def k(self) -> int:
        return int(self.weights.size)


def _gmm_log_joint(x: np.ndarray, theta: GaussianMixtureParams) -> np.ndarray:
    d = x.shape[1]
    sq = np.sum((x[:, None, :] - theta.centers[None, :, :]) ** 2, axis=2)
    var = theta.variances[None, :]
    with np.errstate(divide="ignore"):
        logw = np.log(theta.weights)[None, :]
    return logw - 0.5 * d * np.log(2 * np.pi * var) - sq / (2 * var)


def default_gmm_init(points, k: int, seed: int = 0) -> GaussianMixtureParams:
    """``k`` distinct data points as centers, pooled isotropic variance."""
    x = np.asarray(points, dtype=float)
    uniq = np.unique(x, axis=0)
    if uniq.shape[0] < k:
        raise InvalidParameterError(f"need at least {k} distinct points, have {uniq.shape[0]}")
    rng = make_rng(seed)
    # choose among distinct rows in their original order of appearance
    _, first = np.unique(x, axis=0, return_index=True)
    candidates = np.sort(first)
    idx = rng.choice(candidates, size=k, replace=False)
    var = float(np.sum((x - x.mean(axis=0)) ** 2)) / x.size
    if var <= 0:
        var = 1.0
    return GaussianMixtureParams(np.full(k, 1.0 / k), x[idx].copy(), np.full(k, var))


def em_gmm(
    points,
    k: int,
    init: GaussianMixtureParams | None = None,
    tol: float = 1e-8,
    max_iter: int = 500,
    seed: int = 0,
) -> tuple[GaussianMixtureParams, np.ndarray, EmTrace]:
    """Isotropic Gaussian mixture by EM; returns params, (m x k) responsibilities, trace."""
    cfg = EmConfig(tol, max_iter, seed)
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise EmptyInputError("no points")
    if k < 1:
        raise InvalidParameterError("k must be at least 1")
    m, d = x.shape
    theta = init if init is not None else default_gmm_init(x, k, seed)
    theta = GaussianMixtureParams(
        np.asarray(theta.weights, float), np.asarray(theta.centers, float).reshape(k, d),
        np.asarray(theta.variances, float),
    )
    if np.any(theta.variances <= 0):
        raise InvalidParameterError("initial variances must be positive")
    if abs(theta.weights.sum() - 1.0) > 1e-12:
        raise InvalidParameterError("initial weights must sum to 1")
    state = {"theta": theta}

    def loglik(th):
        return float(np.sum(_logsumexp(_gmm_log_joint(x, th), axis=1)))

    def step() -> float:
        th = state["theta"]
        logj = _gmm_log_joint(x, th)
        w = np.exp(logj - _logsumexp(logj, axis=1)[:, None])
        mass = w.sum(axis=0)
        for j in range(k):
            if mass[j] <= 0:
                raise ComponentCollapseError(f"component {j} lost all responsibility", component=j)
        centers = (w.T @ x) / mass[:, None]
        sq = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        var = np.sum(w * sq, axis=0) / (d * mass)
        for j in range(k):
            if var[j] < COLLAPSE_VARIANCE:
                raise ComponentCollapseError(f"component {j} variance collapsed to {var[j]:.3g}", component=j)
        state["theta"] = GaussianMixtureParams(mass / m, centers, var)
        return loglik(state["theta"])

    trace = _run(step, loglik(theta), cfg)
    theta = state["theta"]
    logj = _gmm_log_joint(x, theta)
    resp = np.exp(logj - _logsumexp(logj, axis=1)[:, None])
    return theta, resp, trace


# -- multinomial mixture (pLSA) ---------------------------------------------


@dataclass(frozen=True)
class MultinomialMixtureParams:
    """``P(w, d) = sum_j weights[j] * words[j, w] * docs[j, d]``."""

    weights: np.ndarray
    words: np.ndarray
    docs: np.ndarray

    def joint(self) -> np.ndarray:
        return np.einsum("j,jr,js->rs", self.weights, self.words, self.docs)


def default_plsa_init(n: int, m: int, k: int, seed: int = 0) -> MultinomialMixtureParams:
    """Uniform distributions plus seeded positive noise, renormalised."""
    rng = make_rng(seed)
    u = 1.0 + 0.5 * rng.random((k, n))
    v = 1.0 + 0.5 * rng.random((k, m))
    return MultinomialMixtureParams(
        np.full(k, 1.0 / k), u / u.sum(axis=1, keepdims=True), v / v.sum(axis=1, keepdims=True)
    )


def _plsa_loglik(g: np.ndarray, th: MultinomialMixtureParams) -> float:
    return float(np.sum(_xlogy(g, th.joint())))


def em_plsa(
    g,
    k: int,
    init: MultinomialMixtureParams | None = None,
    tol: float = 1e-8,
    max_iter: int = 500,
    seed: int = 0,
    rule: str = "weighted",
) -> tuple[MultinomialMixtureParams, EmTrace]:
    """Multinomial mixture over an (n words x m documents) co-occurrence matrix.

    ``g`` is scaled to sum to 1. The log-likelihood is ``sum G log P(w, d)``.

    ``rule="weighted"`` (default) is the standard EM update in which each
    cell's responsibilities are weighted by its count:
    ``u_jr ~ sum_s G_rs w_rsj``. ``rule="as_printed"`` treats every
    word/document cell as one example and multiplies by the word frequency
    ``N(r)`` afterwards: ``u_jr ~ N(r) sum_s w_rsj`` (documents analogously).
    The second form reproduces the marginals for ``k = 1`` but is not
    guaranteed to increase the likelihood.

    All-zero rows or columns are dropped for fitting (with a warning) and
    come back as zero entries in ``words`` / ``docs``.
    """
    if rule not in ("weighted", "as_printed"):
        raise InvalidParameterError(f"unknown update rule {rule!r}")
    cfg = EmConfig(tol, max_iter, seed)
    g = np.asarray(g, dtype=float)
    if g.ndim != 2:
        raise ShapeError("co-occurrence matrix must be 2-D")
    if np.any(g < 0) or not np.all(np.isfinite(g)):
        raise InvalidParameterError("co-occurrence counts must be finite and nonnegative")
    total = g.sum()
    if total <= 0:
        raise EmptyInputError("co-occurrence matrix has zero mass")
    if k < 1:
        raise InvalidParameterError("k must be at least 1")
    n_full, m_full = g.shape
    rows = np.flatnonzero(g.sum(axis=1) > 0)
    cols = np.flatnonzero(g.sum(axis=0) > 0)
    if rows.size < n_full or cols.size < m_full:
        warnings.warn(
            f"dropping {n_full - rows.size} empty word rows and {m_full - cols.size} empty document columns",
            RuntimeWarning,
            stacklevel=2,
        )
    gs = g[np.ix_(rows, cols)] / total
    n, m = gs.shape
    if init is None:
        theta = default_plsa_init(n, m, k, seed)
    else:
        theta = MultinomialMixtureParams(
            np.asarray(init.weights, float),
            np.asarray(init.words, float)[:, rows] if init.words.shape[1] == n_full else np.asarray(init.words, float),
            np.asarray(init.docs, float)[:, cols] if init.docs.shape[1] == m_full else np.asarray(init.docs, float),
        )
        theta = MultinomialMixtureParams(
            theta.weights / theta.weights.sum(),
            theta.words / theta.words.sum(axis=1, keepdims=True),
            theta.docs / theta.docs.sum(axis=1, keepdims=True),
        )
    word_freq = gs.sum(axis=1)
    doc_freq = gs.sum(axis=0)
    state = {"theta": theta}

    def step() -> float:
        th = state["theta"]
        parts = np.einsum("j,jr,js->jrs", th.weights, th.words, th.docs)
        denom = parts.sum(axis=0)
        resp = np.divide(parts, denom[None], out=np.zeros_like(parts), where=denom[None] > 0)
        if rule == "weighted":
            wr = resp * gs[None]
            lam = wr.sum(axis=(1, 2))
            u = wr.sum(axis=2)
            v = wr.sum(axis=1)
        else:
            lam = resp.sum(axis=(1, 2))
            u = word_freq[None, :] * resp.sum(axis=2)
            v = doc_freq[None, :] * resp.sum(axis=1)
        lam = lam / lam.sum()
        us = u.sum(axis=1, keepdims=True)
        vs = v.sum(axis=1, keepdims=True)
        u = np.divide(u, us, out=np.array(th.words), where=us > 0)
        v = np.divide(v, vs, out=np.array(th.docs), where=vs > 0)
        state["theta"] = MultinomialMixtureParams(lam, u, v)
        return _plsa_loglik(gs, state["theta"])

    trace = _run(step, _plsa_loglik(gs, theta), cfg)
    th = state["theta"]
    words = np.zeros((k, n_full))
    docs = np.zeros((k, m_full))
    words[:, rows] = th.words
    docs[:, cols] = th.docs
    return MultinomialMixtureParams(th.weights, words, docs), trace
