"""Discrete Bayesian inference, decision rules and Gaussian estimation.

Count tables are kept as integers so that derived probabilities can be
computed exactly with ``fractions.Fraction`` (``exact=True``) or as floats.
Ties in argmax/argmin are broken by the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (
    EmptyInputError,
    InvalidParameterError,
    ShapeError,
    SingularityError,
    ZeroMassError,
)
from .numerics import cholesky, solve_spd, sym_eig


@dataclass(frozen=True)
class JointTable:
    """Joint table over class labels (rows) and measurement values (columns).

    ``cells[j, i]`` holds the count or probability of ``(h_j, x_i)``.
    """

    x_values: tuple[str, ...]
    h_values: tuple[str, ...]
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.dtype == object:
            cells = cells.copy()
        elif np.issubdtype(cells.dtype, np.integer):
            cells = cells.astype(np.int64)
        else:
            cells = cells.astype(float)
        if cells.ndim != 2:
            raise ShapeError("joint table must be 2-D")
        if cells.shape != (len(self.h_values), len(self.x_values)):
            raise ShapeError(
                f"cells shape {cells.shape} does not match "
                f"{len(self.h_values)} h labels x {len(self.x_values)} x labels"
            )
        if cells.size == 0:
            raise EmptyInputError("joint table is empty")
        if any(c < 0 for c in cells.ravel()):
            raise InvalidParameterError("joint table cells must be nonnegative")
        object.__setattr__(self, "x_values", tuple(str(v) for v in self.x_values))
        object.__setattr__(self, "h_values", tuple(str(v) for v in self.h_values))
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_counts(cls, counts, x_values=None, h_values=None) -> "JointTable":
        counts = np.asarray(counts)
        s, k = counts.shape
        x_values = x_values or [f"x{i + 1}" for i in range(k)]
        h_values = h_values or [f"h{j + 1}" for j in range(s)]
        return cls(tuple(x_values), tuple(h_values), counts)

    @property
    def is_integer(self) -> bool:
        return np.issubdtype(self.cells.dtype, np.integer)

    def total(self):
        if self.is_integer:
            return int(self.cells.sum())
        return float(self.cells.sum())

    def x_index(self, label: str) -> int:
        try:
            return self.x_values.index(str(label))
        except ValueError:
            raise InvalidParameterError(f"unknown x value {label!r}") from None

    def h_index(self, label: str) -> int:
        try:
            return self.h_values.index(str(label))
        except ValueError:
            raise InvalidParameterError(f"unknown h value {label!r}") from None


def _cells(t: JointTable, exact: bool) -> np.ndarray:
    if exact:
        if not t.is_integer:
            raise InvalidParameterError("exact arithmetic needs an integer count table")
        return np.vectorize(Fraction, otypes=[object])(t.cells)
    return t.cells.astype(float)


def marginals(t: JointTable, exact: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Prior over h values and evidence over x values."""
    cells = _cells(t, exact)
    total = cells.sum()
    if total == 0:
        raise EmptyInputError("joint table has zero total mass")
    return cells.sum(axis=1) / total, cells.sum(axis=0) / total


def conditional(t: JointTable, given: str = "x", exact: bool = False) -> np.ndarray:
    """Conditional table.

    ``given="x"`` returns ``P(h | x)`` with shape (s, k), columns summing to 1.
    ``given="h"`` returns ``P(x | h)`` with shape (s, k), rows summing to 1.
    """
    cells = _cells(t, exact)
    if given == "x":
        mass = cells.sum(axis=0)
        for i, m in enumerate(mass):
            if m == 0:
                raise ZeroMassError(f"cannot condition on x value {t.x_values[i]!r}: zero mass")
        return cells / mass[None, :]
    if given == "h":
        mass = cells.sum(axis=1)
        for j, m in enumerate(mass):
            if m == 0:
                raise ZeroMassError(f"cannot condition on h value {t.h_values[j]!r}: zero mass")
        return cells / mass[:, None]
    raise InvalidParameterError(f"given must be 'x' or 'h', not {given!r}")


def _normalize(weights: Sequence, what: str):
    total = sum(weights)
    if total == 0:
        raise ZeroMassError(f"{what}: normalizer is zero")
    return [w / total for w in weights]


def posterior_bayes(likelihoods: Sequence, priors: Sequence):
    """``P(h_j | x) = P(x | h_j) P(h_j) / sum_i P(x | h_i) P(h_i)``.

    Works on floats or ``Fraction`` values; returns a numpy array (object
    dtype for fractions).
    """
    if len(likelihoods) != len(priors):
        raise ShapeError("likelihoods and priors differ in length")
    if any(l < 0 for l in likelihoods) or any(p < 0 for p in priors):
        raise InvalidParameterError("likelihoods and priors must be nonnegative")
    exact = all(isinstance(v, (int, Fraction)) for v in list(likelihoods) + list(priors))
    if not exact and abs(float(sum(priors)) - 1.0) > 1e-9:
        raise InvalidParameterError("priors must sum to 1")
    joint = [l * p for l, p in zip(likelihoods, priors)]
    post = _normalize(joint, "impossible evidence")
    return np.array(post, dtype=object if exact else float)


@dataclass(frozen=True)
class Decision:
    choice: int
    risks: np.ndarray


def zero_one_loss(s: int) -> np.ndarray:
    return 1.0 - np.eye(s)


def decide(posterior: Sequence[float], loss=None) -> Decision:
    """Bayes decision: minimise the expected risk ``sum_j l(h_i, h_j) P(h_j)``.

    With ``loss=None`` the 0/1 loss is used, which gives the MAP class.
    """
    post = np.asarray(posterior, dtype=float)
    if post.ndim != 1 or post.size == 0:
        raise ShapeError("posterior must be a nonempty vector")
    loss = zero_one_loss(post.size) if loss is None else np.asarray(loss, dtype=float)
    if loss.shape != (post.size, post.size):
        raise ShapeError(f"loss matrix must be {post.size}x{post.size}")
    risks = loss @ post
    if np.array_equal(loss, zero_one_loss(post.size)):
        # 0/1 risk is 1 - P(h_i); take the argmax directly so rounding in
        # 1 - p cannot merge distinct posteriors
        return Decision(int(np.argmax(post)), risks)
    # argmin returns the first minimiser, i.e. lowest index on ties
    return Decision(int(np.argmin(risks)), risks)


def coin_mle(sample: Sequence[int]) -> float:
    """Maximum-likelihood estimate of ``P(X = 0)`` from a binary sample."""
    x = np.asarray(sample)
    if x.size == 0:
        raise EmptyInputError("coin sample is empty")
    if not np.all((x == 0) | (x == 1)):
        raise InvalidParameterError("coin sample must contain only 0 and 1")
    return float(np.count_nonzero(x == 0)) / x.size


@dataclass(frozen=True)
class GaussianParams:
    mean: np.ndarray
    cov: np.ndarray
    mode: str = "full"
    singular: bool = False

    @property
    def variance(self) -> float:
        """Common variance of an isotropic model."""
        return float(self.cov[0, 0])


def gaussian_mle(points, mode: str = "full") -> GaussianParams:
    """Sample mean and maximum-likelihood covariance (divides by the count).

    ``mode="isotropic"`` returns ``sigma^2 I`` with
    ``sigma^2 = (1 / (k n)) sum_i ||x_i - mu||^2``. A full covariance that is
    not positive definite is returned with ``singular=True``.
    """
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] == 0:
        raise EmptyInputError("no points")
    k, n = x.shape
    mu = x.mean(axis=0)
    c = x - mu
    if mode == "isotropic":
        var = float(np.sum(c * c)) / (k * n)
        return GaussianParams(mu, var * np.eye(n), "isotropic", singular=var == 0.0)
    if mode != "full":
        raise InvalidParameterError(f"unknown covariance mode {mode!r}")
    cov = c.T @ c / k
    cov = 0.5 * (cov + cov.T)
    try:
        cholesky(cov)
        singular = False
    except SingularityError:
        singular = True
    return GaussianParams(mu, cov, "full", singular=singular)


def incremental_posterior(prior: Sequence, likelihoods: Sequence) -> np.ndarray:
    """One step of sequential Bayes: the previous posterior acts as the prior."""
    return posterior_bayes(likelihoods, prior)


def two_class_normal_boundary(g1: GaussianParams, g2: GaussianParams) -> tuple[np.ndarray, float]:
    """Optimal linear boundary between two normals with a shared covariance.

    Returns ``(w, offset)`` with decision value ``f(x) = w @ x - offset``;
    ``f > 0`` favours class 1 under equal priors.
    """
    e = np.asarray(g1.cov, dtype=float)
    if not np.allclose(e, g2.cov, rtol=1e-12, atol=1e-12):
        raise InvalidParameterError("the two classes must share one covariance")
    diff = np.asarray(g1.mean, float) - np.asarray(g2.mean, float)
    w = solve_spd(e, diff)
    offset = 0.5 * float((np.asarray(g1.mean, float) + np.asarray(g2.mean, float)) @ w)
    return w, offset


@dataclass(frozen=True)
class IndependentJoint:
    cells: np.ndarray
    shape: tuple[int, ...]
    independent_params: int
    full_params: int


def independent_joint(marginal_list: Sequence[Sequence[float]]) -> IndependentJoint:
    """Joint of independent variables as the outer product of their marginals.

    Also reports the free-parameter counts ``sum k_i - n`` (factorised) against
    ``prod k_i - 1`` (unrestricted).
    """
    margs = [np.asarray(m, dtype=float) for m in marginal_list]
    if not margs:
        raise EmptyInputError("no marginals")
    for m in margs:
        if m.ndim != 1 or m.size == 0:
            raise ShapeError("each marginal must be a nonempty vector")
        if abs(m.sum() - 1.0) > 1e-9 or np.any(m < 0):
            raise InvalidParameterError("each marginal must be a probability vector")
    joint = margs[0]
    for m in margs[1:]:
        joint = np.multiply.outer(joint, m)
    sizes = tuple(m.size for m in margs)
    return IndependentJoint(
        cells=joint.ravel(),
        shape=sizes,
        independent_params=sum(sizes) - len(sizes),
        full_params=int(np.prod(sizes)) - 1,
    )


def is_psd(a, slack: float = 1e-10) -> bool:
    return bool(sym_eig(a).values[-1] >= -slack)
