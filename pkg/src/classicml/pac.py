"""PAC / VC laboratory.

Sample-complexity calculators, the growth function and VC dimension by
exhaustive enumeration, the tightest-fit rectangle learner, and a Monte-Carlo
check of Hoeffding's inequality. Dichotomies are enumerated combinatorially
(sorted sweeps), never by sampling parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError
from .numerics import child_rng, make_rng

GROWTH_LIMIT = 22


# -- Phi_d(m) ---------------------------------------------------------------


@lru_cache(maxsize=None)
def phi_recurrence(d: int, m: int) -> int:
    """``Phi_d(m) = Phi_d(m-1) + Phi_{d-1}(m-1)`` with ``Phi_d(0) = Phi_0(m) = 1``."""
    if d == 0 or m == 0:
        return 1
    return phi_recurrence(d, m - 1) + phi_recurrence(d - 1, m - 1)


def phi_binomial(d: int, m: int) -> int:
    """``sum_{i=0}^{d} C(m, i)``."""
    return sum(math.comb(m, i) for i in range(d + 1))


def phi(d: int, m: int) -> int:
    """Sauer bound ``Phi_d(m)``, computed both ways and cross-checked."""
    if d < 0 or m < 0:
        raise InvalidParameterError("d and m must be nonnegative")
    a = phi_binomial(d, m)
    b = phi_recurrence(d, m)
    if a != b:
        raise ArithmeticError(f"Phi_{d}({m}): recurrence {b} != binomial sum {a}")
    return a


# -- concept classes --------------------------------------------------------


class ConceptClass:
    """A concept class known through the dichotomies it induces on point sets."""

    name = "abstract"

    def dichotomies(self, points) -> set[tuple[int, ...]]:
        raise NotImplementedError

    def random_points(self, m: int, rng: np.random.Generator):
        raise NotImplementedError


def _group_suffixes(values: np.ndarray) -> set[tuple[int, ...]]:
    """Labelings ``1[v >= c]`` over all thresholds ``c``."""
    out = set()
    for c in np.unique(values):
        out.add(tuple(int(v) for v in values >= c))
    out.add(tuple(0 for _ in values))
    return out


class Intervals(ConceptClass):
    """Closed intervals ``[a, b]`` on the line; inside is labelled 1."""

    name = "intervals"

    def contains(self, x: float, params: tuple[float, float]) -> int:
        a, b = params
        return int(a <= x <= b)

    def dichotomies(self, points):
        x = np.asarray(points, dtype=float).ravel()
        vals = np.unique(x)
        out = {tuple(0 for _ in x)}
        for i in range(vals.size):
            for j in range(i, vals.size):
                out.add(tuple(int(v) for v in (x >= vals[i]) & (x <= vals[j])))
        return out

    def random_points(self, m, rng):
        return rng.random(m)


class Rectangles(ConceptClass):
    """Axis-aligned closed rectangles in the plane; inside is labelled 1."""

    name = "rectangles"

    def contains(self, p, params) -> int:
        x_lo, x_hi, y_lo, y_hi = params
        return int(x_lo <= p[0] <= x_hi and y_lo <= p[1] <= y_hi)

    def dichotomies(self, points):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        n = p.shape[0]

        def spans(coord):
            vals = np.unique(coord)
            lo, hi = np.triu_indices(vals.size)
            return (coord[None, :] >= vals[lo][:, None]) & (coord[None, :] <= vals[hi][:, None])

        sx, sy = spans(p[:, 0]), spans(p[:, 1])
        inside = (sx[:, None, :] & sy[None, :, :]).reshape(-1, n)
        weights = 1 << np.arange(n, dtype=np.int64)
        codes = set((inside.astype(np.int64) @ weights).tolist())
        codes.add(0)
        return {tuple((c >> i) & 1 for i in range(n)) for c in codes}

    def random_points(self, m, rng):
        return rng.random((m, 2))


class HalfPlanes(ConceptClass):
    """Closed half-planes ``{x : w @ x >= c}``; inside is labelled 1."""

    name = "halfplanes"

    def contains(self, p, params) -> int:
        w1, w2, c = params
        return int(w1 * p[0] + w2 * p[1] >= c)

    def dichotomies(self, points):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        n = p.shape[0]
        # projection order changes only at directions orthogonal to a
        # difference of two points; one direction per open arc suffices
        angles = []
        for i in range(n):
            for j in range(i + 1, n):
                d = p[j] - p[i]
                if np.any(d != 0):
                    base = math.atan2(d[1], d[0]) + math.pi / 2
                    angles.extend([base % (2 * math.pi), (base + math.pi) % (2 * math.pi)])
        if not angles:
            dirs = [0.0, math.pi]
        else:
            a = np.unique(np.asarray(angles))
            nxt = np.append(a[1:], a[0] + 2 * math.pi)
            dirs = list((a + nxt) / 2)
        out = set()
        for t in dirs:
            proj = p @ np.array([math.cos(t), math.sin(t)])
            out |= _group_suffixes(proj)
        out.add(tuple(1 for _ in range(n)))
        return out

    def random_points(self, m, rng):
        return rng.random((m, 2))


class FiniteClass(ConceptClass):
    """A finite class given as a 0/1 table: one row per concept, one column per
    universe point. Point sets are lists of column indices."""

    name = "finite"

    def __init__(self, table, point_names: Sequence[str] | None = None):
        self.table = np.asarray(table, dtype=int)
        if self.table.ndim != 2:
            raise InvalidParameterError("concept table must be 2-D")
        self.point_names = list(point_names) if point_names else [f"x{i + 1}" for i in range(self.table.shape[1])]

    @property
    def size(self) -> int:
        return len({tuple(r) for r in self.table.tolist()})

    def contains(self, point: int, concept: int) -> int:
        return int(self.table[concept, point])

    def dichotomies(self, points):
        idx = [int(i) for i in np.asarray(points).ravel()]
        return {tuple(row) for row in self.table[:, idx].tolist()}

    def random_points(self, m, rng):
        return rng.choice(self.table.shape[1], size=m, replace=False)


CLASSES = {"intervals": Intervals, "rectangles": Rectangles, "halfplanes": HalfPlanes}


def example_finite_class() -> FiniteClass:
    """Four concepts over three points: 111, 011, 100, 000."""
    return FiniteClass([[1, 1, 1], [0, 1, 1], [1, 0, 0], [0, 0, 0]], ["x1", "x2", "x3"])


def growth_count(cls: ConceptClass, points) -> int:
    """Number of distinct dichotomies the class induces on ``points``."""
    n = len(points)
    if n > GROWTH_LIMIT:
        raise InvalidParameterError(f"growth enumeration limited to {GROWTH_LIMIT} points, got {n}")
    return len(cls.dichotomies(points))


def is_shattered(cls: ConceptClass, points) -> bool:
    return growth_count(cls, points) == 2 ** len(points)


@dataclass(frozen=True)
class VcResult:
    dimension: int
    witness: list


def vcdim_bruteforce(cls: ConceptClass, universe, d_max: int = 6) -> VcResult:
    """Largest ``d <= d_max`` such that some ``d``-subset of ``universe`` is shattered.

    Sizes are tried in increasing order and the search stops at the first
    size with no shattered subset (subsets of shattered sets are shattered).
    """
    pts = [p.tolist() if hasattr(p, "tolist") else p for p in universe]
    best = VcResult(0, [])
    for d in range(1, min(d_max, len(pts)) + 1):
        found = None
        for subset in combinations(range(len(pts)), d):
            cand = [pts[i] for i in subset]
            if is_shattered(cls, cand):
                found = cand
                break
        if found is None:
            break
        best = VcResult(d, found)
    return best


def cross_and_grid() -> list[tuple[float, float]]:
    """Diamond of four points around the origin, plus a 3x3 grid."""
    cross = [(0.0, 2.0), (2.0, 0.0), (0.0, -2.0), (-2.0, 0.0)]
    grid = [(float(i), float(j)) for i in (-1, 0, 1) for j in (-1, 0, 1)]
    return cross + grid


def triangle_and_interior() -> list[tuple[float, float]]:
    return [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0), (1.0, 1.0), (1.5, 0.5), (0.5, 2.0)]


# -- bounds -----------------------------------------------------------------

BOUND_KINDS = ("rectangle", "finite-realizable", "finite-unrealizable", "vc-realizable", "margin-vc")


@dataclass
class BoundQuery:
    eps: float | None = None
    delta: float | None = None
    class_size: int | None = None
    vc_dim: int | None = None
    radius: float | None = None
    margin: float | None = None
    dim: int | None = None
    c0: float = 8.0

    def _require(self, kind: str, *names: str):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise InvalidParameterError(f"bound kind {kind!r} needs {', '.join(missing)}")
        for n in ("eps", "delta"):
            if n in names and not 0 < getattr(self, n) < 1:
                raise InvalidParameterError(f"{n} must lie strictly inside (0, 1)")


def _ceil(x: float) -> int:
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def bound_value(query: BoundQuery, kind: str) -> float:
    """The closed-form bound before rounding up."""
    q = query
    if kind == "rectangle":
        q._require(kind, "eps", "delta")
        return 4.0 / q.eps * math.log(4.0 / q.delta)
    if kind == "finite-realizable":
        q._require(kind, "eps", "delta", "class_size")
        return (math.log(q.class_size) + math.log(1.0 / q.delta)) / q.eps
    if kind == "finite-unrealizable":
        q._require(kind, "eps", "delta", "class_size")
        return 2.0 / q.eps**2 * (math.log(2) + math.log(q.class_size) + math.log(1.0 / q.delta))
    if kind == "vc-realizable":
        q._require(kind, "eps", "delta", "vc_dim")
        return q.c0 * (math.log(1.0 / q.delta) / q.eps + q.vc_dim / q.eps * math.log(1.0 / q.eps))
    if kind == "margin-vc":
        q._require(kind, "radius", "margin", "dim")
        if not q.margin > 0:
            raise InvalidParameterError("margin must be > 0")
        return min(q.radius**2 / q.margin**2, q.dim)
    raise InvalidParameterError(f"unknown bound kind {kind!r}; choose from {BOUND_KINDS}")


def sample_bound(query: BoundQuery, kind: str) -> int:
    """Rounded-up bound. ``margin-vc`` returns the VC dimension
    ``ceil(min(R^2 / gamma^2, n)) + 1`` rather than a sample size."""
    v = bound_value(query, kind)
    if kind == "margin-vc":
        return _ceil(v) + 1
    return _ceil(v)


# -- rectangle learning -----------------------------------------------------


@dataclass(frozen=True)
class RectangleInstance:
    x_lo: float = 0.1
    x_hi: float = 0.9
    y_lo: float = 0.1
    y_hi: float = 0.9

    def __post_init__(self):
        if not (0 <= self.x_lo < self.x_hi <= 1 and 0 <= self.y_lo < self.y_hi <= 1):
            raise InvalidParameterError("rectangle must satisfy 0 <= lo < hi <= 1 on both axes")

    @property
    def area(self) -> float:
        return (self.x_hi - self.x_lo) * (self.y_hi - self.y_lo)

    def label(self, pts: np.ndarray) -> np.ndarray:
        return (
            (pts[:, 0] >= self.x_lo) & (pts[:, 0] <= self.x_hi) & (pts[:, 1] >= self.y_lo) & (pts[:, 1] <= self.y_hi)
        )


def tightest_fit(pts: np.ndarray, labels: np.ndarray):
    """Smallest axis-aligned rectangle containing the positives, or None."""
    pos = pts[labels]
    if pos.shape[0] == 0:
        return None
    return (float(pos[:, 0].min()), float(pos[:, 0].max()), float(pos[:, 1].min()), float(pos[:, 1].max()))


def _strips_hit(inst: RectangleInstance, pts: np.ndarray, eps: float) -> bool:
    """Whether the sample hits each of the four edge strips of weight eps/4."""
    w = inst.x_hi - inst.x_lo
    h = inst.y_hi - inst.y_lo
    dx = min(eps / 4 / h, w)
    dy = min(eps / 4 / w, h)
    inside = inst.label(pts)
    x, y = pts[:, 0], pts[:, 1]
    strips = [
        x <= inst.x_lo + dx,
        x >= inst.x_hi - dx,
        y <= inst.y_lo + dy,
        y >= inst.y_hi - dy,
    ]
    return all(bool(np.any(inside & s)) for s in strips)


@dataclass
class RectangleReport:
    failure_rate: float
    errors: np.ndarray
    contained: bool
    net_rate: float
    trials: int
    m: int
    eps: float
    delta: float
    bound: int = field(default=0)


def rectangle_experiment(
    instance: RectangleInstance,
    eps: float,
    delta: float,
    m: int,
    trials: int,
    seed: int = 0,
) -> RectangleReport:
    """Tightest-fit learner on uniform samples from the unit square.

    Each trial draws ``m`` points, labels them by the target, fits the
    tightest rectangle around the positives and records the exact error
    ``area(R) - area(R')``. Trial ``t`` uses the stream ``seed XOR t``.
    """
    if m < 0 or trials < 1:
        raise InvalidParameterError("need m >= 0 and trials >= 1")
    errors = np.empty(trials)
    contained = True
    hits = 0
    for t in range(trials):
        rng = child_rng(seed, t)
        pts = rng.random((m, 2))
        fit = tightest_fit(pts, instance.label(pts))
        if fit is None:
            fit_area = 0.0
        else:
            fx_lo, fx_hi, fy_lo, fy_hi = fit
            contained &= (
                fx_lo >= instance.x_lo and fx_hi <= instance.x_hi and fy_lo >= instance.y_lo and fy_hi <= instance.y_hi
            )
            fit_area = (fx_hi - fx_lo) * (fy_hi - fy_lo)
        errors[t] = instance.area - fit_area
        hits += _strips_hit(instance, pts, eps)
    failures = int(np.count_nonzero(errors > eps))
    bound = sample_bound(BoundQuery(eps=eps, delta=delta), "rectangle")
    return RectangleReport(failures / trials, errors, bool(contained), hits / trials, trials, m, eps, delta, bound)


# -- Hoeffding --------------------------------------------------------------


@dataclass(frozen=True)
class HoeffdingReport:
    rate: float
    bound: float
    std_error: float
    ok: bool


def hoeffding_check(true_p: float, m: int, trials: int, eps: float, seed: int = 0) -> HoeffdingReport:
    """Empirical ``P(|mean - p| >= eps)`` against ``2 exp(-2 eps^2 m)``.

    ``ok`` is true when the rate is within the bound plus three binomial
    standard errors.
    """
    if not 0 <= true_p <= 1:
        raise InvalidParameterError("true_p must lie in [0, 1]")
    if m < 1 or trials < 1 or not eps > 0:
        raise InvalidParameterError("need m >= 1, trials >= 1, eps > 0")
    rng = make_rng(seed)
    k = rng.binomial(m, true_p, size=trials)
    # compare in count units to avoid rounding at the boundary
    exceed = np.abs(k - true_p * m) >= eps * m - 1e-9
    rate = float(np.count_nonzero(exceed)) / trials
    bound = 2.0 * math.exp(-2.0 * eps**2 * m)
    b = min(bound, 1.0)
    se = math.sqrt(b * (1 - b) / trials)
    return HoeffdingReport(rate, bound, se, rate <= bound + 3 * se)


# -- Sauer ------------------------------------------------------------------


@dataclass(frozen=True)
class SauerRow:
    m: int
    max_growth: int
    phi: int
    poly_cap: float | None
    holds: bool


def sauer_check(cls: ConceptClass, d: int, m_range, samples: int = 20, seed: int = 0) -> list[SauerRow]:
    """Compare the largest observed growth count with ``Phi_d(m)`` and, for
    ``m > d``, ``Phi_d(m)`` with ``(e m / d)^d``."""
    rows = []
    for m in m_range:
        best = 0
        for s in range(samples):
            pts = cls.random_points(m, child_rng(seed, m * 1000 + s))
            best = max(best, growth_count(cls, pts))
        p = phi(d, m)
        cap = (math.e * m / d) ** d if m > d and d > 0 else None
        holds = best <= p and (cap is None or p <= cap)
        rows.append(SauerRow(m, best, p, cap, holds))
    return rows
