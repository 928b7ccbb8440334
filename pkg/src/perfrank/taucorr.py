"""Kendall's τ-b and the coarse-to-fine search for the most and least
consistent ranking score.

A two-class ranking score is parameterized, up to the per-face scaling that
leaves its order unchanged, by ``a = I(tp) / (I(tn) + I(tp))`` and
``b = I(fn) / (I(fp) + I(fn))``. The search evaluates τ between a score and
``R_I`` on an ``11 x 11`` lattice over a square in ``[0, 1]^2``, recenters a
square four times smaller on the best lattice point and repeats until the
side drops below ``1e-3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import ABS_TOL, Score
from .scores2c import SATISFACTION, CatalogEntry, Equivalence, Monotonicity, ab_to_importance, \
    catalog, importance_to_ab

__all__ = [
    "SearchConfig",
    "TauResult",
    "kendall_tau",
    "tau_counts",
    "tau_from_counts",
    "tau_of_importance",
    "optimize_tau",
]


# --- Kendall τ-b ---------------------------------------------------------------------


@njit(cache=True)
def _tied_pairs(v):
    """Number of tied pairs in a sorted array."""
    total = 0
    run = 1
    for t in range(1, v.shape[0]):
        if v[t] == v[t - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    return total + run * (run - 1) // 2


_BLOCK = 16


@njit(cache=True)
def _inversions(y):
    """Sort ``y`` in place and return its inversion count.

    Insertion sort on short blocks (each shift is one inversion), then
    bottom-up merging with branch-free inner steps.
    """
    n = y.shape[0]
    swaps = 0
    for lo in range(0, n, _BLOCK):
        hi = min(lo + _BLOCK, n)
        for t in range(lo + 1, hi):
            v = y[t]
            u = t
            while u > lo and y[u - 1] > v:
                y[u] = y[u - 1]
                u -= 1
            swaps += t - u
            y[u] = v
    src = y
    dst = np.empty_like(y)
    width = _BLOCK
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                right = src[j] < src[i]
                dst[k] = src[j] if right else src[i]
                swaps += (mid - i) * right
                j += right
                i += 1 - right
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
        src, dst = dst, src
        width *= 2
    if src is not y:
        y[:] = src
    return swaps


@njit(cache=True)
def _counts_sorted_x(xs, ys):
    """Knight's pair counting for ``xs`` sorted ascending; ``ys`` is overwritten.

    Returns ``(C - D, n0 - n1, n0 - n2)`` as integers, where ``n1`` and ``n2``
    count pairs tied in ``x`` and in ``y``.
    """
    n = xs.shape[0]
    n0 = n * (n - 1) // 2
    n1 = 0
    n3 = 0
    start = 0
    for t in range(1, n + 1):
        if t == n or xs[t] != xs[start]:
            g = t - start
            if g > 1:
                n1 += g * (g - 1) // 2
                if g <= 32:
                    for v_idx in range(start + 1, t):
                        v = ys[v_idx]
                        u = v_idx
                        while u > start and ys[u - 1] > v:
                            ys[u] = ys[u - 1]
                            u -= 1
                        ys[u] = v
                else:
                    ys[start:t] = np.sort(ys[start:t])
                run = 1
                for u in range(start + 1, t):
                    if ys[u] == ys[u - 1]:
                        run += 1
                    else:
                        n3 += run * (run - 1) // 2
                        run = 1
                n3 += run * (run - 1) // 2
            start = t
    swaps = _inversions(ys)
    n2 = _tied_pairs(ys)
    return n0 - n1 - n2 + n3 - 2 * swaps, n0 - n1, n0 - n2


@njit(cache=True)
def _tau_counts(x, y):
    order = np.argsort(x, kind="mergesort")
    return _counts_sorted_x(x[order], y[order])


def tau_counts(xs, ys) -> tuple[int, int, int]:
    """Integer ingredients ``(C - D, n0 - n1, n0 - n2)`` of τ-b."""
    x = np.ascontiguousarray(xs, dtype=np.float64)
    y = np.ascontiguousarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"kendall_tau needs two 1-D sequences of equal length, got {x.shape} and {y.shape}")
    if np.isnan(x).any() or np.isnan(y).any():
        raise ValueError("kendall_tau does not accept NaN")
    if x.shape[0] < 2:
        return 0, 0, 0
    num, a, b = _tau_counts(x, y)
    return int(num), int(a), int(b)


def tau_from_counts(num: int, untied_x: int, untied_y: int) -> float | None:
    """τ-b from its integer counts; ``None`` when either side has no untied pair."""
    if untied_x == 0 or untied_y == 0:
        return None
    tau = num / math.sqrt(float(untied_x) * float(untied_y))
    return min(1.0, max(-1.0, tau))


def kendall_tau(xs, ys) -> float | None:
    """Tie-corrected Kendall rank correlation τ-b.

    Returns ``None`` when the statistic is undefined, which happens when one
    of the sequences is constant (or shorter than 2).

    >>> kendall_tau([1, 2, 3, 4], [1, 3, 2, 4])
    0.6666666666666666
    """
    return tau_from_counts(*tau_counts(xs, ys))


# --- τ between a score and R_I ---------------------------------------------------------


@njit(cache=True)
def _tau_against_ab(xs, probs, a, b):
    """τ-b counts between presorted score values ``xs`` and ``R_I`` of ``(a, b)``."""
    n = probs.shape[0]
    xv = np.empty(n)
    rv = np.empty(n)
    m = 0
    for t in range(n):
        # same operation order as the ranking-score kernel, so R_I matches itself bitwise
        w0 = (1.0 - a) * probs[t, 0]
        w3 = a * probs[t, 3]
        den = w0 + (1.0 - b) * probs[t, 1] + b * probs[t, 2] + w3
        num = w0 + w3
        if den == 0.0:
            continue
        xv[m] = xs[t]
        rv[m] = num / den
        m += 1
    if m < 2:
        return 0, 0, 0
    return _counts_sorted_x(xv[:m], rv[:m])


class _Prepared:
    """In-domain score values on a grid, sorted once per search."""

    def __init__(self, score: Score, grid):
        if tuple(score.space.labels) != tuple(SATISFACTION.space.labels):
            raise ValueError("τ optimization is defined for two-class scores")
        probs = np.ascontiguousarray(_grid_probs(grid), dtype=np.float64)
        self.values, self.ok = score.evaluate(probs)
        keep = np.flatnonzero(self.ok)
        order = keep[np.argsort(self.values[keep], kind="stable")]
        self.sorted_values = np.ascontiguousarray(self.values[order])
        self.sorted_probs = np.ascontiguousarray(probs[order])

    def tau(self, a: float, b: float) -> float | None:
        counts = _tau_against_ab(self.sorted_values, self.sorted_probs, float(a), float(b))
        return tau_from_counts(*counts)


def _grid_probs(grid) -> np.ndarray:
    return grid.probs if hasattr(grid, "probs") else np.asarray(grid)


def tau_of_importance(score: Score, grid, a: float, b: float) -> float | None:
    """τ-b between ``score`` and the ranking score of ``(a, b)`` on shared-domain grid points.

    Returns ``None`` when fewer than two points lie in both domains or when
    either side is constant there.
    """
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise ValueError(f"(a, b) = ({a}, {b}) outside the unit square")
    return _Prepared(score, grid).tau(a, b)


# --- optimizer -----------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchConfig:
    """Hyperparameters of the coarse-to-fine search."""

    points_per_side: int = 11
    shrink: float = 0.25
    min_side: float = 1e-3


@dataclass(frozen=True)
class TauResult:
    """Optimal τ and the ``(a, b)`` that reaches it.

    ``analytic`` marks results obtained from a known monotone link with a
    ranking score (exactly ±1) or from a constant score (0).
    """

    tau: float
    a: float
    b: float
    objective: str
    analytic: bool = False
    evaluations: int = 0
    importance: tuple[float, float, float, float] = field(default=(0.0, 0.0, 0.0, 0.0))

    def __post_init__(self):
        if self.objective not in ("min", "max"):
            raise ValueError(f"objective must be 'min' or 'max', got {self.objective!r}")
        if not -1.0 <= self.tau <= 1.0:
            raise ValueError(f"τ = {self.tau} outside [-1, 1]")
        object.__setattr__(self, "importance", tuple(ab_to_importance(self.a, self.b).values.tolist()))


def _catalog_equivalence(score: Score) -> Equivalence | None:
    for entry in catalog():
        if entry.score is score:
            return entry.equivalence
    return None


def _analytic(score, equivalence, prior, objective, values, ok) -> TauResult | None:
    if ok.sum() >= 2:
        spread = np.ptp(values[ok])
        if spread <= ABS_TOL:
            return TauResult(0.0, 0.5, 0.5, objective, analytic=True)
    if equivalence is None or not equivalence.applies(prior):
        return None
    wanted = 1 if objective == "max" else -1
    if equivalence.sign != wanted:
        return None
    a, b = importance_to_ab(equivalence.importance(prior))
    return TauResult(float(wanted), a, b, objective, analytic=True)


def optimize_tau(score: Score, grid, objective: str = "max", *,
                 equivalence: Equivalence | CatalogEntry | None = None, analytic: bool = True,
                 config: SearchConfig = SearchConfig()) -> TauResult:
    """Find ``(a, b)`` maximizing (or minimizing) τ between ``score`` and ``R_I``.

    When ``analytic`` is true, a constant score reports τ = 0, and a score
    with a known monotone link to a ranking score (looked up in the catalog
    when ``equivalence`` is not given) reports ±1 at that importance whenever
    the link applies to the grid's constraint and points in the requested
    direction.
    """
    if objective not in ("min", "max"):
        raise ValueError(f"objective must be 'min' or 'max', got {objective!r}")
    prep = _Prepared(score, grid)
    if isinstance(equivalence, CatalogEntry):
        equivalence = equivalence.equivalence
    if analytic:
        if equivalence is None:
            equivalence = _catalog_equivalence(score)
        prior = getattr(getattr(grid, "constraint", None), "prior", None)
        shortcut = _analytic(score, equivalence, prior, objective, prep.values, prep.ok)
        if shortcut is not None:
            return shortcut

    sign = 1.0 if objective == "max" else -1.0
    k = config.points_per_side
    best = None  # (signed tau, a, b)
    lo_a = lo_b = 0.0
    side = 1.0
    evaluations = 0
    while side >= config.min_side:
        level_best = None
        for ia in range(k):
            a = lo_a + side * ia / (k - 1)
            for ib in range(k):
                b = lo_b + side * ib / (k - 1)
                tau = prep.tau(a, b)
                evaluations += 1
                if tau is None:
                    continue
                if level_best is None or sign * tau > level_best[0]:
                    level_best = (sign * tau, a, b)
        if level_best is None:
            break
        if best is None or level_best[0] > best[0]:
            best = level_best
        side *= config.shrink
        lo_a = min(max(level_best[1] - side / 2, 0.0), 1.0 - side)
        lo_b = min(max(level_best[2] - side / 2, 0.0), 1.0 - side)
    if best is None:
        raise ValueError(f"τ is undefined everywhere for {score.name} on this grid")
    return TauResult(sign * best[0], best[1], best[2], objective, evaluations=evaluations)
