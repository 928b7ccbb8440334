"""Performance grids and the three empirical axiom tests.

The three tests probe a score ``X`` on a finite grid of performances:

1. compatibility with the satisfaction: every performance supported on the
   ``S = 0`` face must score at most every performance supported on the
   ``S = 1`` face, and the two faces must bound every other point;
2. quasi-convexity from above: ``X(Q) <= max(X(P1), X(P2))`` for every
   convex combination ``Q`` of two grid points;
3. quasi-convexity from below: ``X(Q) >= min(X(P1), X(P2))``.

A failing test always carries a :class:`Counterexample` that can be replayed.
Pairs where either score value is undefined are skipped, as is every ``Q``
outside the domain: undefined performances are incomparable to everything.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from numba import njit

from .core import ABS_TOL, RandomVariable, Score
from .scores2c import SATISFACTION, TWO_CLASS

__all__ = [
    "DEFAULT_LAMBDAS",
    "DEFAULT_UNCONSTRAINED_RESOLUTION",
    "DEFAULT_FIXED_PRIOR_RESOLUTION",
    "DEFAULT_PAIR_POINTS",
    "ConstraintSet",
    "PerformanceGrid",
    "Counterexample",
    "TestVerdict",
    "make_grid",
    "test_satisfaction_axiom",
    "test_convex_upper",
    "test_convex_lower",
    "audit_grid",
    "audit_score",
    "pair_subsample",
]

DEFAULT_LAMBDAS = (0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99)
DEFAULT_UNCONSTRAINED_RESOLUTION = 32
DEFAULT_FIXED_PRIOR_RESOLUTION = 80
DEFAULT_PAIR_POINTS = 2000


@dataclass(frozen=True)
class ConstraintSet:
    """Either all two-class performances or those with a fixed positive prior."""

    prior: float | None = None

    def __post_init__(self):
        if self.prior is not None:
            prior = float(self.prior)
            if not 0.0 < prior < 1.0:
                raise ValueError(f"the positive prior must lie in (0, 1), got {prior}")
            object.__setattr__(self, "prior", prior)

    @classmethod
    def unconstrained(cls) -> ConstraintSet:
        return cls(None)

    @classmethod
    def fixed_prior(cls, prior: float) -> ConstraintSet:
        return cls(prior)

    @property
    def kind(self) -> str:
        return "unconstrained" if self.prior is None else "fixed_positive_prior"

    @property
    def label(self) -> str:
        return "unconstrained" if self.prior is None else f"prior={self.prior:g}"

    def contains(self, probs: np.ndarray, tol: float = ABS_TOL) -> np.ndarray:
        probs = np.atleast_2d(probs)
        if self.prior is None:
            return np.ones(probs.shape[0], dtype=bool)
        return np.abs(probs[:, 2] + probs[:, 3] - self.prior) <= tol


@dataclass(frozen=True, eq=False)
class PerformanceGrid:
    """Regularly spaced two-class performances; ``probs`` has one row per point."""

    constraint: ConstraintSet
    resolution: int
    probs: np.ndarray

    def __len__(self) -> int:
        return self.probs.shape[0]

    @property
    def points(self):
        from .core import Performance

        return [Performance(TWO_CLASS, row) for row in self.probs]

    def to_csv(self, target=None) -> str:
        """Write the grid as CSV (17 significant digits); returns the text."""
        buf = io.StringIO()
        buf.write(",".join(f"p_{label}" for label in TWO_CLASS.labels) + "\n")
        for row in self.probs:
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        text = buf.getvalue()
        if target is not None:
            if isinstance(target, (str, Path)):
                Path(target).write_text(text)
            else:
                target.write(text)
        return text


def _unconstrained_probs(n: int) -> np.ndarray:
    rows = []
    for i in range(n + 1):
        for j in range(n + 1 - i):
            for k in range(n + 1 - i - j):
                rows.append((i, j, k, n - i - j - k))
    return np.array(rows, dtype=np.float64) / n


def _fixed_prior_probs(prior: float, m: int) -> np.ndarray:
    neg = 1.0 - prior
    steps = np.arange(m + 1) / m
    u, v = np.meshgrid(steps, steps, indexing="ij")
    u, v = u.ravel(), v.ravel()
    return np.column_stack([neg * (1.0 - v), neg * v, prior * (1.0 - u), prior * u])


@lru_cache(maxsize=32)
def make_grid(constraint: ConstraintSet = ConstraintSet(), resolution: int | None = None) -> PerformanceGrid:
    """Build the grid for a constraint set.

    Unconstrained grids hold every ``(i, j, k, l) / n`` with ``i+j+k+l = n``.
    Fixed-prior grids hold ``(π₋(1-v), π₋v, π₊(1-u), π₊u)`` for ``u, v`` on
    ``{0, 1/m, ..., 1}``. Default resolutions are 32 and 80 (6545 and 6561
    points).
    """
    if resolution is None:
        resolution = (DEFAULT_UNCONSTRAINED_RESOLUTION if constraint.prior is None
                      else DEFAULT_FIXED_PRIOR_RESOLUTION)
    resolution = int(resolution)
    if resolution < 1:
        raise ValueError("resolution must be at least 1")
    if constraint.prior is None:
        probs = _unconstrained_probs(resolution)
    else:
        probs = _fixed_prior_probs(constraint.prior, resolution)
    probs = np.ascontiguousarray(probs)
    probs.setflags(write=False)
    return PerformanceGrid(constraint, resolution, probs)


def pair_subsample(grid: PerformanceGrid, max_points: int | None = DEFAULT_PAIR_POINTS,
                   seed: int = 0) -> np.ndarray:
    """Rows used for the pair tests.

    Unconstrained grids larger than ``max_points`` are reduced to a sorted,
    seeded random subset; fixed-prior grids are always used in full.
    """
    n = len(grid)
    if grid.constraint.prior is not None or max_points is None or n <= max_points:
        return np.asarray(grid.probs)
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(n, size=max_points, replace=False))
    return np.asarray(grid.probs)[keep]


# --- counterexamples and verdicts ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class Counterexample:
    """Inputs that falsified one test.

    For test 1, ``p1`` should score at most ``p2`` but scores higher. For
    tests 2 and 3, ``q = lam * p1 + (1 - lam) * p2`` escapes the range
    spanned by the scores of ``p1`` and ``p2``.
    """

    test: int
    p1: np.ndarray
    p2: np.ndarray
    x1: float
    x2: float
    lam: float | None = None
    q: np.ndarray | None = None
    xq: float | None = None

    @property
    def margin(self) -> float:
        """Size of the violation (positive for a genuine counterexample)."""
        if self.test == 1:
            return self.x1 - self.x2
        if self.test == 2:
            return self.xq - max(self.x1, self.x2)
        return min(self.x1, self.x2) - self.xq

    def replay(self, score: Score, tol: float = ABS_TOL) -> bool:
        """Re-evaluate the witness; true when the violation is reproduced."""
        rows = [self.p1, self.p2]
        if self.q is not None:
            q = self.lam * np.asarray(self.p1) + (1.0 - self.lam) * np.asarray(self.p2)
            rows.append(q)
        values, ok = score.evaluate(np.array(rows))
        if not ok.all():
            return False
        if self.test == 1:
            return bool(values[0] > values[1] + tol)
        if self.test == 2:
            return bool(values[2] > max(values[0], values[1]) + tol)
        return bool(values[2] < min(values[0], values[1]) - tol)

    def to_dict(self) -> dict:
        out = {"test": self.test, "p1": [float(v) for v in self.p1],
               "p2": [float(v) for v in self.p2], "x1": self.x1, "x2": self.x2}
        if self.q is not None:
            out.update(lam=self.lam, q=[float(v) for v in self.q], xq=self.xq)
        return out


@dataclass(frozen=True)
class TestVerdict:
    """Outcome of the three tests; a failed test has its witness in ``counterexamples``."""

    test1: bool
    test2: bool
    test3: bool
    counterexamples: tuple[Counterexample, ...] = ()

    __test__ = False  # not a pytest class

    @property
    def counterexample(self) -> Counterexample | None:
        return self.counterexamples[0] if self.counterexamples else None

    @property
    def pattern(self) -> str:
        return "".join("V" if t else "X" for t in (self.test1, self.test2, self.test3))

    def as_tuple(self) -> tuple[bool, bool, bool]:
        return (self.test1, self.test2, self.test3)


# --- test 1 ----------------------------------------------------------------------------


def _faces(probs: np.ndarray, satisfaction: RandomVariable) -> tuple[np.ndarray, np.ndarray]:
    s = satisfaction.values
    on_zero = (probs[:, s == 1.0] == 0.0).all(axis=1)
    on_one = (probs[:, s == 0.0] == 0.0).all(axis=1)
    return on_zero, on_one


def test_satisfaction_axiom(score: Score, grid: PerformanceGrid | np.ndarray,
                            satisfaction: RandomVariable = SATISFACTION,
                            tol: float = ABS_TOL) -> tuple[bool, Counterexample | None]:
    """Test 1: performances on the ``S=0`` face never beat those on the ``S=1`` face.

    Checks, over in-domain points, ``F0`` against ``F1``, ``F0`` against the
    whole grid and the whole grid against ``F1``. The witness pairs the
    highest-scoring lower-side point with the lowest-scoring upper-side one
    (first index on ties).
    """
    if not satisfaction.is_binary:
        raise ValueError("test 1 needs a binary satisfaction")
    probs = grid.probs if isinstance(grid, PerformanceGrid) else np.asarray(grid)
    values, ok = score.evaluate(probs)
    on_zero, on_one = _faces(probs, satisfaction)
    everything = np.ones_like(ok)
    for low, high in ((on_zero, on_one), (on_zero, everything), (everything, on_one)):
        lo_idx = np.flatnonzero(low & ok)
        hi_idx = np.flatnonzero(high & ok)
        if lo_idx.size == 0 or hi_idx.size == 0:
            continue
        i = lo_idx[np.argmax(values[lo_idx])]
        j = hi_idx[np.argmin(values[hi_idx])]
        if values[i] > values[j] + tol:
            return False, Counterexample(1, probs[i].copy(), probs[j].copy(),
                                         float(values[i]), float(values[j]))
    return True, None


# --- tests 2 and 3 -------------------------------------------------------------------


@njit  # not cached: the kernel argument makes the on-disk cache unreliable
def _convex_scan(kernel, params, probs, values, lambdas, want_upper, want_lower, tol):
    """First (i, j, lambda-index) violating each bound, in lexicographic order.

    Returns ``(i2, j2, l2, i3, j3, l3)`` with -1 where no violation was found.
    """
    n, k = probs.shape
    q = np.empty(k)
    hit = np.full(6, -1, dtype=np.int64)
    need_upper = want_upper
    need_lower = want_lower
    for i in range(n):
        xi = values[i]
        if math.isnan(xi):
            continue
        for j in range(i + 1, n):
            xj = values[j]
            if math.isnan(xj):
                continue
            hi = max(xi, xj)
            lo = min(xi, xj)
            for li in range(lambdas.shape[0]):
                lam = lambdas[li]
                for c in range(k):
                    q[c] = lam * probs[i, c] + (1.0 - lam) * probs[j, c]
                xq = kernel(q, params)
                if math.isnan(xq):
                    continue
                if need_upper and xq > hi + tol:
                    hit[0] = i
                    hit[1] = j
                    hit[2] = li
                    need_upper = False
                if need_lower and xq < lo - tol:
                    hit[3] = i
                    hit[4] = j
                    hit[5] = li
                    need_lower = False
                if not need_upper and not need_lower:
                    return hit
    return hit


def _convex_scan_numpy(score, probs, values, lambdas, want_upper, want_lower, tol):
    """Same search as :func:`_convex_scan` for scores without a kernel."""
    n, k = probs.shape
    hit = np.full(6, -1, dtype=np.int64)
    need_upper, need_lower = want_upper, want_lower
    nl = lambdas.shape[0]
    for i in range(n):
        if math.isnan(values[i]):
            continue
        js = np.arange(i + 1, n)
        js = js[~np.isnan(values[js])]
        if js.size == 0:
            continue
        lam = np.tile(lambdas, js.size)[:, None]
        rows = probs[np.repeat(js, nl)]
        q = lam * probs[i] + (1.0 - lam) * rows
        xq = score.raw(q)
        hi = np.maximum(values[i], values[np.repeat(js, nl)])
        lo = np.minimum(values[i], values[np.repeat(js, nl)])
        valid = ~np.isnan(xq)
        for flag, bad, slot in ((need_upper, valid & (xq > hi + tol), 0),
                                (need_lower, valid & (xq < lo - tol), 3)):
            if flag and bad.any():
                first = int(np.argmax(bad))
                hit[slot:slot + 3] = (i, js[first // nl], first % nl)
        need_upper = need_upper and hit[0] < 0
        need_lower = need_lower and hit[3] < 0
        if not need_upper and not need_lower:
            break
    return hit


def _run_convex(score: Score, probs: np.ndarray, lambdas, upper: bool, lower: bool,
                tol: float) -> tuple[Counterexample | None, Counterexample | None]:
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if lambdas.ndim != 1 or np.any((lambdas <= 0.0) | (lambdas >= 1.0)):
        raise ValueError("mixing weights must lie strictly between 0 and 1")
    values = score.raw(probs)
    if score.kernel is not None:
        hit = _convex_scan(score.kernel, score.params, probs, values, lambdas, upper, lower, tol)
    else:
        hit = _convex_scan_numpy(score, probs, values, lambdas, upper, lower, tol)
    found = []
    for test, (i, j, li) in ((2, hit[:3]), (3, hit[3:])):
        if i < 0:
            found.append(None)
            continue
        lam = float(lambdas[li])
        q = lam * probs[i] + (1.0 - lam) * probs[j]
        xq = float(score.raw(q[None, :])[0])
        found.append(Counterexample(test, probs[i].copy(), probs[j].copy(), float(values[i]),
                                    float(values[j]), lam, q, xq))
    return found[0], found[1]


def _pair_rows(grid, max_points, seed):
    if isinstance(grid, PerformanceGrid):
        return pair_subsample(grid, max_points, seed)
    return np.asarray(grid)


def test_convex_upper(score: Score, grid: PerformanceGrid | np.ndarray, lambdas=DEFAULT_LAMBDAS,
                      *, max_points: int | None = DEFAULT_PAIR_POINTS, seed: int = 0,
                      tol: float = ABS_TOL) -> tuple[bool, Counterexample | None]:
    """Test 2: no mixture scores above the better of its two endpoints."""
    witness, _ = _run_convex(score, _pair_rows(grid, max_points, seed), lambdas, True, False, tol)
    return witness is None, witness


def test_convex_lower(score: Score, grid: PerformanceGrid | np.ndarray, lambdas=DEFAULT_LAMBDAS,
                      *, max_points: int | None = DEFAULT_PAIR_POINTS, seed: int = 0,
                      tol: float = ABS_TOL) -> tuple[bool, Counterexample | None]:
    """Test 3: no mixture scores below the worse of its two endpoints."""
    _, witness = _run_convex(score, _pair_rows(grid, max_points, seed), lambdas, False, True, tol)
    return witness is None, witness


def audit_grid(score: Score, grid: PerformanceGrid | np.ndarray, lambdas=DEFAULT_LAMBDAS, *,
               max_points: int | None = DEFAULT_PAIR_POINTS, seed: int = 0,
               satisfaction: RandomVariable = SATISFACTION, tol: float = ABS_TOL) -> TestVerdict:
    """Run the three tests on a given grid (tests 2 and 3 share one pair scan)."""
    ok1, w1 = test_satisfaction_axiom(score, grid, satisfaction, tol)
    w2, w3 = _run_convex(score, _pair_rows(grid, max_points, seed), lambdas, True, True, tol)
    witnesses = tuple(w for w in (w1, w2, w3) if w is not None)
    return TestVerdict(ok1, w2 is None, w3 is None, witnesses)


def audit_score(score: Score, constraint: ConstraintSet = ConstraintSet(), *,
                resolution: int | None = None, lambdas=DEFAULT_LAMBDAS,
                max_points: int | None = DEFAULT_PAIR_POINTS, seed: int = 0) -> TestVerdict:
    """Audit a two-class score on the default grid of a constraint set."""
    return audit_grid(score, make_grid(constraint, resolution), lambdas,
                      max_points=max_points, seed=seed)


# keep pytest from collecting the public test_* functions when they are imported
for _fn in (test_satisfaction_axiom, test_convex_upper, test_convex_lower):
    _fn.__test__ = False
del _fn
