"""Randomized numerical checks of the algebraic properties of ranking scores.

Each check draws seeded random instances (sample spaces of 2 to 8 outcomes,
importances with occasional zeros, performances with occasional empty
outcomes), evaluates both sides of a property through the library's own
scores and reports the largest deviation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ABS_TOL,
    Importance,
    Performance,
    RandomVariable,
    SampleSpace,
    expected_value_score,
    filter_performance,
    random_performances,
    ranking_score,
)

__all__ = ["PropertyCheck", "ALL_CHECKS", "run_all"]


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    instances: int
    worst: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.instances > 0 and self.worst <= self.tolerance


def _space(rng, binary=False) -> SampleSpace:
    k = int(rng.integers(2, 9))
    return SampleSpace(tuple(f"w{i}" for i in range(k)))


def _satisfaction(space, rng, binary=False) -> RandomVariable:
    if binary:
        values = rng.integers(0, 2, space.size).astype(float)
        values[rng.integers(space.size)] = 0.0
        values[(rng.integers(space.size - 1) + 1 + np.flatnonzero(values == 0)[0]) % space.size] = 1.0
        return RandomVariable(space, values, "S")
    return RandomVariable(space, rng.uniform(-1.0, 1.0, space.size), "S")


def _importance(space, rng, zeros=0.25) -> Importance:
    values = rng.exponential(1.0, space.size) * (rng.random(space.size) >= zeros)
    if not values.any():
        values[rng.integers(space.size)] = 1.0
    return Importance(space, values)


def _performance(space, rng) -> Performance:
    return Performance(space, random_performances(space, 1, rng, sparsity=0.2)[0])


def check_decomposition(rng, n=1000) -> PropertyCheck:
    """Filtering then taking the expected satisfaction gives the ranking score."""
    worst, count = 0.0, 0
    while count < n:
        space = _space(rng)
        s, i, p = _satisfaction(space, rng), _importance(space, rng), _performance(space, rng)
        r = ranking_score(i, s)(p)
        if not isinstance(r, float):
            continue
        filtered = filter_performance(i, p)
        worst = max(worst, abs(expected_value_score(s)(filtered) - r), abs(filtered.probs.sum() - 1.0))
        count += 1
    return PropertyCheck("1: R_I = E[S] after filtering", count, worst, ABS_TOL)


def check_affine_satisfaction(rng, n=1000) -> PropertyCheck:
    """An affine change of satisfaction maps ranking scores the same way and keeps their order."""
    worst, count, order_breaks = 0.0, 0, 0
    while count < n:
        space = _space(rng)
        s, i = _satisfaction(space, rng), _importance(space, rng)
        alpha, beta = rng.uniform(0.1, 3.0) * rng.choice([-1, 1]), rng.uniform(-3.0, 3.0)
        probs = random_performances(space, 20, rng, sparsity=0.2)
        r, ok = ranking_score(i, s).evaluate(probs)
        r2, ok2 = ranking_score(i, s.affine(alpha, beta)).evaluate(probs)
        if not ok.any():
            continue
        worst = max(worst, float(np.max(np.abs(r2[ok] - (alpha * r[ok] + beta)))))
        if alpha > 0 and not np.array_equal(np.argsort(r[ok], kind="stable"), np.argsort(r2[ok], kind="stable")):
            gaps = np.diff(np.sort(r[ok]))
            order_breaks += int(gaps.size == 0 or gaps.min() > 1e-9)
        count += 1
    return PropertyCheck("2: affine satisfaction", count, worst if order_breaks == 0 else np.inf, ABS_TOL)


def check_scale_invariance(rng, n=1000) -> PropertyCheck:
    worst, count = 0.0, 0
    while count < n:
        space = _space(rng)
        s, i = _satisfaction(space, rng), _importance(space, rng)
        k = float(np.exp(rng.uniform(-7.0, 7.0)))
        probs = random_performances(space, 10, rng, sparsity=0.2)
        r, ok = ranking_score(i, s).evaluate(probs)
        r2, ok2 = ranking_score(i.scaled(k), s).evaluate(probs)
        if not ok.any():
            continue
        if not np.array_equal(ok, ok2):
            worst = np.inf
        worst = max(worst, float(np.max(np.abs(r[ok] - r2[ok]))))
        count += 1
    return PropertyCheck("3: scale invariance", count, worst, ABS_TOL)


def check_face_scaling(rng, n=1000) -> PropertyCheck:
    """Rescaling the importance separately on each satisfaction face keeps every pairwise order.

    Pairs whose scores differ by less than ``1e-12`` are treated as ties on
    both sides; any sign disagreement beyond that counts as a failure.
    """
    failures, count = 0, 0
    while count < n:
        space = _space(rng)
        s, i = _satisfaction(space, rng, binary=True), _importance(space, rng)
        a0, a1 = np.exp(rng.uniform(-4.0, 4.0, 2))
        scaled = Importance(space, i.values * np.where(s.values == 1.0, a1, a0))
        probs = random_performances(space, 12, rng, sparsity=0.2)
        r, ok = ranking_score(i, s).evaluate(probs)
        r2, ok2 = ranking_score(scaled, s).evaluate(probs)
        if ok.sum() < 2:
            continue
        d = r[ok][:, None] - r[ok][None, :]
        d2 = r2[ok][:, None] - r2[ok][None, :]
        sign = np.where(np.abs(d) <= ABS_TOL, 0, np.sign(d))
        sign2 = np.where(np.abs(d2) <= ABS_TOL, 0, np.sign(d2))
        failures += int(not np.array_equal(ok, ok2)) + int(np.any((sign * sign2 < 0)))
        count += 1
    return PropertyCheck("4: per-face scaling keeps the order", count, float(failures), 0.0)


def _mean_check(rng, n, fixed_face: float, name: str) -> PropertyCheck:
    worst, count = 0.0, 0
    while count < n:
        space = _space(rng)
        s = _satisfaction(space, rng, binary=True)
        i1, i2 = _importance(space, rng, zeros=0.1), _importance(space, rng, zeros=0.1)
        face = s.values == fixed_face
        v2 = np.where(face, i1.values, i2.values)
        if not v2.any():
            continue
        i2 = Importance(space, v2)
        mean = Importance(space, 0.5 * (i1.values + i2.values))
        p = _performance(space, rng)
        r, r1, r2 = (ranking_score(i, s)(p) for i in (mean, i1, i2))
        if not all(isinstance(x, float) for x in (r, r1, r2)):
            continue
        f = (lambda x: 1.0 / x) if fixed_face == 1.0 else (lambda x: 1.0 / (1.0 - x))
        if (fixed_face == 1.0 and min(r, r1, r2) <= 0.0) or (fixed_face == 0.0 and max(r, r1, r2) >= 1.0):
            continue
        lhs, rhs = f(r), 0.5 * (f(r1) + f(r2))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
        count += 1
    return PropertyCheck(name, count, worst, 1e-9)


def check_harmonic_mean(rng, n=1000) -> PropertyCheck:
    """Averaging importances that agree on S=1 gives the harmonic mean (relative error)."""
    return _mean_check(rng, n, 1.0, "5: harmonic mean")


def check_complement_mean(rng, n=1000) -> PropertyCheck:
    """Averaging importances that agree on S=0 gives the f-mean with f(x) = 1/(1-x)."""
    return _mean_check(rng, n, 0.0, "6: f-mean with f(x)=1/(1-x)")


def check_convex_contours(rng, n=1000) -> PropertyCheck:
    """Mixtures of two performances scoring at most (at least) R(P) also do."""
    worst, count = 0.0, 0
    while count < n:
        space = _space(rng)
        s, i = _satisfaction(space, rng), _importance(space, rng)
        score = ranking_score(i, s)
        probs = random_performances(space, 3, rng, sparsity=0.2)
        r, ok = score.evaluate(probs)
        if not ok.all():
            continue
        order = np.argsort(r)
        lam = rng.uniform(0.0, 1.0, 16)[:, None]
        for top, a, b, sign in ((order[2], order[0], order[1], 1.0), (order[0], order[1], order[2], -1.0)):
            q = lam * probs[a] + (1.0 - lam) * probs[b]
            rq, okq = score.evaluate(q)
            excess = sign * (rq[okq] - r[top])
            if excess.size:
                worst = max(worst, float(excess.max()))
        count += 1
    return PropertyCheck("7: convex contour sets", count, worst, ABS_TOL)


ALL_CHECKS = (check_decomposition, check_affine_satisfaction, check_scale_invariance, check_face_scaling,
              check_harmonic_mean, check_complement_mean, check_convex_contours)


def run_all(seed: int = 0, n: int = 1000) -> list[PropertyCheck]:
    rng = np.random.default_rng(seed)
    return [check(rng, n) for check in ALL_CHECKS]
