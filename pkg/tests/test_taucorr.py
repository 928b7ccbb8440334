import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import kendalltau

from perfrank.audit import ConstraintSet, make_grid
from perfrank.scores2c import SATISFACTION, get_entry, get_score, importance, two_class_ranking_score
from perfrank.core import ranking_score
from perfrank.taucorr import (
    SearchConfig,
    TauResult,
    kendall_tau,
    optimize_tau,
    tau_counts,
    tau_from_counts,
    tau_of_importance,
)


def brute_force_counts(x, y):
    """O(n^2) pair counting: (C - D, pairs untied in x, pairs untied in y)."""
    n = len(x)
    c = d = ux = uy = 0
    for i in range(n):
        for j in range(i + 1, n):
            sx = int(x[i] > x[j]) - int(x[i] < x[j])
            sy = int(y[i] > y[j]) - int(y[i] < y[j])
            ux += sx != 0
            uy += sy != 0
            c += sx * sy > 0
            d += sx * sy < 0
    return c - d, ux, uy


def test_kendall_examples():
    assert kendall_tau([1, 2, 3], [1, 2, 3]) == 1.0
    assert kendall_tau([1, 2, 3], [3, 2, 1]) == -1.0
    assert kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2 / 3, abs=1e-15)
    assert tau_counts([1, 2, 3, 4], [1, 3, 2, 4]) == (4, 6, 6)


def test_kendall_undefined_and_errors():
    assert kendall_tau([1, 1, 1], [1, 2, 3]) is None
    assert kendall_tau([5, 5], [7, 7]) is None
    assert kendall_tau([1], [2]) is None
    with pytest.raises(ValueError):
        kendall_tau([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        kendall_tau([1, np.nan], [1, 2])
    assert tau_from_counts(3, 0, 6) is None


def test_kendall_matches_brute_force_exactly():
    rng = np.random.default_rng(99)
    for case in range(200):
        n = int(rng.integers(2, 301))
        levels = int(rng.choice([2, 5, 20, 1000]))
        x = rng.integers(0, levels, n).astype(float)
        y = rng.integers(0, levels, n).astype(float) if case % 3 else x * rng.choice([-1, 1]) + rng.integers(0, 2, n)
        assert tau_counts(x, y) == brute_force_counts(x, y)


def test_kendall_large_blocks():
    # tie groups above the insertion-sort cutoff and blocks beyond 16 elements
    rng = np.random.default_rng(1)
    x = np.repeat(np.arange(5.0), 80)
    y = rng.integers(0, 50, x.size).astype(float)
    assert tau_counts(x, y) == brute_force_counts(x, y)


@given(st.lists(st.tuples(st.integers(-3, 3), st.floats(-5, 5, allow_nan=False)), min_size=2, max_size=60))
def test_kendall_matches_scipy(pairs):
    x, y = map(np.array, zip(*pairs))
    ours = kendall_tau(x, y)
    ref = kendalltau(x, y).statistic
    if ours is None:
        assert math.isnan(ref)
    else:
        assert ours == pytest.approx(ref, abs=1e-12)


# --- τ against a ranking score --------------------------------------------------------


GRIDS = [make_grid(ConstraintSet(), 16), make_grid(ConstraintSet(0.2), 20), make_grid(ConstraintSet(0.5), 16)]


@pytest.mark.parametrize("grid", GRIDS, ids=lambda g: g.constraint.label)
def test_tau_of_importance_examples(grid):
    assert tau_of_importance(two_class_ranking_score(0.5, 0.5, 0.5, 0.5), grid, 0.5, 0.5) == 1.0
    assert tau_of_importance(two_class_ranking_score(0.25, 0.625, 0.375, 0.75), grid, 0.75, 0.375) == 1.0
    accuracy = tau_of_importance(get_score("accuracy"), grid, 0.5, 0.5)
    error_rate = tau_of_importance(get_score("error_rate"), grid, 0.5, 0.5)
    if grid.constraint.prior in (None, 0.5):
        # dyadic coordinates: tn + tp and the ratio form round identically
        assert (accuracy, error_rate) == (1.0, -1.0)
    else:
        # ties that float rounding splits differently on each side cost a little τ
        assert accuracy >= 0.99 and error_rate <= -0.99


def test_tau_of_importance_accuracy_exact_on_dyadic_grid():
    assert tau_of_importance(get_score("accuracy"), make_grid(ConstraintSet(), 32), 0.5, 0.5) == 1.0


def test_tau_of_importance_validation():
    with pytest.raises(ValueError):
        tau_of_importance(get_score("accuracy"), GRIDS[0], 1.2, 0.5)


def _rounded_ranking_values(weights, probs):
    values, ok = ranking_score(importance(*weights), SATISFACTION).evaluate(probs)
    return np.round(values, 10), ok


@pytest.mark.parametrize("name", ["mcc", "gmean_tnr_tpr", "markedness"])
def test_reparameterization_invariance(name, rng):
    """τ between a score and R_I ignores global and per-face rescaling of I."""
    probs = GRIDS[0].probs
    x, xok = get_score(name).evaluate(probs)
    for _ in range(5):
        a, b = rng.uniform(0.05, 0.95, 2)
        base = (1 - a, 1 - b, b, a)
        k, f0, f1 = np.exp(rng.uniform(-3, 3, 3))
        variants = [base, tuple(k * w for w in base), (f1 * base[0], f0 * base[1], f0 * base[2], f1 * base[3])]
        taus = []
        for weights in variants:
            r, rok = _rounded_ranking_values(weights, probs)
            both = xok & rok
            taus.append(kendall_tau(x[both], r[both]))
        assert taus[0] == pytest.approx(taus[1], abs=1e-12) and taus[0] == pytest.approx(taus[2], abs=1e-12)
        direct = tau_of_importance(get_score(name), probs, a, b)
        assert direct == pytest.approx(taus[0], abs=1e-3)


# --- the optimizer --------------------------------------------------------------------------


def test_optimizer_examples():
    grid = make_grid()
    f1 = optimize_tau(get_score("f1"), grid, "max")
    assert f1.tau == 1.0 and f1.analytic
    assert (f1.a, f1.b) == (1.0, 0.5) and f1.importance == (0.0, 0.5, 0.5, 1.0)
    fnr = optimize_tau(get_score("fnr"), grid, "min")
    assert fnr.tau == -1.0 and fnr.analytic
    acc = optimize_tau(get_score("accuracy"), grid, "min")
    assert not acc.analytic and acc.evaluations == 605
    assert acc.tau == pytest.approx(0.469, abs=0.02)


def test_optimizer_result_reproduces_its_tau():
    grid = make_grid(ConstraintSet(), 16)
    for name in ("mcc", "plr", "kappa_chance"):
        for objective in ("min", "max"):
            r = optimize_tau(get_score(name), grid, objective)
            assert -1.0 <= r.tau <= 1.0
            assert tau_of_importance(get_score(name), grid, r.a, r.b) == r.tau


def test_optimizer_symmetry_under_negation():
    grid = make_grid(ConstraintSet(), 16)
    for name in ("mcc", "tpr", "odds_ratio"):
        score = get_score(name)
        low = optimize_tau(score, grid, "min", analytic=False)
        high = optimize_tau(score.negated(), grid, "max", analytic=False)
        assert low.tau == -high.tau and (low.a, low.b) == (high.a, high.b)


def test_optimizer_constant_score_and_config():
    grid = make_grid(ConstraintSet(0.5), 10)
    chance = optimize_tau(get_score("kappa_chance"), grid, "max")
    assert chance.tau == 0.0 and chance.analytic
    coarse = optimize_tau(get_score("mcc"), GRIDS[0], "max", config=SearchConfig(5, 0.5, 0.1))
    assert coarse.evaluations == 25 * 4


def test_optimizer_uses_equivalence_only_where_valid():
    grid = make_grid(ConstraintSet(), 16)
    nlr = get_entry("nlr")
    assert not optimize_tau(nlr.score, grid, "min", equivalence=nlr).analytic
    fixed = optimize_tau(nlr.score, make_grid(ConstraintSet(0.2), 20), "min", equivalence=nlr)
    assert fixed.analytic and fixed.tau == -1.0 and fixed.importance == (1.0, 0.0, 1.0, 0.0)
    # a decreasing link gives nothing for the maximum
    assert not optimize_tau(get_score("fnr"), grid, "max").analytic


def test_tau_result_validation():
    with pytest.raises(ValueError):
        TauResult(1.5, 0.5, 0.5, "max")
    with pytest.raises(ValueError):
        TauResult(0.5, 0.5, 0.5, "best")
    assert TauResult(0.5, 0.25, 0.75, "max").importance == (0.75, 0.25, 0.75, 0.25)
