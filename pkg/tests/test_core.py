import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perfrank.core import (
    OUT_OF_DOMAIN,
    DomainError,
    Importance,
    Performance,
    RandomVariable,
    SampleSpace,
    Score,
    expected_value_score,
    filter_performance,
    probabilistic_score,
    random_performances,
    ranking_score,
    satisfaction_range_holds,
)
from perfrank.properties import ALL_CHECKS, run_all
from perfrank.scores2c import SATISFACTION, TWO_CLASS, importance

P = lambda *probs: Performance(TWO_CLASS, probs)  # noqa: E731


# --- sample spaces, performances, random variables -------------------------------------


def test_space_rejects_bad_labels():
    with pytest.raises(ValueError):
        SampleSpace(())
    with pytest.raises(ValueError):
        SampleSpace(("a", "a"))
    with pytest.raises(ValueError):
        SampleSpace(tuple(f"w{i}" for i in range(65)))


def test_event_probability():
    p = P(0.1, 0.2, 0.3, 0.4)
    assert p.probability({"fn", "tp"}) == pytest.approx(0.7)
    assert p["fp"] == 0.2
    assert p.probability(TWO_CLASS.event({"tn"})) == pytest.approx(0.1)


def test_performance_normalizes_small_drift():
    p = P(0.25, 0.25, 0.25, 0.25 + 5e-10)
    assert p.probs.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("probs", [(0.3, 0.3, 0.3, 0.3), (0.5, 0.5, 0.5, -0.5), (1.0, 0.0, 0.0),
                                   (np.nan, 0.5, 0.5, 0.0), (0.25, 0.25, 0.25, 0.25 + 2e-9)])
def test_performance_rejects_invalid(probs):
    with pytest.raises(ValueError):
        Performance(TWO_CLASS, probs)


def test_performance_is_immutable():
    p = P(0.25, 0.25, 0.25, 0.25)
    with pytest.raises(ValueError):
        p.probs[0] = 1.0


def test_performance_mix():
    a, b = P(1, 0, 0, 0), P(0, 0, 0, 1)
    assert a.mix(b, 0.25) == P(0.25, 0, 0, 0.75)
    with pytest.raises(ValueError):
        a.mix(b, 1.5)


def test_importance_validation():
    with pytest.raises(ValueError):
        Importance(TWO_CLASS, [0, 0, 0, 0])
    with pytest.raises(ValueError):
        Importance(TWO_CLASS, [1, -1, 0, 0])
    assert SATISFACTION.is_binary
    assert not RandomVariable(TWO_CLASS, [0.5, 0, 0, 1]).is_binary


def test_mismatched_spaces_raise():
    other = SampleSpace(("a", "b", "c", "d"))
    with pytest.raises(ValueError):
        expected_value_score(SATISFACTION)(Performance(other, [0.25] * 4))
    with pytest.raises(ValueError):
        ranking_score(Importance(other, [1, 1, 1, 1]), SATISFACTION)


# --- the three kinds of score -----------------------------------------------------------


def test_expected_value_score_examples():
    x = expected_value_score(SATISFACTION)
    assert x(P(0.5, 0, 0, 0.5)) == 1.0
    assert x(P(0.25, 0.25, 0.25, 0.25)) == 0.5
    v = RandomVariable(TWO_CLASS, [2, 3, 5, 7])
    assert expected_value_score(v)(P(0.1, 0.2, 0.3, 0.4)) == pytest.approx(5.1, abs=1e-12)


def test_probabilistic_score_examples():
    tpr = probabilistic_score(TWO_CLASS, {"tp"}, {"fn", "tp"})
    # (0, 0, 0.2, 0.2) is not normalized; the ratio is scale free, so check it raw and normalized
    assert tpr.raw(np.array([[0, 0, 0.2, 0.2]]))[0] == pytest.approx(0.5)
    assert tpr(P(0, 0, 0.5, 0.5)) == 0.5
    assert probabilistic_score(TWO_CLASS, {"tp"}, {"fp", "tp"})(P(0.8, 0, 0.2, 0)) is OUT_OF_DOMAIN
    assert probabilistic_score(TWO_CLASS, {"tn"}, {"tn", "fp"})(P(0.6, 0.2, 0.1, 0.1)) == pytest.approx(0.75)


@pytest.mark.parametrize("e1,e2", [(set(), {"tp"}), ({"tp"}, {"tp"}), ({"tp"}, {"fn"})])
def test_probabilistic_score_needs_strict_nesting(e1, e2):
    with pytest.raises(ValueError):
        probabilistic_score(TWO_CLASS, e1, e2)


def test_ranking_score_uniform_is_accuracy(rng):
    r = ranking_score(importance(0.5, 0.5, 0.5, 0.5), SATISFACTION)
    probs = random_performances(TWO_CLASS, 500, rng, sparsity=0.3)
    assert np.max(np.abs(r.raw(probs) - (probs[:, 0] + probs[:, 3]))) <= 1e-12


def test_ranking_score_f1_example():
    r = ranking_score(importance(0, 0.5, 0.5, 1), SATISFACTION)
    value = r(P(0.1, 0.2, 0.3, 0.4))
    assert value == pytest.approx(0.4 / 0.65, abs=1e-15)
    assert value == pytest.approx(2 * 0.4 / (2 * 0.4 + 0.2 + 0.3), abs=1e-15)


def test_ranking_score_out_of_domain():
    r = ranking_score(importance(1, 1, 0, 0), SATISFACTION)
    p = P(0, 0, 0.5, 0.5)
    assert r(p) is OUT_OF_DOMAIN
    assert not r.in_domain(p)
    assert repr(OUT_OF_DOMAIN) == "OUT_OF_DOMAIN"
    assert not OUT_OF_DOMAIN


def test_score_from_function_and_negation():
    s = Score.from_function("tp_share", TWO_CLASS, lambda row: None if row[3] == 0 else row[3])
    assert s(P(0.5, 0.5, 0, 0)) is OUT_OF_DOMAIN
    assert s(P(0.5, 0, 0, 0.5)) == 0.5
    assert s.negated()(P(0.5, 0, 0, 0.5)) == -0.5
    with pytest.raises(ValueError):
        Score("bad", TWO_CLASS)


def test_evaluation_is_bitwise_deterministic(rng):
    r = ranking_score(importance(0.3, 1.7, 0.2, 2.5), SATISFACTION)
    probs = random_performances(TWO_CLASS, 100, rng)
    assert r.raw(probs).tobytes() == r.raw(probs.copy()).tobytes()


# --- filter -----------------------------------------------------------------------------


def test_filter_examples():
    p = P(0.1, 0.2, 0.3, 0.4)
    assert filter_performance(importance(1, 1, 1, 1), p) == p
    assert np.allclose(filter_performance(importance(0, 1, 1, 0), P(0.25, 0.25, 0.25, 0.25)).probs,
                       [0, 0.5, 0.5, 0], atol=1e-15)
    with pytest.raises(DomainError):
        filter_performance(importance(1, 1, 0, 0), P(0, 0, 0.5, 0.5))


# --- properties over seeded random instances -------------------------------------------


@pytest.mark.parametrize("check", ALL_CHECKS, ids=lambda c: c.__name__)
def test_property_checks(check):
    result = check(np.random.default_rng(11), 1000)
    assert result.instances >= 1000
    assert result.passed, result


def test_run_all_is_seeded():
    a = run_all(seed=3, n=50)
    b = run_all(seed=3, n=50)
    assert a == b
    assert all(c.passed for c in a)


def test_range_bounded_by_satisfaction(rng):
    for _ in range(300):
        k = int(rng.integers(2, 8))
        space = SampleSpace(tuple(map(str, range(k))))
        s = RandomVariable(space, rng.normal(size=k))
        i = Importance(space, rng.exponential(size=k) * (rng.random(k) > 0.3) + (np.arange(k) == 0))
        probs = random_performances(space, 40, rng, sparsity=0.3)
        values, ok = ranking_score(i, s).evaluate(probs)
        assert np.all(values[ok] >= s.min - 1e-12) and np.all(values[ok] <= s.max + 1e-12)
        assert satisfaction_range_holds(ranking_score(i, s), s, probs)


def test_range_check_catches_out_of_range_scores():
    bad = Score.from_function("boost", TWO_CLASS, lambda row: row[0] + row[3] + 0.5)
    assert not satisfaction_range_holds(bad, SATISFACTION, np.array([[0.5, 0, 0, 0.5]]))


# --- hypothesis variants ----------------------------------------------------------------

_weights = st.lists(st.floats(0.0, 10.0, allow_subnormal=False), min_size=4, max_size=4)
_probs = st.lists(st.floats(0.0, 1.0, allow_subnormal=False), min_size=4, max_size=4).filter(
    lambda v: sum(v) > 1e-6)


@given(_weights.filter(lambda v: any(x > 1e-6 for x in v)), _probs)
def test_filter_decomposition_hypothesis(weights, raw):
    p = Performance(TWO_CLASS, np.array(raw) / sum(raw))
    i = Importance(TWO_CLASS, weights)
    r = ranking_score(i, SATISFACTION)(p)
    if r is OUT_OF_DOMAIN:
        with pytest.raises(DomainError):
            filter_performance(i, p)
        return
    filtered = filter_performance(i, p)
    assert abs(filtered.probs.sum() - 1.0) <= 1e-12
    assert abs(expected_value_score(SATISFACTION)(filtered) - r) <= 1e-12


@given(_weights.filter(lambda v: any(x > 1e-6 for x in v)), _probs,
       st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_face_scaling_hypothesis(weights, raw, a0, a1):
    """Per-face rescaling changes R_I but never its position relative to a fixed reference."""
    p = Performance(TWO_CLASS, np.array(raw) / sum(raw))
    ref = P(0.25, 0.25, 0.25, 0.25)
    i = Importance(TWO_CLASS, weights)
    scaled = Importance(TWO_CLASS, i.values * np.where(SATISFACTION.values == 1.0, a1, a0))
    r, r2 = ranking_score(i, SATISFACTION), ranking_score(scaled, SATISFACTION)
    if r(p) is OUT_OF_DOMAIN or r(ref) is OUT_OF_DOMAIN:
        assert (r(p) is OUT_OF_DOMAIN) == (r2(p) is OUT_OF_DOMAIN)
        return
    d, d2 = r(p) - r(ref), r2(p) - r2(ref)
    if abs(d) > 1e-9 and abs(d2) > 1e-9:
        assert math.copysign(1, d) == math.copysign(1, d2)
