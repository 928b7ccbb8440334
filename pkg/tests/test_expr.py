import doctest
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import perfrank.expr
from perfrank.audit import ConstraintSet, audit_score, make_grid
from perfrank.core import OUT_OF_DOMAIN, Performance
from perfrank.expr import ExpressionError, parse_expression
from perfrank.scores2c import TWO_CLASS, get_score

P = Performance(TWO_CLASS, [0.1, 0.2, 0.3, 0.4])


def value(source, p=P):
    return parse_expression(source).score()(p)


@pytest.mark.parametrize("source,expected", [
    ("1 + 2 * 3", 7.0),
    ("(1 + 2) * 3", 9.0),
    ("2 ^ 3 ^ 2", 512.0),
    ("-2 ^ 2", -4.0),
    ("(-2) ^ 2", 4.0),
    ("2 ^ -1", 0.5),
    ("8 / 4 / 2", 1.0),
    ("10 - 4 - 3", 3.0),
    ("--3", 3.0),
    ("+ptp", 0.4),
    ("sqrt(16) + log(1)", 4.0),
    ("1.5e1 + .5", 15.5),
    ("ptn + pfp + pfn + ptp", 1.0),
])
def test_arithmetic_and_precedence(source, expected):
    assert value(source) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("source,column", [
    ("", 1), ("ptp +", 6), ("ptp + * 2", 7), ("(ptp", 5), ("ptp)", 4), ("tpr", 1),
    ("sqrt ptp", 6), ("2 $ 3", 3), ("ptp ptn", 5), ("log()", 5),
])
def test_syntax_errors_report_the_column(source, column):
    with pytest.raises(ExpressionError) as info:
        parse_expression(source)
    err = info.value
    assert err.position + 1 == column
    assert f"at column {column}" in str(err)
    assert str(err).splitlines()[-1] == "  " + " " * err.position + "^"


@pytest.mark.parametrize("source", ["ptp / pfn * 0", "1 / (ptp - 0.4)", "log(ptp - 0.4)", "log(-1)",
                                    "sqrt(ptp - 1)", "(ptp - 1) ^ 0.5", "0 ^ -1", "10 ^ 400"])
def test_domain_rules(source):
    p = Performance(TWO_CLASS, [0.1, 0.2, 0.0, 0.7])
    if source == "ptp / pfn * 0":
        assert value(source, p) is OUT_OF_DOMAIN  # division by zero even if multiplied away
    else:
        assert value(source) is OUT_OF_DOMAIN


def test_parse_is_deterministic():
    a, b = parse_expression("2*ptp/(2*ptp+pfp+pfn)"), parse_expression("2*ptp/(2*ptp+pfp+pfn)")
    assert a == b and a.program == b.program


@pytest.mark.parametrize("name,source", [
    ("ppv", "ptp/(ptp+pfp)"),
    ("f1", "2*ptp/(2*ptp+pfp+pfn)"),
    ("mcc", "(ptp*ptn - pfp*pfn)/sqrt((ptp+pfp)*(ptp+pfn)*(ptn+pfp)*(ptn+pfn))"),
    ("cohen_kappa", "((ptn+ptp) - ((ptp+pfn)*(ptp+pfp) + (ptn+pfp)*(ptn+pfn))) / "
                    "(1 - ((ptp+pfn)*(ptp+pfp) + (ptn+pfp)*(ptn+pfn)))"),
    ("nlr", "(pfn/(pfn+ptp)) / (ptn/(ptn+pfp))"),
])
def test_expressions_match_builtins_on_grid(name, source):
    probs = make_grid(ConstraintSet(), 16).probs
    builtin, ok = get_score(name).evaluate(probs)
    mine, ok2 = parse_expression(source).score(name).evaluate(probs)
    assert np.array_equal(ok, ok2)
    assert np.allclose(builtin[ok], mine[ok], rtol=1e-12, atol=1e-12)


def test_expression_audit_matches_builtin():
    grid_res = 12
    for constraint in (ConstraintSet(), ConstraintSet(0.5)):
        a = audit_score(get_score("ppv"), constraint, resolution=grid_res)
        b = audit_score(parse_expression("ptp/(ptp+pfp)").score(), constraint, resolution=grid_res)
        assert a.pattern == b.pattern == "VVV"


def test_module_doctest():
    assert doctest.testmod(perfrank.expr).failed == 0


@given(st.floats(-50, 50, allow_nan=False), st.floats(-50, 50, allow_nan=False),
       st.sampled_from("+-*/"))
def test_binary_ops_match_python(x, y, op):
    got = value(f"({x!r}) {op} ({y!r})")
    with np.errstate(all="ignore"):
        expected = {"+": x + y, "-": x - y, "*": x * y, "/": np.float64(x) / y if y else math.inf}[op]
    if not math.isfinite(expected):
        assert got is OUT_OF_DOMAIN  # division by zero and overflow leave the domain
    else:
        assert got == expected
