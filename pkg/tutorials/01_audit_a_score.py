"""Audit two-class scores with the three tests, then write your own score.

Run with ``python3 tutorials/01_audit_a_score.py``.

A score can be used to rank entities only if it behaves like a ranking
score. Test 1 checks that perfect and worst-case performances sit at the
ends of the scale. Tests 2 and 3 check that mixing two performances never
yields a score outside the range spanned by the two. The audit runs the
tests on a lattice of performances and returns a witness for each failure.
"""

from perfrank.audit import ConstraintSet, audit_score
from perfrank.expr import parse_expression
from perfrank.scores2c import get_score

for name in ("f1", "mcc", "balanced_accuracy"):
    for constraint in (ConstraintSet(), ConstraintSet(0.5)):
        verdict = audit_score(get_score(name), constraint, resolution=16)
        print(f"{name:18s} {constraint.label:14s} {verdict.pattern}")

# a failing test carries a replayable counterexample
verdict = audit_score(get_score("mcc"), ConstraintSet(), resolution=16)
witness = verdict.counterexample
print("\nMCC witness:", witness.to_dict())
print("replays:", witness.replay(get_score("mcc")))

# any formula over ptn, pfp, pfn, ptp can be audited the same way
fmi = parse_expression("sqrt((ptp/(ptp+pfp)) * (ptp/(ptp+pfn)))").score("fmi")
print("\nFowlkes-Mallows:", audit_score(fmi, ConstraintSet()).pattern)
