"""How close is a score to some ranking score?

Run with ``python3 tutorials/02_tau_consistency.py``.

Every ranking score on the two-class problem is fixed by an importance
``I = (1-a, 1-b, b, a)``. The optimizer searches ``(a, b)`` for the largest
(or smallest) Kendall τ between a score and the ranking score with that
importance, over a grid of performances. When a score is a known monotone
transform of a ranking score, τ = ±1 is reported without searching.
"""

from perfrank.audit import ConstraintSet, make_grid
from perfrank.scores2c import get_entry, get_score, importance_to_ab
from perfrank.taucorr import optimize_tau, tau_of_importance

grid = make_grid(ConstraintSet(), 16)
for name in ("f1", "accuracy", "mcc"):
    low = optimize_tau(get_score(name), grid, "min")
    high = optimize_tau(get_score(name), grid, "max")
    print(f"{name:9s} tau in [{low.tau:+.3f}, {high.tau:+.3f}]  best importance {high.importance}"
          f"{'  (analytic)' if high.analytic else ''}")

# balanced accuracy is a ranking score only once the class prior is fixed;
# at prior 0.2 the two rank identically, and τ falls a little short of 1
# only because float rounding breaks some exact ties on one side and not the other
entry = get_entry("balanced_accuracy")
weights = entry.equivalence.importance(0.2)
a, b = importance_to_ab(weights)
for constraint in (ConstraintSet(), ConstraintSet(0.2)):
    tau = tau_of_importance(entry.score, make_grid(constraint, 20), a, b)
    print(f"balanced accuracy vs I={tuple(round(w, 3) for w in weights)}, {constraint.label}: tau = {tau:.3f}")
