"""Rank entities with bounds instead of a single position.

Run with ``python3 tutorials/03_leaderboard.py``.

Ties make a single rank ambiguous, so each entity gets the interval of
ranks it could take. Entities outside the score's domain (here, a
classifier that never sees a positive) cannot be compared and are
reported as such.
"""

from perfrank.core import Performance
from perfrank.ordering import EntityRecord, rank_bounds
from perfrank.scores2c import TWO_CLASS, get_score

# (p_tn, p_fp, p_fn, p_tp)
board = {
    "alpha": (0.45, 0.05, 0.05, 0.45),
    "beta": (0.40, 0.10, 0.10, 0.40),
    "gamma": (0.30, 0.10, 0.10, 0.50),
    "delta": (0.80, 0.20, 0.00, 0.00),
}
entities = [EntityRecord(k, Performance(TWO_CLASS, v)) for k, v in board.items()]
for name in ("accuracy", "tpr"):
    print(name)
    for eid, bounds in rank_bounds(entities, get_score(name)).items():
        status = "ranked" if bounds.in_domain else "incomparable"
        print(f"  {eid:6s} rank {bounds.rank}  ({bounds.lower}-{bounds.upper})  {status}")
