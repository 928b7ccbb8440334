"""Score-induced preorders, the four derived relations and rank bounds.

A score ``X`` induces the preorder ``P1 ≲ P2`` iff both performances are in
the domain and ``X(P1) <= X(P2)``, or neither is in the domain and
``P1 = P2``. From ``≲`` derive equivalence (``≲`` both ways), worse /
better (``≲`` one way only) and incomparability (``≲`` neither way).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .core import Performance, Score, _check_same_space, as_probs

__all__ = [
    "Relation",
    "EntityRecord",
    "RankBounds",
    "LemmaReport",
    "compare",
    "relation_matrix",
    "relations_from_preorder",
    "check_lemmas",
    "relation_properties_check",
    "rank_bounds",
]


class Relation(IntEnum):
    """Relation of the first performance to the second."""

    WORSE = 0
    EQUIVALENT = 1
    BETTER = 2
    INCOMPARABLE = 3

    @property
    def converse(self) -> Relation:
        return {Relation.WORSE: Relation.BETTER, Relation.BETTER: Relation.WORSE}.get(self, self)


def _relate(x1: float, ok1: bool, x2: float, ok2: bool, same: bool) -> Relation:
    if ok1 and ok2:
        if x1 < x2:
            return Relation.WORSE
        if x1 > x2:
            return Relation.BETTER
        return Relation.EQUIVALENT
    if not ok1 and not ok2 and same:
        return Relation.EQUIVALENT
    return Relation.INCOMPARABLE


def compare(score: Score, p1: Performance, p2: Performance) -> Relation:
    """Relation between two performances under the preorder induced by ``score``.

    Outside the domain a performance is only equivalent to itself (bitwise).
    """
    _check_same_space(score.space, p1.space)
    _check_same_space(p1.space, p2.space)
    values, ok = score.evaluate(np.stack([p1.probs, p2.probs]))
    return _relate(values[0], ok[0], values[1], ok[1], p1 == p2)


def relation_matrix(score: Score, sample: Sequence[Performance] | np.ndarray) -> np.ndarray:
    """All pairwise relations as an ``(n, n)`` array of :class:`Relation` codes."""
    probs = as_probs(sample)
    values, ok = score.evaluate(probs)
    v = np.where(ok, values, 0.0)
    both = ok[:, None] & ok[None, :]
    neither = ~ok[:, None] & ~ok[None, :]
    same = (probs[:, None, :] == probs[None, :, :]).all(axis=2)
    rel = np.full(both.shape, int(Relation.INCOMPARABLE), dtype=np.int8)
    rel[both & (v[:, None] < v[None, :])] = Relation.WORSE
    rel[both & (v[:, None] > v[None, :])] = Relation.BETTER
    rel[both & (v[:, None] == v[None, :])] = Relation.EQUIVALENT
    rel[neither & same] = Relation.EQUIVALENT
    return rel


def relations_from_preorder(le: np.ndarray) -> np.ndarray:
    """Derive the relation codes from a boolean matrix ``le[i, j] = (i ≲ j)``."""
    le = np.asarray(le, dtype=bool)
    rel = np.full(le.shape, int(Relation.INCOMPARABLE), dtype=np.int8)
    rel[le & le.T] = Relation.EQUIVALENT
    rel[le & ~le.T] = Relation.WORSE
    rel[~le & le.T] = Relation.BETTER
    return rel


@dataclass(frozen=True)
class LemmaReport:
    """Pass/fail per order-theory lemma on a finite sample."""

    results: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.results.values())

    @property
    def failures(self) -> list[str]:
        return [name for name, ok in self.results.items() if not ok]


def _transitive(r: np.ndarray) -> bool:
    m = r.astype(np.int64)
    reach = (m @ m) > 0
    return bool(np.all(~reach | r))


def check_lemmas(rel: np.ndarray) -> LemmaReport:
    """Check the order-theory lemmas on a matrix of relation codes."""
    rel = np.asarray(rel)
    worse = rel == Relation.WORSE
    better = rel == Relation.BETTER
    equiv = rel == Relation.EQUIVALENT
    incomp = rel == Relation.INCOMPARABLE
    le = worse | equiv
    ge = better | equiv
    diag = np.eye(rel.shape[0], dtype=bool)
    exactly_one = worse.astype(int) + better + equiv + incomp == 1
    results = {
        "exactly one relation per pair": bool(exactly_one.all()),
        "≲ is reflexive": bool(le[diag].all()),
        "∼ is reflexive": bool(equiv[diag].all()),
        "≲ is transitive": _transitive(le),
        "∼ is transitive": _transitive(equiv),
        "< is transitive": _transitive(worse),
        "> is transitive": _transitive(better),
        "∼ is symmetric": bool((equiv == equiv.T).all()),
        "≁ is symmetric": bool((incomp == incomp.T).all()),
        "< is asymmetric": bool(not (worse & worse.T).any()),
        "> is asymmetric": bool(not (better & better.T).any()),
        "< is irreflexive": bool(not worse[diag].any()),
        "> is irreflexive": bool(not better[diag].any()),
        "< and > are converse": bool((worse == better.T).all()),
        "≲ and ≳ are converse": bool((le == ge.T).all()),
    }
    return LemmaReport(results)


def relation_properties_check(score: Score, sample: Sequence[Performance] | np.ndarray) -> LemmaReport:
    """Run the lemma suite on the relations a score induces over ``sample``."""
    if len(sample) < 3:
        raise ValueError("the lemma suite needs at least 3 performances")
    return check_lemmas(relation_matrix(score, sample))


# --- rank bounds -------------------------------------------------------------------------


@dataclass(frozen=True)
class EntityRecord:
    id: str
    performance: Performance


@dataclass(frozen=True)
class RankBounds:
    """Bounds on the rank of an entity; ``rank`` is the competition-style lower bound."""

    lower: int
    upper: int
    in_domain: bool = True

    def __post_init__(self):
        if not 1 <= self.lower <= self.upper:
            raise ValueError(f"invalid rank bounds ({self.lower}, {self.upper})")

    @property
    def rank(self) -> int:
        return self.lower


def rank_bounds(entities: Sequence[EntityRecord], score: Score) -> dict[str, RankBounds]:
    """Per-entity bounds ``#{better} + 1 <= rank <= #{entities ≳ it}``.

    The upper bound counts the entity itself. Results keep the input order.
    """
    if not entities:
        raise ValueError("cannot rank an empty entity set")
    ids = [e.id for e in entities]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise ValueError(f"duplicate entity ids: {', '.join(dupes)}")
    for e in entities:
        _check_same_space(score.space, e.performance.space)
    rel = relation_matrix(score, [e.performance for e in entities])
    _, ok = score.evaluate(as_probs([e.performance for e in entities]))
    # rel[i, j] is the relation of entity i to entity j
    better_than_i = (rel == Relation.WORSE).sum(axis=1)
    at_least_i = ((rel == Relation.WORSE) | (rel == Relation.EQUIVALENT)).sum(axis=1)
    return {eid: RankBounds(int(better_than_i[k]) + 1, int(at_least_i[k]), bool(ok[k]))
            for k, eid in enumerate(ids)}
