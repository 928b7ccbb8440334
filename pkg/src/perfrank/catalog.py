"""Finite sample spaces and satisfactions for common evaluation tasks.

Each adapter returns a :class:`TaskSetup`: the outcomes of one random trial
(the sample space), the satisfaction attached to each outcome, some ready
made scores, and notes on caveats. The expected satisfaction is always a
ranking score (uniform importance), so it passes the three audit tests.

Regression has a continuous sample space and only ships as a recipe: pick a
finite set of target values, discretize the pairs ``(y, ŷ)`` and choose the
satisfaction. The negated squared and absolute errors give back the MSE and
the MAE as expected satisfactions, up to sign.

>>> setup = regression_discretized([0, 1, 2], [0, 1, 2], lambda y, yhat: -(y - yhat) ** 2)
>>> probs = np.full(9, 1 / 9)
>>> mse = np.mean([(y - yhat) ** 2 for y, yhat in setup.outcomes])
>>> bool(np.isclose(-setup.expected_satisfaction.raw(probs[None, :])[0], mse))
True
>>> setup = regression_discretized([0, 1, 2], [0, 1, 2], lambda y, yhat: -abs(y - yhat))
>>> mae = np.mean([abs(y - yhat) for y, yhat in setup.outcomes])
>>> bool(np.isclose(-setup.expected_satisfaction.raw(probs[None, :])[0], mae))
True

Macro-averaged scores deserve a warning. Averaging per-class ranking
scores does not give a ranking score, and :func:`macro_f1_counterexample`
exhibits a mixture of two 3-class performances that scores strictly above
both of them.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from numba import njit

from .audit import DEFAULT_LAMBDAS, ConstraintSet, Counterexample, _run_convex, make_grid, pair_subsample
from .core import RandomVariable, SampleSpace, Score, expected_value_score, ranking_score
from .scores2c import SATISFACTION, TWO_CLASS, fmi_score

__all__ = [
    "TaskSetup",
    "two_class",
    "multi_class",
    "information_retrieval",
    "detection",
    "clustering",
    "ranking_task",
    "regression_discretized",
    "simplex_lattice",
    "macro_f1_score",
    "macro_f1_counterexample",
    "fmi_counterexample",
]


@dataclass(frozen=True, eq=False)
class TaskSetup:
    """Sample space, satisfaction, named scores and caveats of one task."""

    name: str
    space: SampleSpace
    satisfaction: RandomVariable
    notes: tuple[str, ...] = ()
    scores: Mapping[str, Score] = field(default_factory=dict)
    outcomes: tuple = ()

    def __post_init__(self):
        if self.satisfaction.space != self.space:
            raise ValueError("the satisfaction must live on the task's sample space")

    @property
    def expected_satisfaction(self) -> Score:
        return expected_value_score(self.satisfaction)

    def ranking_score(self, importance: Sequence[float], name: str | None = None) -> Score:
        rv = RandomVariable(self.space, importance, name or "I")
        return ranking_score(rv, self.satisfaction)


def two_class() -> TaskSetup:
    return multi_class(["negative", "positive"])


def multi_class(classes: Sequence, sim: Callable | Mapping | None = None) -> TaskSetup:
    """Classification into ``classes``; outcomes are (true, predicted) class pairs.

    Without ``sim`` the satisfaction is 1 on the diagonal, so the expected
    satisfaction is the multi-class accuracy. With ``sim``, a callable
    ``sim(y, yhat)`` or a mapping keyed by pairs, ``S(y, yhat) = sim(y, yhat)``.
    Two classes give the (tn, fp, fn, tp) space of the binary scores.
    """
    classes = list(classes)
    if len(classes) < 2:
        raise ValueError("classification needs at least two classes")
    if len(set(map(str, classes))) != len(classes):
        raise ValueError("class names must be distinct")
    pairs = [(y, yhat) for y in classes for yhat in classes]
    if len(classes) == 2 and sim is None:
        space = TWO_CLASS
    else:
        space = SampleSpace(tuple(f"{y}|{yhat}" for y, yhat in pairs))
    if sim is None:
        values = [1.0 if y == yhat else 0.0 for y, yhat in pairs]
    elif callable(sim):
        values = [float(sim(y, yhat)) for y, yhat in pairs]
    else:
        values = [float(sim[(y, yhat)]) for y, yhat in pairs]
    if not np.all(np.isfinite(values)):
        raise ValueError("similarity values must be finite")
    satisfaction = RandomVariable(space, values, "S")
    notes = (
        "Micro-averaged scores over one-vs-rest tables are expected satisfactions of the pooled "
        "trial and stay ranking scores; macro-averages of per-class ranking scores are not "
        "ranking scores in general.",
    )
    setup = TaskSetup(f"{len(classes)}-class classification", space, satisfaction, notes,
                      outcomes=tuple(pairs))
    scores = {"accuracy": setup.expected_satisfaction}
    if space is TWO_CLASS:
        scores["f1"] = setup.ranking_score([0.0, 0.5, 0.5, 1.0], "F1")
    object.__setattr__(setup, "scores", scores)
    return setup


def information_retrieval() -> TaskSetup:
    """Outcomes of drawing a document that is relevant or retrieved: fp, fn or tp."""
    space = SampleSpace(("fp", "fn", "tp"))
    satisfaction = RandomVariable(space, [0.0, 0.0, 1.0], "S")
    notes = (
        "Documents that are neither relevant nor retrieved are not outcomes: the trial restarts "
        "until it draws one of fp, fn or tp.",
        "A 4-outcome variant keeps tn as an outcome; it changes which performances are "
        "achievable by mixing and is left to the caller (use two_class()).",
    )
    setup = TaskSetup("information retrieval", space, satisfaction, notes, outcomes=space.labels)
    object.__setattr__(setup, "scores", {
        "precision": setup.ranking_score([1.0, 0.0, 1.0], "precision"),
        "recall": setup.ranking_score([0.0, 1.0, 1.0], "recall"),
        "f1": setup.ranking_score([1.0, 1.0, 2.0], "F1"),
        "iou": setup.ranking_score([1.0, 1.0, 1.0], "IoU"),
    })
    return setup


def detection() -> TaskSetup:
    """Outcomes of a detection trial: nothing to match ("empty"), fp, fn or tp.

    Both IoU and F1 are ranking scores here: IoU weights fp, fn and tp by 1,
    F1 weights fp and fn by 1 and tp by 2.
    """
    space = SampleSpace(("empty", "fp", "fn", "tp"))
    satisfaction = RandomVariable(space, [1.0, 0.0, 0.0, 1.0], "S")
    notes = ("The 'empty' outcome ends the trial without any detection or ground-truth object.",)
    setup = TaskSetup("detection", space, satisfaction, notes, outcomes=space.labels)
    object.__setattr__(setup, "scores", {
        "iou": setup.ranking_score([0.0, 1.0, 1.0, 1.0], "IoU"),
        "f1": setup.ranking_score([0.0, 1.0, 1.0, 2.0], "F1"),
    })
    return setup


def clustering() -> TaskSetup:
    """Pairs of elements: same or different cluster in the truth and in the prediction.

    The Fowlkes-Mallows index is attached as ``scores["fmi"]``; it is not a
    ranking score (see :func:`fmi_counterexample`).
    """
    notes = (
        "Outcomes classify a random pair of elements: tn/tp when both partitions agree on "
        "separating/grouping them, fp/fn otherwise.",
        "The Fowlkes-Mallows index, the geometric mean of PPV and TPR, violates quasi-concavity "
        "and so cannot be used to rank.",
    )
    setup = TaskSetup("clustering", TWO_CLASS, SATISFACTION, notes, outcomes=TWO_CLASS.labels)
    object.__setattr__(setup, "scores", {
        "rand_index": setup.expected_satisfaction,
        "jaccard": setup.ranking_score([0.0, 1.0, 1.0, 1.0], "Jaccard"),
        "fmi": fmi_score(),
    })
    return setup


def ranking_task() -> TaskSetup:
    """Pairs of items ranked by an entity: concordant or discordant with the truth.

    With ``S = +1`` on concordant and ``-1`` on discordant pairs, the expected
    satisfaction ``1 - 2 P(discordant)`` is Kendall's τ. With only two
    outcomes, every importance induces the same order, so all ranking scores
    agree.
    """
    space = SampleSpace(("concordant", "discordant"))
    satisfaction = RandomVariable(space, [1.0, -1.0], "S")
    notes = ("Every ranking score on a 2-outcome space orders performances like P(concordant).",)
    setup = TaskSetup("ranking", space, satisfaction, notes, outcomes=space.labels)
    object.__setattr__(setup, "scores", {"kendall_tau": setup.expected_satisfaction})
    return setup


def regression_discretized(y_values: Sequence[float], yhat_values: Sequence[float],
                           satisfaction: Callable[[float, float], float],
                           name: str = "regression") -> TaskSetup:
    """Regression over a finite discretization of targets and predictions."""
    pairs = [(y, yhat) for y in y_values for yhat in yhat_values]
    if not pairs:
        raise ValueError("need at least one target value and one predicted value")
    space = SampleSpace(tuple(f"{y}|{yhat}" for y, yhat in pairs))
    values = RandomVariable(space, [float(satisfaction(y, yhat)) for y, yhat in pairs], "S")
    notes = ("A discretized stand-in for the continuous (y, yhat) plane.",)
    return TaskSetup(name, space, values, notes, outcomes=tuple(pairs))


# --- lattice and counterexamples -------------------------------------------------------


def simplex_lattice(size: int, n: int) -> np.ndarray:
    """All probability vectors of length ``size`` with entries in ``{0, 1/n, ..., 1}``."""
    if size < 1 or n < 1:
        raise ValueError("size and resolution must be positive")
    rows = []
    for bars in combinations(range(n + size - 1), size - 1):
        edges = (-1,) + bars + (n + size - 1,)
        rows.append([edges[t + 1] - edges[t] - 1 for t in range(size)])
    return np.array(rows, dtype=np.float64) / n


@njit(cache=True)
def _macro_f1(p, params):
    k = int(params[0])
    total = 0.0
    for c in range(k):
        truth = 0.0
        pred = 0.0
        for d in range(k):
            truth += p[c * k + d]
            pred += p[d * k + c]
        den = truth + pred
        if den == 0.0:
            return np.nan
        total += 2.0 * p[c * k + c] / den
    return total / k


def macro_f1_score(setup: TaskSetup) -> Score:
    """Unweighted mean over classes of the one-vs-rest F1 (undefined if a class never occurs)."""
    k = int(round(len(setup.space) ** 0.5))
    if k * k != len(setup.space):
        raise ValueError("macro F1 needs a multi-class setup")
    return Score("macro_f1", setup.space, _macro_f1, np.array([float(k)]))


def macro_f1_counterexample(classes: int = 3, resolution: int = 4,
                            lambdas=DEFAULT_LAMBDAS) -> Counterexample:
    """First mixture on a lattice whose macro F1 exceeds both endpoints (test 2)."""
    setup = multi_class(list(range(classes)))
    score = macro_f1_score(setup)
    witness, _ = _run_convex(score, simplex_lattice(len(setup.space), resolution), lambdas,
                             True, False, 1e-9)
    if witness is None:
        raise RuntimeError("no macro-F1 violation found; increase the resolution")
    return witness


def fmi_counterexample(resolution: int | None = None, lambdas=DEFAULT_LAMBDAS, *,
                       seed: int = 0, margin: float = 1e-9) -> Counterexample:
    """First mixture whose FMI falls below both endpoints by more than ``margin``.

    The search runs over the same seeded pair subsample of the unconstrained
    grid as the audit.
    """
    grid = make_grid(ConstraintSet(), resolution)
    _, witness = _run_convex(fmi_score(), pair_subsample(grid, seed=seed), lambdas, False, True, margin)
    if witness is None:
        raise RuntimeError(f"no FMI violation above {margin:g} at resolution {grid.resolution}")
    return witness
