"""Classical two-class classification scores over Ω = (tn, fp, fn, tp).

Each score is a numba kernel on the probability vector ``(ptn, pfp, pfn, ptp)``
that returns NaN exactly where its textbook denominator vanishes (or, for
d', where the probit diverges). Catalog entries also record the importance,
if any, with which the score is perfectly rank-correlated, and the closed
form linking the two.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numba import njit

from .core import (
    ABS_TOL,
    Importance,
    Performance,
    RandomVariable,
    SampleSpace,
    Score,
    ranking_score,
)

TWO_CLASS = SampleSpace(("tn", "fp", "fn", "tp"))
SATISFACTION = RandomVariable(TWO_CLASS, [1.0, 0.0, 0.0, 1.0], "S")
# ground-truth and predicted class of each sample, 0 = negative, 1 = positive
GROUND_TRUTH = RandomVariable(TWO_CLASS, [0.0, 0.0, 1.0, 1.0], "Y")
PREDICTION = RandomVariable(TWO_CLASS, [0.0, 1.0, 0.0, 1.0], "Yhat")


def priorpos(p: Performance) -> float:
    return p["fn"] + p["tp"]


def priorneg(p: Performance) -> float:
    return p["tn"] + p["fp"]


def ratepos(p: Performance) -> float:
    return p["fp"] + p["tp"]


def rateneg(p: Performance) -> float:
    return p["tn"] + p["fn"]


def importance(tn: float, fp: float, fn: float, tp: float, name: str = "I") -> Importance:
    return Importance(TWO_CLASS, [tn, fp, fn, tp], name)


def two_class_ranking_score(tn: float, fp: float, fn: float, tp: float) -> Score:
    return ranking_score(importance(tn, fp, fn, tp, f"({tn:g},{fp:g},{fn:g},{tp:g})"), SATISFACTION)


# --- inverse standard normal CDF ------------------------------------------------
# Acklam's rational approximation (rel. error < 1.15e-9) followed by one Halley
# step against erfc, which brings the error down to a few ulps.

_A = np.array([-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
               1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00])
_B = np.array([-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
               6.680131188771972e01, -1.328068155288572e01])
_C = np.array([-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
               -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00])
_D = np.array([7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
               3.754408661907416e00])
_P_LOW = 0.02425


@njit(cache=True)
def probit(p):
    """Inverse of the standard normal CDF on the open interval (0, 1)."""
    if p <= 0.0 or p >= 1.0:
        return np.nan
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    else:
        q = math.sqrt(-2.0 * math.log1p(-p))
        x = -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
              / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    # Halley refinement; the residual is taken on the smaller tail for accuracy
    if x < 0.0:
        e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    else:
        e = (1.0 - p) - 0.5 * math.erfc(x / math.sqrt(2.0))
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


# --- kernels ---------------------------------------------------------------------
# p = (tn, fp, fn, tp)

@njit(cache=True)
def _accuracy(p, params):
    return p[0] + p[3]


@njit(cache=True)
def _f_beta(p, params):
    b2 = params[0]
    num = (1.0 + b2) * p[3]
    den = num + b2 * p[2] + p[1]
    if den == 0.0:
        return np.nan
    return num / den


@njit(cache=True)
def _npv(p, params):
    den = p[0] + p[2]
    return np.nan if den == 0.0 else p[0] / den


@njit(cache=True)
def _ppv(p, params):
    den = p[3] + p[1]
    return np.nan if den == 0.0 else p[3] / den


@njit(cache=True)
def _tnr(p, params):
    den = p[0] + p[1]
    return np.nan if den == 0.0 else p[0] / den


@njit(cache=True)
def _tpr(p, params):
    den = p[3] + p[2]
    return np.nan if den == 0.0 else p[3] / den


@njit(cache=True)
def _balanced_accuracy(p, params):
    neg = p[0] + p[1]
    pos = p[2] + p[3]
    if neg == 0.0 or pos == 0.0:
        return np.nan
    return 0.5 * (p[0] / neg + p[3] / pos)


@njit(cache=True)
def _kappa_chance(p, params):
    return (p[0] + p[1]) * (p[0] + p[2]) + (p[2] + p[3]) * (p[1] + p[3])


@njit(cache=True)
def _cohen_kappa(p, params):
    pe = (p[0] + p[1]) * (p[0] + p[2]) + (p[2] + p[3]) * (p[1] + p[3])
    den = 1.0 - pe
    if den == 0.0:
        return np.nan
    return (p[0] + p[3] - pe) / den


@njit(cache=True)
def _informedness(p, params):
    neg = p[0] + p[1]
    pos = p[2] + p[3]
    if neg == 0.0 or pos == 0.0:
        return np.nan
    return p[3] / pos + p[0] / neg - 1.0


@njit(cache=True)
def _plr(p, params):
    neg = p[0] + p[1]
    pos = p[2] + p[3]
    if neg == 0.0 or pos == 0.0 or p[1] == 0.0:
        return np.nan
    return (p[3] / pos) / (p[1] / neg)


@njit(cache=True)
def _nlr(p, params):
    neg = p[0] + p[1]
    pos = p[2] + p[3]
    if neg == 0.0 or pos == 0.0 or p[0] == 0.0:
        return np.nan
    return (p[2] / pos) / (p[0] / neg)


@njit(cache=True)
def _ptn(p, params):
    return p[0]


@njit(cache=True)
def _ptp(p, params):
    return p[3]


@njit(cache=True)
def _error_rate(p, params):
    return p[1] + p[2]


@njit(cache=True)
def _fdr(p, params):
    den = p[1] + p[3]
    return np.nan if den == 0.0 else p[1] / den


@njit(cache=True)
def _fnr(p, params):
    den = p[2] + p[3]
    return np.nan if den == 0.0 else p[2] / den


@njit(cache=True)
def _for(p, params):
    den = p[2] + p[0]
    return np.nan if den == 0.0 else p[2] / den


@njit(cache=True)
def _fpr(p, params):
    den = p[1] + p[0]
    return np.nan if den == 0.0 else p[1] / den


@njit(cache=True)
def _gmean_tnr_tpr(p, params):
    neg = p[0] + p[1]
    pos = p[2] + p[3]
    if neg == 0.0 or pos == 0.0:
        return np.nan
    return math.sqrt((p[0] / neg) * (p[3] / pos))


@njit(cache=True)
def _markedness(p, params):
    ppred = p[1] + p[3]
    npred = p[0] + p[2]
    if ppred == 0.0 or npred == 0.0:
        return np.nan
    return p[3] / ppred + p[0] / npred - 1.0


@njit(cache=True)
def _mcc(p, params):
    den = (p[3] + p[1]) * (p[3] + p[2]) * (p[0] + p[1]) * (p[0] + p[2])
    if den == 0.0:
        return np.nan
    return (p[3] * p[0] - p[1] * p[2]) / math.sqrt(den)


@njit(cache=True)
def _odds_ratio(p, params):
    den = p[1] * p[2]
    if den == 0.0:
        return np.nan
    return p[3] * p[0] / den


@njit(cache=True)
def _rate_positive_predictions(p, params):
    return p[1] + p[3]


@njit(cache=True)
def _d_prime(p, params):
    neg = p[0] + p[1]
    pos = p[2] + p[3]
    if neg == 0.0 or pos == 0.0:
        return np.nan
    tpr = p[3] / pos
    fpr = p[1] / neg
    if tpr <= 0.0 or tpr >= 1.0 or fpr <= 0.0 or fpr >= 1.0:
        return np.nan
    return probit(tpr) - probit(fpr)


@njit(cache=True)
def _fmi(p, params):
    ppred = p[3] + p[1]
    pos = p[3] + p[2]
    if ppred == 0.0 or pos == 0.0:
        return np.nan
    return math.sqrt((p[3] / ppred) * (p[3] / pos))


def _score(name: str, kernel, params=()) -> Score:
    return Score(name, TWO_CLASS, kernel, np.array(params, dtype=np.float64))


def fmi_score() -> Score:
    """Fowlkes-Mallows index, the geometric mean of PPV and TPR."""
    return _score("fmi", _fmi)


# --- catalog ---------------------------------------------------------------------


class Monotonicity(Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"


class Validity(Enum):
    ALWAYS = "always"
    FIXED_PRIORS_ONLY = "fixed-priors-only"
    NEVER = "never"


@dataclass(frozen=True)
class Equivalence:
    """Monotone link ``score = transform(R_I, prior)`` with ``I = importance(prior)``.

    ``prior`` is the positive prior, or ``None`` for links valid on all
    performances.
    """

    importance: Callable[[float | None], tuple[float, float, float, float]]
    monotonicity: Monotonicity
    validity: Validity
    transform: Callable[[np.ndarray, float | None], np.ndarray]

    def applies(self, prior: float | None) -> bool:
        if self.validity is Validity.ALWAYS:
            return True
        return self.validity is Validity.FIXED_PRIORS_ONLY and prior is not None

    def importance_for(self, prior: float | None) -> Importance:
        return importance(*self.importance(prior), name="I*")

    @property
    def sign(self) -> int:
        return 1 if self.monotonicity is Monotonicity.INCREASING else -1


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    label: str
    score: Score
    equivalence: Equivalence | None = None

    @property
    def monotonicity(self) -> Monotonicity | None:
        return None if self.equivalence is None else self.equivalence.monotonicity

    @property
    def constraint_validity(self) -> Validity:
        return Validity.NEVER if self.equivalence is None else self.equivalence.validity

    @property
    def expected_importance(self) -> Importance | None:
        """Importance of the always-valid link; prior-dependent links need :meth:`importance_for`."""
        if self.equivalence is None or self.equivalence.validity is not Validity.ALWAYS:
            return None
        return self.equivalence.importance_for(None)

    def importance_for(self, prior: float | None) -> Importance | None:
        if self.equivalence is None or not self.equivalence.applies(prior):
            return None
        return self.equivalence.importance_for(prior)


def _identity(r, prior):
    return r


def _complement(r, prior):
    return 1.0 - r


def _const(*values):
    return lambda prior: values


def _always(values, transform=_identity, monotonicity=Monotonicity.INCREASING) -> Equivalence:
    return Equivalence(_const(*values), monotonicity, Validity.ALWAYS, transform)


def _at_priors(importance_of, transform, monotonicity=Monotonicity.INCREASING) -> Equivalence:
    return Equivalence(importance_of, monotonicity, Validity.FIXED_PRIORS_ONLY, transform)


def _balanced_importance(prior):
    return (prior, prior, 1.0 - prior, 1.0 - prior)


def _kappa_importance(prior):
    pos, neg = prior, 1.0 - prior
    d = neg * neg + pos * pos
    return (pos * pos / d, 0.5, 0.5, neg * neg / d)


def _kappa_transform(r, prior):
    pos, neg = prior, 1.0 - prior
    return (r - 2.0 * neg * pos) / (neg * neg + pos * pos)


def _nlr_transform(r, prior):
    # the shorter form (1 - r) / r omits the positive factor neg / pos and holds only at prior 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        return ((1.0 - prior) / prior) * (1.0 - r) / r


def _plr_transform(r, prior):
    with np.errstate(divide="ignore", invalid="ignore"):
        return ((1.0 - prior) / prior) * r / (1.0 - r)


_UNIFORM = (0.5, 0.5, 0.5, 0.5)
_PPV_I = (0.0, 1.0, 0.0, 1.0)
_NPV_I = (1.0, 0.0, 1.0, 0.0)
_TNR_I = (1.0, 1.0, 0.0, 0.0)
_TPR_I = (0.0, 0.0, 1.0, 1.0)

_DEC = Monotonicity.DECREASING


def _build_catalog() -> tuple[CatalogEntry, ...]:
    e = CatalogEntry
    return (
        e("accuracy", "Accuracy", _score("accuracy", _accuracy), _always(_UNIFORM)),
        e("f0.5", "F-score for beta=0.5", _score("f0.5", _f_beta, [0.25]),
          _always((0.0, 0.8, 0.2, 1.0))),
        e("f1", "F-score for beta=1.0", _score("f1", _f_beta, [1.0]), _always((0.0, 0.5, 0.5, 1.0))),
        e("f2", "F-score for beta=2.0", _score("f2", _f_beta, [4.0]), _always((0.0, 0.2, 0.8, 1.0))),
        e("npv", "Negative Predictive Value (NPV)", _score("npv", _npv), _always(_NPV_I)),
        e("ppv", "Positive Predictive Value (PPV)", _score("ppv", _ppv), _always(_PPV_I)),
        e("tnr", "True Negative Rate (TNR)", _score("tnr", _tnr), _always(_TNR_I)),
        e("tpr", "True Positive Rate (TPR)", _score("tpr", _tpr), _always(_TPR_I)),
        e("balanced_accuracy", "Balanced Accuracy", _score("balanced_accuracy", _balanced_accuracy),
          _at_priors(_balanced_importance, _identity)),
        e("cohen_kappa", "Cohen's kappa", _score("cohen_kappa", _cohen_kappa),
          _at_priors(_kappa_importance, _kappa_transform)),
        e("informedness", "Informedness", _score("informedness", _informedness),
          _at_priors(_balanced_importance, lambda r, prior: 2.0 * r - 1.0)),
        e("plr", "Positive Likelihood Ratio (PLR)", _score("plr", _plr),
          _at_priors(_const(*_PPV_I), _plr_transform)),
        e("ptn", "Probability of True Negative (PTN)", _score("ptn", _ptn),
          _at_priors(_const(*_TNR_I), lambda r, prior: (1.0 - prior) * r)),
        e("ptp", "Probability of True Positive (PTP)", _score("ptp", _ptp),
          _at_priors(_const(*_TPR_I), lambda r, prior: prior * r)),
        e("kappa_chance", "Chance in Cohen's kappa", _score("kappa_chance", _kappa_chance)),
        e("error_rate", "Error Rate", _score("error_rate", _error_rate),
          _always(_UNIFORM, _complement, _DEC)),
        e("fdr", "False Discovery Rate (FDR)", _score("fdr", _fdr), _always(_PPV_I, _complement, _DEC)),
        e("fnr", "False Negative Rate (FNR)", _score("fnr", _fnr), _always(_TPR_I, _complement, _DEC)),
        e("for", "False Omission Rate (FOR)", _score("for", _for), _always(_NPV_I, _complement, _DEC)),
        e("fpr", "False Positive Rate (FPR)", _score("fpr", _fpr), _always(_TNR_I, _complement, _DEC)),
        e("gmean_tnr_tpr", "Geometric mean of TNR and TPR", _score("gmean_tnr_tpr", _gmean_tnr_tpr)),
        e("markedness", "Markedness", _score("markedness", _markedness)),
        e("mcc", "Matthews Correlation Coefficient (MCC)", _score("mcc", _mcc)),
        e("nlr", "Negative Likelihood Ratio (NLR)", _score("nlr", _nlr),
          _at_priors(_const(*_NPV_I), _nlr_transform, _DEC)),
        e("odds_ratio", "Odds Ratio (OR)", _score("odds_ratio", _odds_ratio)),
        e("rate_positive_predictions", "Rate of positive predictions",
          _score("rate_positive_predictions", _rate_positive_predictions)),
        e("d_prime", "Sensitivity Index Estimate (d')", _score("d_prime", _d_prime)),
    )


_CATALOG = _build_catalog()
_BY_NAME = {entry.name: entry for entry in _CATALOG}

SCORE_NAMES = tuple(_BY_NAME)


def catalog() -> list[CatalogEntry]:
    return list(_CATALOG)


def get_entry(name: str) -> CatalogEntry:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown score {name!r}; known: {', '.join(SCORE_NAMES)}") from None


def get_score(name: str) -> Score:
    if name == "fmi":
        return fmi_score()
    return get_entry(name).score


def eval_score(name: str, p: Performance):
    """Evaluate a catalog score by name; returns ``OUT_OF_DOMAIN`` outside its domain."""
    return get_score(name)(p)


# --- equivalence checks -------------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceCheck:
    name: str
    kind: str  # "identity" or "closed-form"
    max_abs_deviation: float
    points_compared: int
    domain_mismatches: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.domain_mismatches == 0 and self.max_abs_deviation <= self.tolerance


def check_equivalence(entry: CatalogEntry, probs: np.ndarray, prior: float | None,
                      identity_tol: float = ABS_TOL, closed_form_tol: float = 1e-9) -> EquivalenceCheck:
    """Compare a catalog score with its declared transform of ``R_I`` on ``probs``."""
    eq = entry.equivalence
    if eq is None or not eq.applies(prior):
        raise ValueError(f"{entry.name} has no equivalence valid for prior={prior}")
    r_vals, r_ok = ranking_score(eq.importance_for(prior), SATISFACTION).evaluate(probs)
    x_vals, x_ok = entry.score.evaluate(probs)
    identity = eq.transform is _identity
    with np.errstate(all="ignore"):
        t_vals = np.asarray(eq.transform(r_vals, prior), dtype=np.float64)
    t_ok = r_ok & np.isfinite(t_vals)
    both = x_ok & t_ok
    dev = np.abs(x_vals[both] - t_vals[both])
    # the score and the transformed ranking score must share their domain
    mismatches = int(np.count_nonzero(x_ok != t_ok))
    return EquivalenceCheck(
        name=entry.name,
        kind="identity" if identity else "closed-form",
        max_abs_deviation=float(dev.max()) if dev.size else 0.0,
        points_compared=int(both.sum()),
        domain_mismatches=mismatches,
        tolerance=identity_tol if identity else closed_form_tol,
    )


def verify_importance_equivalences(grid) -> list[EquivalenceCheck]:
    """Check every declared equivalence that applies to the grid's constraint set."""
    prior = grid.constraint.prior
    return [check_equivalence(entry, grid.probs, prior)
            for entry in _CATALOG
            if entry.equivalence is not None and entry.equivalence.applies(prior)]


def importance_to_ab(values) -> tuple[float, float]:
    """Map a two-class importance to the per-face ratios ``(a, b)``.

    ``a = I(tp) / (I(tn) + I(tp))`` and ``b = I(fn) / (I(fp) + I(fn))``; a face
    with zero total importance maps to 0.
    """
    tn, fp, fn, tp = (float(v) for v in values)
    a = tp / (tn + tp) if tn + tp > 0 else 0.0
    b = fn / (fp + fn) if fp + fn > 0 else 0.0
    return a, b


def ab_to_importance(a: float, b: float) -> Importance:
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise ValueError(f"(a, b) = ({a}, {b}) outside the unit square")
    return importance(1.0 - a, 1.0 - b, b, a, name=f"I(a={a:.6g},b={b:.6g})")
