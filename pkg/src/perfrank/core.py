"""Finite sample spaces, performances, random variables and scores.

A performance is a probability vector over a finite, ordered sample space.
Scores map performances to reals on an explicit domain; outside it they
return :data:`OUT_OF_DOMAIN` instead of a number.

Every score is backed by a scalar numba kernel ``kernel(p, params) -> float``
where NaN is the internal code for "outside the domain". Batch evaluation
and the pair loops of :mod:`perfrank.audit` run on these kernels. Scores
built from arbitrary Python callables fall back to numpy.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "ABS_TOL",
    "NORMALIZE_TOL",
    "MAX_LABELS",
    "OUT_OF_DOMAIN",
    "OutOfDomain",
    "DomainError",
    "SampleSpace",
    "Performance",
    "RandomVariable",
    "Importance",
    "Score",
    "expected_value_score",
    "probabilistic_score",
    "ranking_score",
    "filter_performance",
    "satisfaction_range_holds",
]

ABS_TOL = 1e-12
NORMALIZE_TOL = 1e-9
MAX_LABELS = 64


class DomainError(ValueError):
    """An operation was applied to a performance outside its domain."""


class OutOfDomain:
    """Singleton marker returned when a score is undefined at a performance."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "OUT_OF_DOMAIN"

    def __bool__(self) -> bool:
        return False

    def __reduce__(self):
        return (OutOfDomain, ())


OUT_OF_DOMAIN = OutOfDomain()


@dataclass(frozen=True)
class SampleSpace:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(label) for label in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValueError("a sample space needs at least one label")
        if any(not label for label in labels):
            raise ValueError("labels must be non-empty strings")
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate labels in {labels}")
        if len(labels) > MAX_LABELS:
            raise ValueError(f"at most {MAX_LABELS} labels are supported, got {len(labels)}")

    @property
    def size(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown label {label!r}; space has {self.labels}") from None

    def event(self, labels: Iterable[str] | int) -> int:
        """Return the bitmask of an event given as labels (or pass a mask through)."""
        if isinstance(labels, (int, np.integer)):
            mask = int(labels)
            if mask < 0 or mask >> self.size:
                raise ValueError(f"event mask {mask:#x} out of range for {self.size} labels")
            return mask
        if isinstance(labels, str):
            labels = [labels]
        mask = 0
        for label in labels:
            mask |= 1 << self.index(label)
        return mask

    def event_labels(self, mask: int) -> tuple[str, ...]:
        return tuple(label for i, label in enumerate(self.labels) if mask >> i & 1)

    def event_indicator(self, event: Iterable[str] | int) -> np.ndarray:
        mask = self.event(event)
        return np.array([(mask >> i) & 1 for i in range(self.size)], dtype=np.float64)

    @property
    def full_event(self) -> int:
        return (1 << self.size) - 1


def _as_vector(values, size: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.shape != (size,):
        raise ValueError(f"{what} needs {size} entries, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Performance:
    """A probability measure on a finite sample space.

    Inputs whose total deviates from 1 by at most ``NORMALIZE_TOL`` are
    renormalized; larger deviations and negative entries are rejected.
    Equality is bitwise equality of the probability vectors.
    """

    space: SampleSpace
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64).reshape(-1)
        if probs.shape != (self.space.size,):
            raise ValueError(f"expected {self.space.size} probabilities, got {probs.shape[0]}")
        if not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite")
        if np.any(probs < 0):
            raise ValueError(f"negative probability in {probs.tolist()}")
        total = probs.sum()
        if abs(total - 1.0) > NORMALIZE_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        if total != 1.0:
            probs = probs / total
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_mapping(cls, space: SampleSpace, mapping: dict[str, float]) -> Performance:
        probs = np.zeros(space.size)
        for label, value in mapping.items():
            probs[space.index(label)] = value
        return cls(space, probs)

    def probability(self, event: Iterable[str] | int) -> float:
        return float(self.space.event_indicator(event) @ self.probs)

    def __getitem__(self, label: str) -> float:
        return float(self.probs[self.space.index(label)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Performance):
            return NotImplemented
        return self.space == other.space and self.probs.tobytes() == other.probs.tobytes()

    def __hash__(self) -> int:
        return hash((self.space, self.probs.tobytes()))

    def __repr__(self) -> str:
        body = ", ".join(f"{lab}={p:.6g}" for lab, p in zip(self.space.labels, self.probs))
        return f"Performance({body})"

    def mix(self, other: Performance, lam: float) -> Performance:
        """Convex combination ``lam * self + (1 - lam) * other``."""
        _check_same_space(self.space, other.space)
        if not 0.0 <= lam <= 1.0:
            raise ValueError("mixing weight must lie in [0, 1]")
        return Performance(self.space, lam * self.probs + (1.0 - lam) * other.probs)


def _check_same_space(a: SampleSpace, b: SampleSpace) -> None:
    if a != b:
        raise ValueError(f"sample spaces differ: {a.labels} vs {b.labels}")


@dataclass(frozen=True, eq=False, repr=False)
class RandomVariable:
    space: SampleSpace
    values: np.ndarray
    name: str = "V"

    def __post_init__(self):
        object.__setattr__(self, "values", _as_vector(self.values, self.space.size, "random variable"))

    def __call__(self, label: str) -> float:
        return float(self.values[self.space.index(label)])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RandomVariable):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.space, self.values.tobytes()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name}: {dict(zip(self.space.labels, self.values.tolist()))})"

    @property
    def min(self) -> float:
        return float(self.values.min())

    @property
    def max(self) -> float:
        return float(self.values.max())

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.values == 0.0) | (self.values == 1.0)))

    def expectation(self, p: Performance) -> float:
        _check_same_space(self.space, p.space)
        return float(self.values @ p.probs)

    def scaled(self, factor: float) -> RandomVariable:
        return type(self)(self.space, self.values * factor, f"{factor:g}*{self.name}")

    def affine(self, alpha: float, beta: float) -> RandomVariable:
        return RandomVariable(self.space, alpha * self.values + beta, f"{alpha:g}*{self.name}+{beta:g}")


@dataclass(frozen=True, eq=False, repr=False)
class Importance(RandomVariable):
    """Non-negative random variable that is not identically zero."""

    name: str = "I"

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values < 0):
            raise ValueError(f"importance must be non-negative, got {self.values.tolist()}")
        if not np.any(self.values > 0):
            raise ValueError("importance must not be identically zero")


# --- kernels -----------------------------------------------------------------
# Signature: kernel(p: float64[::1], params: float64[::1]) -> float64, NaN = outside domain.


@njit(cache=True)
def _expected_kernel(p, params):
    total = 0.0
    for i in range(p.shape[0]):
        total += params[i] * p[i]
    return total


@njit(cache=True)
def _probabilistic_kernel(p, params):
    k = p.shape[0]
    num = 0.0
    den = 0.0
    for i in range(k):
        if params[k + i] != 0.0:
            den += p[i]
            if params[i] != 0.0:
                num += p[i]
    if den == 0.0:
        return np.nan
    return num / den


@njit(cache=True)
def _ranking_kernel(p, params):
    k = p.shape[0]
    num = 0.0
    den = 0.0
    for i in range(k):
        w = params[i] * p[i]
        den += w
        num += w * params[k + i]
    if den == 0.0:
        return np.nan
    return num / den


@njit  # not cached: the kernel argument makes the on-disk cache unreliable
def _eval_rows(kernel, params, probs):
    n = probs.shape[0]
    out = np.empty(n)
    for i in range(n):
        out[i] = kernel(probs[i], params)
    return out


_EMPTY = np.empty(0)


@dataclass(frozen=True, eq=False)
class Score:
    """A named partial function from performances to reals.

    Exactly one of ``kernel`` (numba scalar kernel plus ``params``) or
    ``func`` (vectorized callable mapping an ``(n, k)`` array to ``n`` values,
    NaN outside the domain) must be given.
    """

    name: str
    space: SampleSpace
    kernel: Callable | None = None
    params: np.ndarray = field(default=_EMPTY)
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if (self.kernel is None) == (self.func is None):
            raise ValueError("provide exactly one of kernel or func")
        # kept writable: numba specializes separately on read-only arrays
        object.__setattr__(self, "params", np.array(self.params, dtype=np.float64))

    def __repr__(self) -> str:
        return f"Score({self.name!r})"

    def raw(self, probs: np.ndarray) -> np.ndarray:
        """Values on an ``(n, k)`` array with NaN marking out-of-domain rows."""
        probs = np.require(probs, np.float64, ["C", "W"])
        if probs.ndim != 2 or probs.shape[1] != self.space.size:
            raise ValueError(f"expected an (n, {self.space.size}) array, got {probs.shape}")
        if self.kernel is not None:
            return _eval_rows(self.kernel, self.params, probs)
        return np.asarray(self.func(probs), dtype=np.float64).reshape(probs.shape[0])

    def evaluate(self, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(values, in_domain)`` for a batch of probability vectors."""
        values = self.raw(probs)
        return values, ~np.isnan(values)

    def __call__(self, p: Performance) -> float | OutOfDomain:
        _check_same_space(self.space, p.space)
        value = float(self.raw(p.probs[None, :])[0])
        if math.isnan(value):
            return OUT_OF_DOMAIN
        return value

    def in_domain(self, p: Performance) -> bool:
        return self(p) is not OUT_OF_DOMAIN

    def negated(self) -> Score:
        base = self
        return Score(f"-{self.name}", self.space, func=lambda probs: -base.raw(probs))

    @classmethod
    def from_function(cls, name: str, space: SampleSpace,
                      fn: Callable[[np.ndarray], float | None]) -> Score:
        """Wrap a per-performance Python function returning ``None`` outside its domain."""

        def batch(probs):
            out = np.empty(probs.shape[0])
            for i, row in enumerate(probs):
                value = fn(row)
                out[i] = np.nan if value is None else value
            return out

        return cls(name, space, func=batch)


def expected_value_score(v: RandomVariable) -> Score:
    return Score(f"E[{v.name}]", v.space, _expected_kernel, v.values)


def probabilistic_score(space: SampleSpace, e1, e2) -> Score:
    """Conditional probability ``P(e1 | e2)`` for nested events ``e1 ⊊ e2``."""
    m1, m2 = space.event(e1), space.event(e2)
    if m1 == 0:
        raise ValueError("the first event must be non-empty")
    if m1 & ~m2 or m1 == m2:
        raise ValueError("the first event must be a strict subset of the second")
    params = np.concatenate([space.event_indicator(m1), space.event_indicator(m2)])
    name = "P({%s}|{%s})" % (",".join(space.event_labels(m1)), ",".join(space.event_labels(m2)))
    return Score(name, space, _probabilistic_kernel, params)


def ranking_score(importance: RandomVariable, satisfaction: RandomVariable) -> Score:
    """Importance-weighted expected satisfaction ``E[I S] / E[I]``."""
    _check_same_space(importance.space, satisfaction.space)
    if not isinstance(importance, Importance):
        importance = Importance(importance.space, importance.values, importance.name)
    params = np.concatenate([importance.values, satisfaction.values])
    return Score(f"R[{importance.name}]", importance.space, _ranking_kernel, params)


def filter_performance(importance: RandomVariable, p: Performance) -> Performance:
    """Reweight ``p`` by ``importance`` and renormalize."""
    _check_same_space(importance.space, p.space)
    weighted = p.probs * importance.values
    total = weighted.sum()
    if total == 0.0:
        raise DomainError("E_P[I] = 0: the filtered performance is undefined")
    return Performance(p.space, weighted / total)


def satisfaction_range_holds(score: Score, satisfaction: RandomVariable,
                             probs: np.ndarray, tol: float = ABS_TOL) -> bool:
    """Check ``min S <= X(P) <= max S`` over the support of each in-domain row.

    This is the sufficient condition for compatibility with the satisfaction;
    taking the support as the event is the tightest instance of it.
    """
    values, ok = score.evaluate(probs)
    support = np.asarray(probs) > 0
    s = satisfaction.values
    lo = np.where(support, s, np.inf).min(axis=1)
    hi = np.where(support, s, -np.inf).max(axis=1)
    return bool(np.all((values[ok] >= lo[ok] - tol) & (values[ok] <= hi[ok] + tol)))


def random_performances(space: SampleSpace, n: int, rng: np.random.Generator,
                        sparsity: float = 0.0) -> np.ndarray:
    """Draw ``n`` probability vectors, uniform on the simplex.

    With ``sparsity > 0`` each entry is zeroed with that probability (at
    least one entry is kept), which exercises faces of the simplex.
    """
    probs = rng.dirichlet(np.ones(space.size), size=n)
    if sparsity > 0:
        keep = rng.random(probs.shape) >= sparsity
        keep[np.arange(n), rng.integers(0, space.size, n)] = True
        probs = probs * keep
        probs /= probs.sum(axis=1, keepdims=True)
    return probs


def as_probs(points: Sequence[Performance] | np.ndarray) -> np.ndarray:
    if isinstance(points, np.ndarray):
        return np.ascontiguousarray(points, dtype=np.float64)
    return np.ascontiguousarray(np.array([p.probs for p in points], dtype=np.float64))
