"""Full audit of the two-class catalog and the published reference values.

:func:`build_table` runs the three tests and both τ searches for each
catalog score under three constraint sets: all performances, positive prior
0.2 and positive prior 0.5. :data:`GOLDEN` holds the published verdicts and
τ values for comparison.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass

from .audit import DEFAULT_LAMBDAS, DEFAULT_PAIR_POINTS, ConstraintSet, TestVerdict, audit_grid, make_grid
from .scores2c import SCORE_NAMES, get_entry
from .taucorr import TauResult, optimize_tau

__all__ = [
    "CONSTRAINTS",
    "GOLDEN",
    "GoldenTau",
    "GoldenCell",
    "CellResult",
    "AuditReport",
    "build_row",
    "build_table",
    "verdict_mismatches",
]

CONSTRAINTS = (ConstraintSet(None), ConstraintSet(0.2), ConstraintSet(0.5))


@dataclass(frozen=True)
class GoldenTau:
    """A published τ cell.

    ``raw`` is the number typeset in the source; for cells obtained
    theoretically (``analytic``) the displayed value is ``raw`` rounded to
    the nearest integer.
    """

    raw: float
    analytic: bool

    @property
    def value(self) -> float:
        return float(round(self.raw)) if self.analytic else self.raw


@dataclass(frozen=True)
class GoldenCell:
    pattern: str
    tau_min: GoldenTau
    tau_max: GoldenTau

    @property
    def verdict(self) -> tuple[bool, bool, bool]:
        return tuple(c == "V" for c in self.pattern)


# verdicts | tau_min | tau_max per constraint set; a trailing "!" marks a theoretical value
_GOLDEN_TEXT = """
accuracy                  VVV 0.469 0.982!    VVV 0.157 0.998!    VVV 0.505 0.995!
f0.5                      VVV 0.079 1.000!    VVV 0.451 1.000!    VVV 0.352 1.000!
f1                        VVV 0.161 0.994!    VVV 0.352 1.000!    VVV 0.194 1.000!
f2                        VVV 0.079 1.000!    VVV 0.194 1.000!    VVV 0.072 1.000!
npv                       VVV 0.000 1.000!    VVV 0.503 1.000!    VVV 0.503 1.000!
ppv                       VVV 0.000 1.000!    VVV 0.503 1.000!    VVV 0.503 1.000!
tnr                       VVV 0.000 1.000!    VVV 0.000 1.000!    VVV 0.000 1.000!
tpr                       VVV 0.000 1.000!    VVV 0.000 1.000!    VVV 0.000 1.000!
balanced_accuracy         VXX 0.486 0.713     VVV 0.504 0.997!    VVV 0.505 0.995!
cohen_kappa               XXX 0.476 0.697     VVV 0.503 1.000!    VVV 0.505 0.995!
informedness              VXX 0.486 0.713     VVV 0.504 0.997!    VVV 0.505 0.995!
plr                       VXX 0.420 0.677     VVV 0.491 1.000!    VVV 0.491 1.000!
ptn                       XVV -0.007 0.818    VVV 0.000 1.000!    VVV 0.000 1.000!
ptp                       XVV -0.006 0.818    VVV 0.000 1.000!    VVV 0.000 1.000!
kappa_chance              XXX 0.194 0.498     XVV -0.157 0.849    VVV -0.012! 0.008!
error_rate                XVV -0.982! -0.469  XVV -0.998! -0.157  XVV -0.995! -0.505
fdr                       XVV -1.000! 0.000   XVV -1.000! -0.503  XVV -1.000! -0.503
fnr                       XVV -1.000! 0.000   XVV -1.000! 0.000   XVV -1.000! 0.000
for                       XVV -1.000! 0.000   XVV -1.000! -0.503  XVV -1.000! -0.503
fpr                       XVV -1.000! 0.000   XVV -1.000! 0.000   XVV -1.000! 0.000
gmean_tnr_tpr             VXX 0.461 0.653     VXV 0.503 0.831     VXV 0.503 0.830
markedness                VXX 0.486 0.713     VXX 0.418 0.887     VXX 0.503 0.913
mcc                       VXX 0.503 0.746     VXX 0.458 0.944     VXX 0.503 0.963
nlr                       XXX -0.677 -0.418   XVV -1.000! -0.491  XVV -1.000! -0.491
odds_ratio                VXX 0.499 0.671     VXX 0.503 0.894     VXX 0.503 0.892
rate_positive_predictions XVV -0.469 0.469    XVV -0.849 0.157    XVV -0.504 0.505
d_prime                   VXX 0.502 0.786     VXX 0.503 0.926     VXX 0.503 0.924
"""


def _parse_tau(token: str) -> GoldenTau:
    return GoldenTau(float(token.rstrip("!")), token.endswith("!"))


def _parse_golden(text: str) -> dict[str, tuple[GoldenCell, ...]]:
    table = {}
    for line in text.strip().splitlines():
        name, *fields = line.split()
        cells = tuple(GoldenCell(fields[i], _parse_tau(fields[i + 1]), _parse_tau(fields[i + 2]))
                      for i in range(0, 9, 3))
        table[name] = cells
    return table


GOLDEN: dict[str, tuple[GoldenCell, ...]] = _parse_golden(_GOLDEN_TEXT)


# --- building the table -----------------------------------------------------------------


@dataclass(frozen=True)
class CellResult:
    constraint: ConstraintSet
    verdict: TestVerdict
    tau_min: TauResult
    tau_max: TauResult


@dataclass(frozen=True)
class AuditReport:
    """Verdicts and τ extremes of one score under each constraint set."""

    name: str
    label: str
    cells: tuple[CellResult, ...]


def build_row(name: str, constraints: Iterable[ConstraintSet] = CONSTRAINTS, *,
              resolution: int | None = None, seed: int = 0, lambdas=DEFAULT_LAMBDAS,
              max_points: int | None = DEFAULT_PAIR_POINTS) -> AuditReport:
    entry = get_entry(name)
    cells = []
    for constraint in constraints:
        grid = make_grid(constraint, resolution)
        verdict = audit_grid(entry.score, grid, lambdas, max_points=max_points, seed=seed)
        tau_min = optimize_tau(entry.score, grid, "min", equivalence=entry)
        tau_max = optimize_tau(entry.score, grid, "max", equivalence=entry)
        cells.append(CellResult(constraint, verdict, tau_min, tau_max))
    return AuditReport(entry.name, entry.label, tuple(cells))


def build_table(names: Iterable[str] | None = None, constraints: Iterable[ConstraintSet] = CONSTRAINTS, *,
                resolution: int | None = None, seed: int = 0, lambdas=DEFAULT_LAMBDAS,
                max_points: int | None = DEFAULT_PAIR_POINTS,
                progress: Callable[[str], None] | None = None) -> list[AuditReport]:
    """Audit catalog scores (all 27 by default) in catalog order."""
    names = SCORE_NAMES if names is None else tuple(names)
    constraints = tuple(constraints)
    rows = []
    for name in names:
        if progress is not None:
            progress(name)
        rows.append(build_row(name, constraints, resolution=resolution, seed=seed,
                              lambdas=lambdas, max_points=max_points))
    return rows


def verdict_mismatches(rows: Iterable[AuditReport]) -> list[str]:
    """Cells whose verdicts differ from the published ones (only the three default constraints)."""
    out = []
    for row in rows:
        golden = GOLDEN.get(row.name)
        if golden is None:
            continue
        for cell in row.cells:
            if cell.constraint not in CONSTRAINTS:
                continue
            expected = golden[CONSTRAINTS.index(cell.constraint)].pattern
            if cell.verdict.pattern != expected:
                out.append(f"{row.name} [{cell.constraint.label}]: got {cell.verdict.pattern}, "
                           f"expected {expected}")
    return out
