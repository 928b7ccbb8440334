"""Command-line front end: ``perfrank {table1,audit,tau,rank,grid}``.

Exit codes: 0 on success, 1 when ``table1 --check`` finds a verdict that
differs from the published table, 2 on usage, parse or input errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from collections.abc import Sequence

from .audit import ConstraintSet, Counterexample, TestVerdict, audit_score, make_grid
from .core import NORMALIZE_TOL, Performance, Score
from .expr import ExpressionError, parse_expression
from .ordering import EntityRecord, rank_bounds
from .scores2c import SCORE_NAMES, TWO_CLASS, get_entry, get_score
from .table1 import CONSTRAINTS, AuditReport, build_table, verdict_mismatches
from .taucorr import TauResult, optimize_tau

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad input detected after argument parsing."""


# --- JSON ----------------------------------------------------------------------------------


def _json_float(value: float) -> str:
    if not math.isfinite(value):
        return "null"
    text = format(value, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON: insertion key order, floats with 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _json_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {dumps(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # numeric rows (NaN reloads as None) stay on one line
        if all(v is None or (isinstance(v, (int, float)) and not isinstance(v, bool)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# --- serialization helpers --------------------------------------------------------------------


def _constraint_dict(c: ConstraintSet) -> dict:
    return {"kind": c.kind, "prior": c.prior}


def _counterexample_dict(w: Counterexample) -> dict:
    out = {"test": w.test, "p1": [float(v) for v in w.p1], "p2": [float(v) for v in w.p2],
           "x1": w.x1, "x2": w.x2}
    if w.q is not None:
        out.update(lam=w.lam, q=[float(v) for v in w.q], xq=w.xq)
    out["margin"] = w.margin
    return out


def _verdict_dict(v: TestVerdict) -> dict:
    out = {"test1": v.test1, "test2": v.test2, "test3": v.test3}
    if v.counterexamples:
        out["counterexample"] = _counterexample_dict(v.counterexample)
        out["counterexamples"] = [_counterexample_dict(w) for w in v.counterexamples]
    return out


def _tau_dict(r: TauResult) -> dict:
    return {"tau": r.tau, "a": r.a, "b": r.b, "analytic": r.analytic, "importance": list(r.importance)}


def _tau_text(r: TauResult) -> str:
    if r.analytic:
        return f"{r.tau:.0f}†".replace("-0", "0")
    return f"{r.tau:.3f}"


def _vx(flag: bool) -> str:
    return "V" if flag else "X"


# --- table1 -------------------------------------------------------------------------------------


def _table1_json(rows: list[AuditReport], args) -> str:
    doc = {
        "resolution": args.resolution,
        "seed": args.seed,
        "constraints": [_constraint_dict(c) for c in CONSTRAINTS],
        "rows": [{
            "score": row.name,
            "label": row.label,
            "cells": [{
                "constraint": _constraint_dict(cell.constraint),
                "pattern": cell.verdict.pattern,
                **_verdict_dict(cell.verdict),
                "tau_min": _tau_dict(cell.tau_min),
                "tau_max": _tau_dict(cell.tau_max),
            } for cell in row.cells],
        } for row in rows],
    }
    return dumps(doc) + "\n"


def _table1_csv(rows: list[AuditReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["score", "constraint", "test1", "test2", "test3", "tau_min", "tau_min_analytic",
                     "tau_max", "tau_max_analytic"])
    for row in rows:
        for cell in row.cells:
            v = cell.verdict
            writer.writerow([row.name, cell.constraint.label, _vx(v.test1), _vx(v.test2), _vx(v.test3),
                             f"{cell.tau_min.tau:.3f}", int(cell.tau_min.analytic),
                             f"{cell.tau_max.tau:.3f}", int(cell.tau_max.analytic)])
    return buf.getvalue()


def _table1_markdown(rows: list[AuditReport]) -> str:
    head = ["score"]
    for c in CONSTRAINTS:
        tag = "all" if c.prior is None else f"π₊={c.prior:g}"
        head += [f"{tag} t1", "t2", "t3", "τ_min", "τ_max"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for row in rows:
        cells = [row.label]
        for cell in row.cells:
            v = cell.verdict
            cells += [_vx(v.test1), _vx(v.test2), _vx(v.test3), _tau_text(cell.tau_min), _tau_text(cell.tau_max)]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def cmd_table1(args) -> int:
    names = SCORE_NAMES
    if args.only:
        names = [n.strip() for chunk in args.only for n in chunk.split(",") if n.strip()]
        for n in names:
            get_entry(n)
    progress = None
    if args.verbose:
        def progress(name):
            print(f"auditing {name}", file=sys.stderr, flush=True)
    rows = build_table(names, resolution=args.resolution, seed=args.seed, progress=progress)
    render = {"json": lambda: _table1_json(rows, args), "csv": lambda: _table1_csv(rows),
              "markdown": lambda: _table1_markdown(rows)}[args.format]
    sys.stdout.write(render())
    if args.check:
        mismatches = verdict_mismatches(rows)
        for line in mismatches:
            print(f"mismatch: {line}", file=sys.stderr)
        if mismatches:
            return EXIT_MISMATCH
    return EXIT_OK


# --- audit / tau ------------------------------------------------------------------------------------


def _resolve_score(args) -> tuple[str, Score]:
    if args.expr is not None:
        return args.expr, parse_expression(args.expr).score()
    if args.score is None:
        raise UsageError("give --score NAME or --expr TEXT")
    try:
        return args.score, get_score(args.score)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _constraint(args) -> ConstraintSet:
    if args.prior is None:
        return ConstraintSet()
    try:
        return ConstraintSet(args.prior)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fmt_vec(v) -> str:
    return "(" + ", ".join(f"{x:.6g}" for x in v) + ")"


def cmd_audit(args) -> int:
    name, score = _resolve_score(args)
    constraint = _constraint(args)
    verdict = audit_score(score, constraint, resolution=args.resolution, seed=args.seed)
    if args.format == "json":
        doc = {"score": name, "constraint": _constraint_dict(constraint), **_verdict_dict(verdict)}
        sys.stdout.write(dumps(doc) + "\n")
    elif args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["score", "constraint", "test1", "test2", "test3"])
        writer.writerow([name, constraint.label, _vx(verdict.test1), _vx(verdict.test2), _vx(verdict.test3)])
        sys.stdout.write(buf.getvalue())
    else:
        lines = [f"score: {name}", f"constraint: {constraint.label}",
                 f"tests: {' '.join(verdict.pattern)}"]
        for w in verdict.counterexamples:
            lines.append(f"test {w.test} counterexample (margin {w.margin:.3g}):")
            lines.append(f"  P1 = {_fmt_vec(w.p1)}  X = {w.x1:.17g}")
            lines.append(f"  P2 = {_fmt_vec(w.p2)}  X = {w.x2:.17g}")
            if w.q is not None:
                lines.append(f"  Q = {w.lam:g}*P1 + {1 - w.lam:g}*P2 = {_fmt_vec(w.q)}  X = {w.xq:.17g}")
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_tau(args) -> int:
    name, score = _resolve_score(args)
    constraint = _constraint(args)
    grid = make_grid(constraint, args.resolution)
    equivalence = None
    if args.expr is None and args.score in SCORE_NAMES:
        equivalence = get_entry(args.score)
    result = optimize_tau(score, grid, args.objective, equivalence=equivalence,
                          analytic=not args.empirical)
    if args.format == "json":
        doc = {"score": name, "constraint": _constraint_dict(constraint), "objective": args.objective,
               **_tau_dict(result)}
        sys.stdout.write(dumps(doc) + "\n")
    elif args.format == "csv":
        sys.stdout.write("score,constraint,objective,tau,a,b,analytic,i_tn,i_fp,i_fn,i_tp\n")
        sys.stdout.write(",".join([name if "," not in name else f'"{name}"', constraint.label, args.objective,
                                   f"{result.tau:.17g}", f"{result.a:.17g}", f"{result.b:.17g}",
                                   str(int(result.analytic))] + [f"{v:.17g}" for v in result.importance]) + "\n")
    else:
        sys.stdout.write(f"score: {name}\nconstraint: {constraint.label}\nobjective: {args.objective}\n"
                         f"tau: {_tau_text(result)}  ({result.tau:.6f})\n"
                         f"a = {result.a:.6g}, b = {result.b:.6g}\n"
                         f"importance (tn, fp, fn, tp): {_fmt_vec(result.importance)}\n")
    return EXIT_OK


# --- rank --------------------------------------------------------------------------------------------

_RANK_COLUMNS = ["id", "p_tn", "p_fp", "p_fn", "p_tp"]


def _read_entities(path: str) -> list[EntityRecord]:
    try:
        handle = sys.stdin if path == "-" else open(path, newline="")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != _RANK_COLUMNS:
            raise UsageError(f"expected header {','.join(_RANK_COLUMNS)}, got {header}")
        entities, errors = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 5:
                errors.append(f"line {line_no}: expected 5 fields, got {len(row)}")
                continue
            try:
                probs = [float(cell) for cell in row[1:]]
            except ValueError:
                errors.append(f"line {line_no}: non-numeric probability in {row[1:]}")
                continue
            total = sum(probs)
            if any(p < 0 for p in probs) or not all(math.isfinite(p) for p in probs):
                errors.append(f"line {line_no} ({row[0]}): probabilities must be finite and non-negative")
                continue
            if abs(total - 1.0) > NORMALIZE_TOL:
                errors.append(f"line {line_no} ({row[0]}): probabilities sum to {total!r}, not 1")
                continue
            entities.append(EntityRecord(row[0].strip(), Performance(TWO_CLASS, probs)))
    if errors:
        raise UsageError("invalid rows:\n  " + "\n  ".join(errors))
    if not entities:
        raise UsageError("no entities to rank")
    return entities


def cmd_rank(args) -> int:
    name, score = _resolve_score(args)
    entities = _read_entities(args.input)
    try:
        bounds = rank_bounds(entities, score)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    order = sorted(range(len(entities)), key=lambda k: (bounds[entities[k].id].lower,
                                                        bounds[entities[k].id].upper, k))
    records = []
    for k in order:
        e = entities[k]
        b = bounds[e.id]
        value = score(e.performance)
        records.append({"id": e.id, "score": float(value) if b.in_domain else None,
                        "rank": b.rank, "lower": b.lower, "upper": b.upper,
                        "status": "ranked" if b.in_domain else "incomparable"})
    if args.format == "json":
        sys.stdout.write(dumps({"score": name, "entities": records}) + "\n")
    elif args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["id", "score", "rank", "lower", "upper", "status"])
        for r in records:
            writer.writerow([r["id"], "" if r["score"] is None else format(r["score"], ".17g"),
                             r["rank"], r["lower"], r["upper"], r["status"]])
        sys.stdout.write(buf.getvalue())
    else:
        lines = ["| id | score | rank | bounds | status |", "|---|---|---|---|---|"]
        for r in records:
            shown = "undefined" if r["score"] is None else f"{r['score']:.6g}"
            lines.append(f"| {r['id']} | {shown} | {r['rank']} | {r['lower']}–{r['upper']} | {r['status']} |")
        sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_grid(args) -> int:
    sys.stdout.write(make_grid(_constraint(args), args.resolution).to_csv())
    return EXIT_OK


# --- argument parsing -------------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="perfrank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=True):
        p.add_argument("--resolution", type=_positive_int, default=None,
                       help="grid resolution (default: 32 unconstrained, 80 at a fixed prior)")
        p.add_argument("--seed", type=int, default=0, help="seed of the pair subsample (default 0)")
        if formats:
            p.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")

    def constraint(p):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--prior", type=float, default=None, help="fix the positive prior")
        group.add_argument("--unconstrained", action="store_true", help="all performances (default)")

    def score(p):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--score", choices=None, metavar="NAME",
                           help="catalog score: " + ", ".join(SCORE_NAMES) + ", fmi")
        group.add_argument("--expr", metavar="TEXT", help="expression over ptn, pfp, pfn, ptp")

    p = sub.add_parser("table1", help="audit every catalog score under the three constraint sets")
    common(p)
    p.add_argument("--only", action="append", metavar="NAME", help="restrict to these scores (repeatable)")
    p.add_argument("--check", action="store_true", help="exit 1 if a verdict differs from the published table")
    p.add_argument("--verbose", action="store_true", help="report progress on stderr")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("audit", help="run the three tests on one score")
    score(p)
    constraint(p)
    common(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("tau", help="optimize Kendall's tau against ranking scores")
    score(p)
    constraint(p)
    common(p)
    p.add_argument("--objective", choices=("min", "max"), default="max")
    p.add_argument("--empirical", action="store_true", help="skip the analytic shortcut")
    p.set_defaults(func=cmd_tau)

    p = sub.add_parser("rank", help="rank entities from a CSV file (id,p_tn,p_fp,p_fn,p_tp)")
    p.add_argument("input", help="CSV file, or - for stdin")
    score(p)
    p.add_argument("--format", choices=("markdown", "csv", "json"), default="markdown")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("grid", help="export a performance grid as CSV")
    constraint(p)
    common(p, formats=False)
    p.set_defaults(func=cmd_grid)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExpressionError as exc:
        print(f"perfrank: cannot parse expression: {exc}", file=sys.stderr)
    except UsageError as exc:
        print(f"perfrank: {exc}", file=sys.stderr)
    except KeyError as exc:
        print(f"perfrank: {exc.args[0]}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
