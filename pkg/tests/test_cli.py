import csv
import io
import json

import pytest

from perfrank.cli import dumps, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_dumps_is_stable():
    doc = {"b": 1, "a": [0.1, 1.0, 1e-5, float("nan")], "c": {"x": None, "y": True}, "d": []}
    text = dumps(doc)
    assert text.splitlines()[0] == "{" and '"b": 1,' in text
    assert '"a": [0.10000000000000001, 1.0, 1.0000000000000001e-05, null]' in text
    assert dumps(json.loads(text)) == text


def test_table1_subset_markdown(capsys):
    code, out, _ = run(capsys, "table1", "--only", "mcc", "--resolution", "8")
    assert code == 0
    rows = [line for line in out.splitlines() if line.startswith("| Matthews")]
    cells = [c.strip() for c in rows[0].strip("|").split("|")]
    assert len(rows) == 1 and cells[1:4] == ["V", "X", "X"]


def test_table1_check_passes_for_linear_scores_at_coarse_resolution(capsys):
    code, out, err = run(capsys, "table1", "--only", "accuracy,tpr", "--only", "error_rate",
                         "--resolution", "8", "--check", "--format", "csv")
    assert code == 0 and err == ""
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 9
    assert {r["score"] for r in rows} == {"accuracy", "tpr", "error_rate"}


def test_table1_check_reports_mismatch(capsys):
    # at resolution 2 the grid is too coarse to catch MCC's violations
    code, _, err = run(capsys, "table1", "--only", "mcc", "--resolution", "2", "--check")
    assert code == 1 and "mismatch: mcc" in err


def test_table1_json_round_trip(capsys):
    code, out, _ = run(capsys, "table1", "--only", "f1,kappa_chance", "--resolution", "6",
                       "--format", "json", "--seed", "3")
    assert code == 0
    doc = json.loads(out)
    assert doc["seed"] == 3 and [r["score"] for r in doc["rows"]] == ["f1", "kappa_chance"]
    cell = doc["rows"][0]["cells"][0]
    assert cell["pattern"] == "VVV" and cell["tau_max"]["analytic"] and cell["tau_max"]["tau"] == 1.0
    assert dumps(doc) + "\n" == out
    again = run(capsys, "table1", "--only", "f1,kappa_chance", "--resolution", "6", "--format", "json",
                "--seed", "3")[1]
    assert again == out


def test_unknown_score_exit_2(capsys):
    code, _, err = run(capsys, "table1", "--only", "nope")
    assert code == 2 and "unknown score" in err
    code, _, err = run(capsys, "audit", "--score", "nope")
    assert code == 2


def test_audit_examples(capsys):
    code, out, _ = run(capsys, "audit", "--score", "odds_ratio", "--prior", "0.5", "--resolution", "20",
                       "--format", "json")
    doc = json.loads(out)
    assert code == 0 and (doc["test1"], doc["test2"], doc["test3"]) == (True, False, False)
    assert doc["counterexample"]["test"] == 2 and len(doc["counterexamples"]) == 2
    assert doc["constraint"] == {"kind": "fixed_positive_prior", "prior": 0.5}
    builtin = run(capsys, "audit", "--score", "ppv", "--resolution", "12", "--format", "csv")[1]
    expr = run(capsys, "audit", "--expr", "ptp/(ptp+pfp)", "--resolution", "12", "--format", "csv")[1]
    assert builtin.splitlines()[1].split(",")[1:] == expr.splitlines()[1].split(",")[1:]


def test_audit_fmi_expression_finds_witness(capsys):
    code, out, _ = run(capsys, "audit", "--expr", "sqrt((ptp/(pfp+ptp))*(ptp/(pfn+ptp)))")
    assert code == 0
    assert "tests: V" in out and "X" in out.splitlines()[2]
    assert "counterexample" in out


def test_audit_parse_error(capsys):
    code, out, err = run(capsys, "audit", "--expr", "ptp/(ptp+")
    assert code == 2 and out == ""
    assert "column 10" in err and err.rstrip().endswith("^")


def test_usage_errors(capsys):
    assert run(capsys, "audit")[0] == 2
    assert run(capsys, "audit", "--score", "ppv", "--prior", "1.5")[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["audit", "--score", "ppv", "--prior", "0.2", "--unconstrained"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        main(["table1", "--resolution", "0"])


def test_tau_examples(capsys):
    code, out, _ = run(capsys, "tau", "--score", "f1", "--objective", "max", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["tau"] == 1.0 and doc["importance"] == [0.0, 0.5, 0.5, 1.0]
    doc = json.loads(run(capsys, "tau", "--score", "tnr", "--objective", "min", "--format", "json",
                         "--resolution", "16")[1])
    assert abs(doc["tau"]) < 0.05
    doc = json.loads(run(capsys, "tau", "--score", "balanced_accuracy", "--prior", "0.2", "--format", "json",
                         "--resolution", "40", "--empirical")[1])
    assert doc["tau"] >= 0.99 and not doc["analytic"]
    code, out, _ = run(capsys, "tau", "--score", "fmi", "--resolution", "8")
    assert code == 0 and "tau:" in out


def test_rank_examples(tmp_path, capsys):
    path = tmp_path / "entities.csv"
    path.write_text("id,p_tn,p_fp,p_fn,p_tp\n"
                    "b,0.4,0.1,0.1,0.4\nc,0.3,0.1,0.1,0.5\na,0.45,0.05,0.05,0.45\n")
    code, out, _ = run(capsys, "rank", str(path), "--score", "accuracy", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0
    assert [(r["id"], r["rank"], r["lower"], r["upper"]) for r in rows] == \
        [("a", "1", "1", "1"), ("b", "2", "2", "3"), ("c", "2", "2", "3")]
    single = tmp_path / "one.csv"
    single.write_text("id,p_tn,p_fp,p_fn,p_tp\nsolo,0.25,0.25,0.25,0.25\n")
    assert "| solo | 0.5 | 1 | 1–1 | ranked |" in run(capsys, "rank", str(single), "--score", "accuracy")[1]


def test_rank_incomparable(tmp_path, capsys):
    path = tmp_path / "entities.csv"
    path.write_text("id,p_tn,p_fp,p_fn,p_tp\nin,0.2,0.2,0.3,0.3\nout,0.5,0.5,0,0\n")
    doc = json.loads(run(capsys, "rank", str(path), "--score", "tpr", "--format", "json")[1])
    out = [e for e in doc["entities"] if e["id"] == "out"][0]
    assert out == {"id": "out", "score": None, "rank": 1, "lower": 1, "upper": 1, "status": "incomparable"}


def test_rank_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,p_tn,p_fp,p_fn,p_tp\nx,0.5,0.5,0.5,0\ny,0.25,0.25,0.25,0.25\nz,a,b,c,d\nw,1,0\n")
    code, _, err = run(capsys, "rank", str(bad), "--score", "accuracy")
    assert code == 2
    assert "line 2 (x)" in err and "line 4" in err and "line 5" in err and "line 3" not in err
    header = tmp_path / "header.csv"
    header.write_text("name,a,b,c,d\n")
    assert run(capsys, "rank", str(header), "--score", "accuracy")[0] == 2
    assert run(capsys, "rank", str(tmp_path / "missing.csv"), "--score", "accuracy")[0] == 2
    dupes = tmp_path / "dupes.csv"
    dupes.write_text("id,p_tn,p_fp,p_fn,p_tp\nx,1,0,0,0\nx,0,0,0,1\n")
    code, _, err = run(capsys, "rank", str(dupes), "--score", "accuracy")
    assert code == 2 and "duplicate" in err


def test_rank_from_stdin(monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO("id,p_tn,p_fp,p_fn,p_tp\nq,0.1,0.2,0.3,0.4\n"))
    code, out, _ = run(capsys, "rank", "-", "--score", "f1", "--format", "csv")
    assert code == 0 and out.splitlines()[1].startswith("q,0.6153846153846")


def test_grid_export(capsys):
    code, out, _ = run(capsys, "grid", "--prior", "0.2", "--resolution", "2")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "p_tn,p_fp,p_fn,p_tp" and len(lines) == 10
