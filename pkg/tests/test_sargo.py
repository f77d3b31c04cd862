import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from citefn.corpus import AnnotationRecord
from citefn.sargo import (
    AggregationDecision,
    ConflictError,
    ConfusionCounts,
    EvaluationMatrix,
    IncompleteAdjudicationError,
    IncompleteMatrixError,
    PairMismatchError,
    SargoError,
    Verdict,
    apply_decisions,
    auto_match,
    load_decisions,
    save_decisions,
    score_pair,
    total_counts,
)
from helpers import (
    FRISCH_PAIR,
    TSOLIS_PAIR,
    completed_matrix,
    frisch_decisions,
    frisch_records,
    random_adjudication,
    tsolis_decisions,
    tsolis_records,
)


def rows_for(matrix, category, assessment=None):
    rows = [r for r in matrix.rows if r.category == category]
    if assessment:
        rows = [r for r in rows if r.assessment == assessment]
    return rows


# -- auto_match ----------------------------------------------------------------


def test_auto_match_tools_reference_case():
    gold, machine = tsolis_records()
    matrix = auto_match(gold, machine)
    tp_tools = rows_for(matrix, "tools", "TP")
    assert {r.machine_values[0] for r in tp_tools} == {"BLAST", "MUMmer"}
    assert matrix.unresolved_gold["tools"] == ["COG"]
    assert matrix.unresolved_machine["tools"] == ["GLIMMER"]


def test_auto_match_identical_sets_all_tp():
    gold = AnnotationRecord("p", "consensus", True, ["alignment"], ["BLAST", "MUMmer"])
    machine = AnnotationRecord("p", "machine", True, ["Alignment"], ["blast", "mummer"])
    matrix = auto_match(gold, machine)
    assert matrix.complete
    assert len(rows_for(matrix, "tools", "TP")) == 2
    assert len(rows_for(matrix, "use_cases", "TP")) == 1


def test_auto_match_data_accessed_truth_table():
    cases = [
        (True, True, "TP"),
        (True, False, "FN"),
        (False, True, "FP"),
        (False, False, "TN"),
    ]
    for gold_flag, machine_flag, expected in cases:
        gold = AnnotationRecord("p", "consensus", gold_flag, [], [])
        machine = AnnotationRecord("p", "machine", machine_flag, [], [])
        matrix = auto_match(gold, machine)
        (da_row,) = rows_for(matrix, "data_accessed")
        assert da_row.assessment == expected, (gold_flag, machine_flag)


def test_auto_match_near_duplicates_stay_queued():
    # version-suffixed tool names are a reviewer call, not an auto match
    gold, machine = frisch_records()
    matrix = auto_match(gold, machine)
    assert "RAxML 8.2.11" in matrix.unresolved_gold["tools"]
    assert "RAxML" in matrix.unresolved_machine["tools"]


def test_auto_match_pair_and_origin_preconditions():
    gold, machine = frisch_records()
    with pytest.raises(PairMismatchError):
        auto_match(gold, AnnotationRecord("other", "machine", False))
    with pytest.raises(SargoError, match="consensus"):
        auto_match(
            AnnotationRecord(FRISCH_PAIR, "annotator-A", False),
            machine,
        )
    with pytest.raises(SargoError, match="machine"):
        auto_match(gold, AnnotationRecord(FRISCH_PAIR, "consensus", False))


# -- apply_decisions -----------------------------------------------------------


def test_frisch_aggregation_yields_single_tp():
    matrix = completed_matrix(frisch_records, frisch_decisions)
    agg_rows = [r for r in matrix.rows if r.direction == "machine-into-gold"]
    assert len(agg_rows) == 1
    row = agg_rows[0]
    assert row.assessment == "TP"
    assert row.gold_values == ("Outgroup in a phylogenetic analysis",)
    assert set(row.machine_values) == {
        "Outgroup selection in phylogenetic analysis",
        "Rooting of the phylogenetic tree",
    }


def test_tsolis_aggregation_yields_single_tp():
    matrix = completed_matrix(tsolis_records, tsolis_decisions)
    agg_rows = [r for r in matrix.rows if r.direction == "machine-into-gold"]
    assert len(agg_rows) == 1
    assert agg_rows[0].assessment == "TP"
    assert len(agg_rows[0].machine_values) == 3


def test_empty_queue_no_decisions_is_identity():
    gold = AnnotationRecord("p", "consensus", True, ["alignment"], ["BLAST"])
    machine = AnnotationRecord("p", "machine", True, ["alignment"], ["BLAST"])
    matrix = auto_match(gold, machine)
    done = apply_decisions(matrix, [], [])
    assert done.rows == matrix.rows
    assert done.complete


def test_overlapping_groups_conflict():
    gold, machine = frisch_records()
    matrix = auto_match(gold, machine)
    aggregations, verdicts = frisch_decisions()
    dup = AggregationDecision(
        FRISCH_PAIR,
        "use_cases",
        ("Outgroup selection in phylogenetic analysis", "Rooting of the phylogenetic tree"),
        "machine-into-gold",
        target_value="Outgroup in a molecular dating analysis",
    )
    with pytest.raises(ConflictError):
        apply_decisions(matrix, aggregations + [dup], verdicts)


def test_verdict_on_unknown_value_conflicts():
    gold = AnnotationRecord("p", "consensus", True, [], ["COG"])
    machine = AnnotationRecord("p", "machine", True, [], [])
    matrix = auto_match(gold, machine)
    with pytest.raises(ConflictError):
        apply_decisions(
            matrix, [], [Verdict("p", "tools", "gold", "never existed", "fn")]
        )


def test_unresolved_leftovers_rejected():
    gold, machine = frisch_records()
    matrix = auto_match(gold, machine)
    aggregations, verdicts = frisch_decisions()
    with pytest.raises(IncompleteAdjudicationError, match="VariScan"):
        apply_decisions(matrix, aggregations, [v for v in verdicts if v.value != "VariScan"])


def test_apply_decisions_does_not_mutate_input():
    gold, machine = frisch_records()
    matrix = auto_match(gold, machine)
    before_rows = list(matrix.rows)
    before_queue = {k: list(v) for k, v in matrix.unresolved_gold.items()}
    aggregations, verdicts = frisch_decisions()
    apply_decisions(matrix, aggregations, verdicts)
    assert matrix.rows == before_rows
    assert matrix.unresolved_gold == before_queue


def test_backwards_aggregation_scores_one_tp():
    gold = AnnotationRecord(
        "p", "consensus", True, ["sequencing of the genome", "annotation of the genome"], []
    )
    machine = AnnotationRecord("p", "machine", True, ["genome production"], [])
    matrix = auto_match(gold, machine)
    done = apply_decisions(
        matrix,
        [
            AggregationDecision(
                "p",
                "use_cases",
                ("sequencing of the genome", "annotation of the genome"),
                "gold-into-machine",
                target_value="genome production",
            )
        ],
        [],
    )
    counts = score_pair(done)
    assert counts["use_cases"] == ConfusionCounts(tp=1)
    (row,) = [r for r in done.rows if r.direction == "gold-into-machine"]
    assert len(row.gold_values) == 2 and row.machine_values == ("genome production",)


def test_group_without_counterpart_scores_once():
    machine_vals = ["spitball one", "spitball two"]
    gold = AnnotationRecord("p", "consensus", True, [], [])
    machine = AnnotationRecord("p", "machine", True, machine_vals, [])
    matrix = auto_match(gold, machine)
    done = apply_decisions(
        matrix,
        [AggregationDecision("p", "use_cases", tuple(machine_vals), "machine-into-gold", None)],
        [],
    )
    assert score_pair(done)["use_cases"] == ConfusionCounts(fp=1)


def test_aggregation_validation():
    with pytest.raises(SargoError, match="at least 2"):
        AggregationDecision("p", "use_cases", ("only one",), "machine-into-gold")
    with pytest.raises(SargoError, match="open-set"):
        AggregationDecision("p", "data_accessed", ("a", "b"), "machine-into-gold")
    with pytest.raises(SargoError, match="distinct"):
        AggregationDecision("p", "tools", ("x", " X "), "machine-into-gold")


def test_verdict_validation():
    with pytest.raises(SargoError, match="counterpart"):
        Verdict("p", "tools", "machine", "x", "match")
    with pytest.raises(SargoError, match="fp"):
        Verdict("p", "tools", "gold", "x", "fp")
    with pytest.raises(SargoError, match="fn"):
        Verdict("p", "tools", "machine", "x", "fn")


# -- score_pair ----------------------------------------------------------------


def test_frisch_matrix_scores_4_8_0():
    counts = score_pair(completed_matrix(frisch_records, frisch_decisions))
    assert counts["data_accessed"] == ConfusionCounts(tp=1)
    assert counts["tools"] == ConfusionCounts(tp=2, fn=7)
    assert counts["use_cases"] == ConfusionCounts(tp=1, fn=1)
    total = total_counts(counts)
    assert (total.relevant, total.retrieved) == (12, 4)
    assert total.tp == 4 and total.fn == 8 and total.fp == 0 and total.tn == 0


def test_tsolis_matrix_scores_4_1_1():
    counts = score_pair(completed_matrix(tsolis_records, tsolis_decisions))
    total = total_counts(counts)
    assert total.tp == 4 and total.fn == 1 and total.fp == 1
    assert counts["tools"] == ConfusionCounts(tp=2, fp=1, fn=1)


def test_all_empty_matrix_scores_zero():
    counts = score_pair(EvaluationMatrix(pair_id="p"))
    assert all(c == ConfusionCounts() for c in counts.values())


def test_incomplete_matrix_rejected():
    gold, machine = frisch_records()
    with pytest.raises(IncompleteMatrixError):
        score_pair(auto_match(gold, machine))


def test_confusion_counts_validation_and_addition():
    with pytest.raises(SargoError):
        ConfusionCounts(tp=-1)
    assert ConfusionCounts(tp=1, fn=2) + ConfusionCounts(tp=3, fp=1) == ConfusionCounts(
        tp=4, fp=1, fn=2
    )


# -- decisions file ------------------------------------------------------------


def test_decisions_file_roundtrip(tmp_path):
    path = tmp_path / "decisions.jsonl"
    by_pair = {
        FRISCH_PAIR: frisch_decisions(),
        TSOLIS_PAIR: tsolis_decisions(),
    }
    save_decisions(path, by_pair)
    loaded = load_decisions(path)
    assert loaded == by_pair


def test_decisions_file_rejects_duplicate_pair(tmp_path):
    path = tmp_path / "decisions.jsonl"
    save_decisions(path, {FRISCH_PAIR: frisch_decisions()})
    line = path.read_text()
    path.write_text(line + line)
    with pytest.raises(SargoError, match="twice"):
        load_decisions(path)


# -- invariants ----------------------------------------------------------------


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=150, deadline=None)
def test_sargo_bookkeeping_invariants(seed):
    matrix, stats = random_adjudication(random.Random(seed))
    counts = score_pair(matrix)
    for cat in ("use_cases", "tools"):
        c = counts[cat]
        assert c.tn == 0
        assert c.tp + c.fn == stats[cat]["gold_units"]
        assert c.tp + c.fp == stats[cat]["machine_units"]
        assert c.tp <= stats[cat]["gold_items"]
        if c.tp + c.fn:
            assert c.tp / (c.tp + c.fn) <= 1.0
        # conservation: every value sits in exactly one row
        gold_in_rows = sum(len(r.gold_values) for r in matrix.rows if r.category == cat)
        machine_in_rows = sum(len(r.machine_values) for r in matrix.rows if r.category == cat)
        assert gold_in_rows == stats[cat]["gold_items"]
        assert machine_in_rows == stats[cat]["machine_items"]
