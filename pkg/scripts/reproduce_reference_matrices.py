#!/usr/bin/env python3
"""Rebuild the two reference per-publication evaluation matrices (the
Frisch and Tsolis pairs) from their gold/machine annotation records, apply
the reviewer decisions (including the use-case aggregations), and print the
resulting confusion matrices and metrics. Everything here is desk-checkable
arithmetic."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from citefn.corpus import AnnotationRecord
from citefn.metrics import compute_metrics
from citefn.sargo import (
    AggregationDecision,
    Verdict,
    apply_decisions,
    auto_match,
    score_pair,
    total_counts,
)


def frisch_case():
    pair_id = "frisch-2018:CP000046.1"
    gold = AnnotationRecord(
        pair_id, "consensus", True,
        use_cases=[
            "Outgroup in a molecular dating analysis",
            "Outgroup in a phylogenetic analysis",
        ],
        tools=[
            "BEAST 2.4.5", "ClonalFrameML", "gingr", "Interactive Tree of Life",
            "Parsnp", "PhyML", "R", "RAxML 8.2.11", "VariScan",
        ],
    )
    machine = AnnotationRecord(
        pair_id, "machine", True,
        use_cases=[
            "Outgroup selection in phylogenetic analysis",
            "Rooting of the phylogenetic tree",
        ],
        tools=["PhyML", "RAxML"],
    )
    aggregations = [
        AggregationDecision(
            pair_id, "use_cases",
            ("Outgroup selection in phylogenetic analysis", "Rooting of the phylogenetic tree"),
            "machine-into-gold",
            target_value="Outgroup in a phylogenetic analysis",
        )
    ]
    verdicts = [Verdict(pair_id, "tools", "machine", "RAxML", "match", counterpart="RAxML 8.2.11")]
    verdicts += [
        Verdict(pair_id, "tools", "gold", tool, "fn")
        for tool in ("BEAST 2.4.5", "ClonalFrameML", "gingr", "Interactive Tree of Life", "Parsnp", "R", "VariScan")
    ]
    verdicts.append(Verdict(pair_id, "use_cases", "gold", "Outgroup in a molecular dating analysis", "fn"))
    return gold, machine, aggregations, verdicts


def tsolis_case():
    pair_id = "tsolis-2009:NC_003317"
    gold = AnnotationRecord(
        pair_id, "consensus", True,
        use_cases=["Used in a comparative study of Brucella genomes to investigate veterinary pathogenicity"],
        tools=["COG", "BLAST", "MUMmer"],
    )
    machine = AnnotationRecord(
        pair_id, "machine", True,
        use_cases=[
            "comparative analysis of genomic features",
            "comparative best-match blastp searches",
            "suffix tree analysis using MUMmer",
        ],
        tools=["BLAST", "MUMmer", "GLIMMER"],
    )
    aggregations = [
        AggregationDecision(
            pair_id, "use_cases",
            (
                "comparative analysis of genomic features",
                "comparative best-match blastp searches",
                "suffix tree analysis using MUMmer",
            ),
            "machine-into-gold",
            target_value="Used in a comparative study of Brucella genomes to investigate veterinary pathogenicity",
        )
    ]
    verdicts = [
        Verdict(pair_id, "tools", "gold", "COG", "fn"),
        Verdict(pair_id, "tools", "machine", "GLIMMER", "fp"),
    ]
    return gold, machine, aggregations, verdicts


def show(case_name, gold, machine, aggregations, verdicts):
    matrix = apply_decisions(auto_match(gold, machine), aggregations, verdicts)
    counts = score_pair(matrix)
    total = total_counts(counts)
    metrics = compute_metrics(total).rounded()
    print(f"=== {case_name} ===")
    for row in matrix.rows:
        gold_side = " + ".join(row.gold_values) or "-"
        machine_side = " + ".join(row.machine_values) or "-"
        marker = f" [{row.direction}]" if row.direction != "none" else ""
        print(f"  {row.category:<14} {row.assessment:<3} gold: {gold_side} | machine: {machine_side}{marker}")
    print(f"  confusion: relevant-retrieved={total.tp} relevant-not-retrieved={total.fn} "
          f"irrelevant-retrieved={total.fp}")
    print(f"  metrics: P={metrics['precision']:.3f} R={metrics['recall']:.3f} F1={metrics['f1']:.3f}")
    print()


if __name__ == "__main__":
    show("Frisch et al. pair (CP000046.1)", *frisch_case())
    show("Tsolis et al. pair (NC_003317)", *tsolis_case())
