"""Shared fixtures: the two reference per-publication evaluation matrices
(as gold/machine record pairs plus the reviewer decisions that complete
them), a matching two-pair corpus, and a random adjudication generator for
fuzzing the scorer."""

import random

from citefn.corpus import AnnotationRecord, Corpus, Identifier, PairRecord, Publication
from citefn.sargo import (
    AggregationDecision,
    Verdict,
    apply_decisions,
    auto_match,
)

FRISCH_PAIR = "frisch-2018:CP000046.1"
TSOLIS_PAIR = "tsolis-2009:NC_003317"


def table_corpus() -> Corpus:
    frisch = PairRecord(
        pair_id=FRISCH_PAIR,
        publication=Publication(
            pub_id="PMC-frisch",
            title="Invasive MRSA genomics",
            publisher="Oxford",
            pub_year=2018,
        ),
        identifier=Identifier(
            accession="CP000046.1",
            identifier_class="nucleotide-sequence",
            source_db="National Center for Biotechnical Information (NCBI) GenBank Nucleotide Database",
            metadata={
                "record_kind": "Nucleotide Sequence",
                "content_description": "nucleotide sequence data",
                "organism": "Staphylococcus aureus COL",
                "taxon_domain": "Prokaryote",
                "species": "Staphylococcus aureus",
                "strain": "COL",
            },
        ),
    )
    tsolis = PairRecord(
        pair_id=TSOLIS_PAIR,
        publication=Publication(
            pub_id="PMC-tsolis",
            title="Genome degradation in Brucella ovis",
            publisher="PLOS",
            pub_year=2009,
        ),
        identifier=Identifier(
            accession="NC_003317",
            identifier_class="nucleotide-sequence",
            source_db="National Center for Biotechnical Information (NCBI) GenBank Nucleotide Database",
            metadata={
                "record_kind": "Nucleotide Sequence",
                "content_description": "nucleotide sequence data",
                "organism": "Brucella melitensis 16M",
                "taxon_domain": "Prokaryote",
                "species": "Brucella melitensis",
                "strain": "16M",
            },
        ),
    )
    return Corpus([frisch, tsolis])


def frisch_records():
    gold = AnnotationRecord(
        pair_id=FRISCH_PAIR,
        origin="consensus",
        data_accessed=True,
        use_cases=[
            "Outgroup in a molecular dating analysis",
            "Outgroup in a phylogenetic analysis",
        ],
        tools=[
            "BEAST 2.4.5",
            "ClonalFrameML",
            "gingr",
            "Interactive Tree of Life",
            "Parsnp",
            "PhyML",
            "R",
            "RAxML 8.2.11",
            "VariScan",
        ],
    )
    machine = AnnotationRecord(
        pair_id=FRISCH_PAIR,
        origin="machine",
        data_accessed=True,
        use_cases=[
            "Outgroup selection in phylogenetic analysis",
            "Rooting of the phylogenetic tree",
        ],
        tools=["PhyML", "RAxML"],
    )
    return gold, machine


def frisch_decisions():
    aggregations = [
        AggregationDecision(
            pair_id=FRISCH_PAIR,
            category="use_cases",
            member_values=(
                "Outgroup selection in phylogenetic analysis",
                "Rooting of the phylogenetic tree",
            ),
            direction="machine-into-gold",
            target_value="Outgroup in a phylogenetic analysis",
            decided_by="reviewer-1",
        )
    ]
    verdicts = [
        Verdict(FRISCH_PAIR, "tools", "machine", "RAxML", "match", counterpart="RAxML 8.2.11", decided_by="reviewer-1"),
        Verdict(FRISCH_PAIR, "use_cases", "gold", "Outgroup in a molecular dating analysis", "fn", decided_by="reviewer-1"),
    ]
    for tool in ("BEAST 2.4.5", "ClonalFrameML", "gingr", "Interactive Tree of Life", "Parsnp", "R", "VariScan"):
        verdicts.append(Verdict(FRISCH_PAIR, "tools", "gold", tool, "fn", decided_by="reviewer-1"))
    return aggregations, verdicts


def tsolis_records():
    gold = AnnotationRecord(
        pair_id=TSOLIS_PAIR,
        origin="consensus",
        data_accessed=True,
        use_cases=[
            "Used in a comparative study of Brucella genomes to investigate veterinary pathogenicity"
        ],
        tools=["COG", "BLAST", "MUMmer"],
    )
    machine = AnnotationRecord(
        pair_id=TSOLIS_PAIR,
        origin="machine",
        data_accessed=True,
        use_cases=[
            "comparative analysis of genomic features",
            "comparative best-match blastp searches",
            "suffix tree analysis using MUMmer",
        ],
        tools=["BLAST", "MUMmer", "GLIMMER"],
    )
    return gold, machine


def tsolis_decisions():
    aggregations = [
        AggregationDecision(
            pair_id=TSOLIS_PAIR,
            category="use_cases",
            member_values=(
                "comparative analysis of genomic features",
                "comparative best-match blastp searches",
                "suffix tree analysis using MUMmer",
            ),
            direction="machine-into-gold",
            target_value="Used in a comparative study of Brucella genomes to investigate veterinary pathogenicity",
            decided_by="reviewer-1",
        )
    ]
    verdicts = [
        Verdict(TSOLIS_PAIR, "tools", "gold", "COG", "fn", decided_by="reviewer-1"),
        Verdict(TSOLIS_PAIR, "tools", "machine", "GLIMMER", "fp", decided_by="reviewer-1"),
    ]
    return aggregations, verdicts


def completed_matrix(records_fn, decisions_fn):
    gold, machine = records_fn()
    aggregations, verdicts = decisions_fn()
    return apply_decisions(auto_match(gold, machine), aggregations, verdicts)


def random_adjudication(rng: random.Random, pair_id: str = "fuzz-pair"):
    """Generate one random gold/machine record pair, auto-match it, resolve
    the queue with random (disjoint) aggregations and verdicts, and return
    everything needed to check the bookkeeping invariants.

    Returns (matrix, per-category dict of {"gold_items", "machine_items",
    "gold_units", "machine_units"}) where units count values after grouping.
    """
    categories = ("use_cases", "tools")
    gold_lists = {}
    machine_lists = {}
    for cat in categories:
        n_gold = rng.randint(0, 6)
        n_machine = rng.randint(0, 6)
        gold_vals = [f"{cat} gold item {i}" for i in range(n_gold)]
        machine_vals = [f"{cat} machine item {i}" for i in range(n_machine)]
        # some machine outputs literally match gold values (auto TPs)
        shared = rng.randint(0, min(n_gold, n_machine))
        for i in range(shared):
            machine_vals[i] = gold_vals[i]
        rng.shuffle(gold_vals)
        rng.shuffle(machine_vals)
        gold_lists[cat] = gold_vals
        machine_lists[cat] = machine_vals

    machine_empty = not machine_lists["use_cases"] and not machine_lists["tools"]
    machine_accessed = True if not machine_empty else rng.random() < 0.7
    gold = AnnotationRecord(
        pair_id, "consensus", True, use_cases=gold_lists["use_cases"], tools=gold_lists["tools"]
    )
    machine = AnnotationRecord(
        pair_id,
        "machine",
        machine_accessed,
        use_cases=machine_lists["use_cases"] if machine_accessed else [],
        tools=machine_lists["tools"] if machine_accessed else [],
    )
    if not machine_accessed:
        machine_lists = {c: [] for c in categories}

    matrix = auto_match(gold, machine)
    aggregations = []
    verdicts = []
    stats = {}
    for cat in categories:
        pending_machine = list(matrix.unresolved_machine[cat])
        pending_gold = list(matrix.unresolved_gold[cat])
        rng.shuffle(pending_machine)
        rng.shuffle(pending_gold)
        forward_collapsed = 0
        backward_collapsed = 0

        # forward groups: >=2 machine members, optional gold target
        while len(pending_machine) >= 2 and rng.random() < 0.5:
            size = rng.randint(2, min(3, len(pending_machine)))
            members = tuple(pending_machine[:size])
            pending_machine = pending_machine[size:]
            target = None
            if pending_gold and rng.random() < 0.8:
                target = pending_gold.pop()
            aggregations.append(
                AggregationDecision(pair_id, cat, members, "machine-into-gold", target)
            )
            forward_collapsed += size - 1

        # the rare backwards group
        if len(pending_gold) >= 2 and pending_machine and rng.random() < 0.2:
            size = rng.randint(2, min(3, len(pending_gold)))
            members = tuple(pending_gold[:size])
            pending_gold = pending_gold[size:]
            target = pending_machine.pop()
            aggregations.append(
                AggregationDecision(pair_id, cat, members, "gold-into-machine", target)
            )
            backward_collapsed += size - 1

        # singleton fates for the rest
        while pending_machine:
            value = pending_machine.pop()
            if pending_gold and rng.random() < 0.4:
                verdicts.append(
                    Verdict(pair_id, cat, "machine", value, "match", counterpart=pending_gold.pop())
                )
            else:
                verdicts.append(Verdict(pair_id, cat, "machine", value, "fp"))
        while pending_gold:
            verdicts.append(Verdict(pair_id, cat, "gold", pending_gold.pop(), "fn"))

        stats[cat] = {
            "gold_items": len(gold_lists[cat]),
            "machine_items": len(machine_lists[cat]),
            "gold_units": len(gold_lists[cat]) - backward_collapsed,
            "machine_units": len(machine_lists[cat]) - forward_collapsed,
        }

    completed = apply_decisions(matrix, aggregations, verdicts)
    return completed, stats
