#!/usr/bin/env python3
"""End-to-end demo on synthetic inputs: builds a two-pair corpus with JATS
sources, runs extract -> context -> classify against a scripted mock
endpoint, auto-matches against a small gold file, and prints the pooled
report. Artifacts land in ./demo_run/ (idempotent: a rerun reuses them)."""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from citefn.corpus import (
    AnnotationRecord,
    Corpus,
    Identifier,
    PairRecord,
    Publication,
    save_annotations,
    save_corpus,
)
from citefn.metrics import pool_and_report, render_text
from citefn.pipeline import PipelineConfig, run_pipeline
from citefn.sargo import EvaluationMatrix, apply_decisions, score_pair

DEMO = Path(__file__).resolve().parent.parent / "demo_run"

XML_TEMPLATE = """<article xmlns:xlink="http://www.w3.org/1999/xlink"><body>
<sec><title>Methods</title><p>{body}</p></sec>
<table-wrap><label>Table 1</label><caption><p>Stats</p></caption>
<table><tbody><tr><td>reads</td><td>{reads}</td></tr></tbody></table></table-wrap>
</body></article>"""


def build_inputs():
    DEMO.mkdir(exist_ok=True)
    pairs = [
        PairRecord(
            pair_id="demo-1",
            publication=Publication(pub_id="PMCdemo1", title="Rooted phylogeny", publisher="pubA", pub_year=2018),
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
                },
            ),
        ),
        PairRecord(
            pair_id="demo-2",
            publication=Publication(pub_id="PMCdemo2", title="Assembly comparison", publisher="pubB", pub_year=2024),
            identifier=Identifier(
                accession="GCF_000696285.1",
                identifier_class="assembly",
                source_db="National Center for Biotechnical Information (NCBI) Assembly Database",
                metadata={
                    "record_kind": "Assembly",
                    "content_description": "information about a Genome Assembly",
                    "biosample": "SAMN02732238",
                },
            ),
        ),
    ]
    save_corpus(Corpus(pairs), DEMO / "pairs.jsonl")

    xml_dir = DEMO / "xml"
    xml_dir.mkdir(exist_ok=True)
    (xml_dir / "PMCdemo1.xml").write_text(
        XML_TEMPLATE.format(body="CP000046.1 was used to root the phylogenetic tree with PhyML.", reads=120)
    )
    (xml_dir / "PMCdemo2.xml").write_text(
        XML_TEMPLATE.format(body="GCF_000696285.1 is mentioned once in passing.", reads=77)
    )

    responses = [
        # demo-1: accessed, one use case, one tool
        "TRUE",
        "The accession roots the phylogeny.",
        "TRUE",
        "1. Rooting of the phylogenetic tree",
        "PhyML",
        # demo-2: mentioned but not used
        "TRUE",
        "The accession is only cited in passing.",
        "FALSE",
    ]
    (DEMO / "mock_script.jsonl").write_text(
        "".join(json.dumps({"status": 200, "content": c}) + "\n" for c in responses)
    )

    gold = [
        AnnotationRecord("demo-1", "consensus", True,
                         use_cases=["Rooting of the phylogenetic tree"], tools=["PhyML", "RAxML 8.2.11"]),
        AnnotationRecord("demo-2", "consensus", False),
    ]
    save_annotations(gold, DEMO / "gold.jsonl")


def main():
    build_inputs()
    config = PipelineConfig(
        pairs_path=DEMO / "pairs.jsonl",
        out_dir=DEMO / "out",
        xml_dir=DEMO / "xml",
        gold_path=DEMO / "gold.jsonl",
        mock_script=DEMO / "mock_script.jsonl",
    )
    result = run_pipeline(config)
    print(f"stages run: {result.stages_run or 'none (all checkpointed)'}")

    per_pair = []
    for line in result.automatch_path.read_text().splitlines():
        matrix = EvaluationMatrix.from_json(json.loads(line))
        # the demo gold/machine values match exactly except one FN tool
        if not matrix.complete:
            from citefn.sargo import Verdict

            fn_verdicts = [
                Verdict(matrix.pair_id, category, "gold", value, "fn")
                for category, values in matrix.unresolved_gold.items()
                for value in values
            ]
            matrix = apply_decisions(matrix, [], fn_verdicts)
        per_pair.append(score_pair(matrix))

    print()
    print(render_text(pool_and_report(per_pair, set_label="demo")))


if __name__ == "__main__":
    main()
