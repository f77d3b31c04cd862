"""citefn command line.

Subcommands cover every pipeline stage:

  extract        JATS XML -> plain text (optional chunking)
  context        render the context statement for one accession
  classify       run the decision-tree workflow over a pair corpus
  score          auto-match + apply reviewer decisions -> per-pair counts
  sample         stratified annotation sample from a pair corpus
  report         pooled precision/recall/F1 report from scores
  estimate-cost  API cost projection from token medians
  serve          review API + adjudication UI
  pipeline       extract -> context -> classify -> auto-match from a config
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .corpus import Identifier, load_annotations, load_corpus, save_corpus
from .jats import ExtractionParams, chunk_text, extract_text
from .metrics import RENDERERS, estimate_cost, pool_and_report
from .pipeline import PipelineConfig, run_pipeline
from .rag import build_statement, default_registry, load_registry
from .sampler import load_strata_spec, stratified_sample
from .sargo import (
    ConfusionCounts,
    apply_decisions,
    auto_match,
    load_decisions,
    score_pair,
)


def cmd_extract(args) -> int:
    params = ExtractionParams(
        include_tables=not args.no_tables,
        include_figure_text=not args.no_figures,
        drop_front_back_matter=not args.keep_front_back,
        drop_section_headers=not args.keep_headers,
        jats_version_hint=args.jats_version,
    )
    pt = extract_text(Path(args.infile).read_text(encoding="utf-8"), params)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(pt.text, encoding="utf-8")
    if args.chunks:
        chunks = chunk_text(pt, args.chunks)
        for chunk in chunks:
            chunk_path = out.with_suffix(f".chunk{chunk.index:03d}{out.suffix}")
            chunk_path.write_text(chunk.text, encoding="utf-8")
        print(f"wrote {out} and {len(chunks)} chunk files (max {args.chunks} chars)")
    else:
        print(f"wrote {out} ({len(pt.text)} chars, {len(pt.block_boundaries)} blocks)")
    return 0


def cmd_context(args) -> int:
    meta = json.loads(Path(args.metadata).read_text(encoding="utf-8"))
    identifier = Identifier(
        accession=args.accession or meta.get("accession", ""),
        identifier_class=meta.get("identifier_class", ""),
        source_db=meta.get("source_db", ""),
        metadata=meta.get("metadata", {}),
    )
    registry = load_registry(args.templates) if args.templates else default_registry()
    print(build_statement(identifier, registry))
    return 0


def cmd_classify(args) -> int:
    config = PipelineConfig(
        pairs_path=Path(args.pairs),
        out_dir=Path(args.out).parent,
        texts_dir=Path(args.texts),
        tree_path=Path(args.tree) if args.tree else None,
        templates_path=Path(args.templates) if args.templates else None,
        mock_script=Path(args.mock_script) if args.mock_script else None,
    )
    result = run_pipeline(config)
    machine_path = Path(args.out)
    if result.machine_path != machine_path:
        machine_path.parent.mkdir(parents=True, exist_ok=True)
        machine_path.write_bytes(result.machine_path.read_bytes())
    records = load_annotations(machine_path)
    print(f"classified {len(records)} pairs -> {machine_path}")
    return 0


def cmd_score(args) -> int:
    corpus = load_corpus(args.pairs) if args.pairs else None
    gold = {
        r.pair_id: r
        for r in load_annotations(args.gold, corpus=corpus)
        if r.origin == "consensus"
    }
    machine = {r.pair_id: r for r in load_annotations(args.machine, corpus=corpus)}
    decisions = load_decisions(args.decisions) if args.decisions else {}
    lines = []
    for pair_id in sorted(set(gold) & set(machine)):
        matrix = auto_match(gold[pair_id], machine[pair_id])
        aggregations, verdicts = decisions.get(pair_id, ([], []))
        matrix = apply_decisions(matrix, aggregations, verdicts)
        counts = score_pair(matrix)
        lines.append(
            json.dumps(
                {"pair_id": pair_id, "counts": {c: k.to_json() for c, k in counts.items()}},
                ensure_ascii=False,
            )
        )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    print(f"scored {len(lines)} pairs -> {out}")
    return 0


def cmd_sample(args) -> int:
    corpus = load_corpus(args.pairs)
    spec = load_strata_spec(args.spec)
    sample = stratified_sample(corpus, spec)
    from .corpus import Corpus

    save_corpus(Corpus(sample), args.out)
    print(f"sampled {len(sample)} of {len(corpus)} pairs -> {args.out}")
    return 0


def cmd_report(args) -> int:
    per_pair = []
    for line in Path(args.scores).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        per_pair.append(
            {c: ConfusionCounts.from_json(k) for c, k in obj["counts"].items()}
        )
    rows = pool_and_report(per_pair, set_label=args.set_label)
    print(RENDERERS[args.format](rows))
    return 0


def cmd_estimate_cost(args) -> int:
    est = estimate_cost(
        args.pairs, args.in_tokens, args.out_tokens, args.in_price, args.out_price
    )
    print(
        f"{est.pair_count} pairs x ({est.median_input_tokens} in @ {est.input_price}/1k "
        f"+ {est.median_output_tokens} out @ {est.output_price}/1k) = ${est.rounded_total:,}"
    )
    return 0


def cmd_serve(args) -> int:
    from .review import ReviewStore, serve

    store = ReviewStore.from_files(
        pairs_path=args.pairs,
        gold_path=args.gold,
        machine_path=args.machine,
        texts_dir=args.texts,
        decisions_path=args.decisions,
    )
    serve(store, host=args.host, port=args.port, static_dir=args.ui)
    return 0


def cmd_pipeline(args) -> int:
    config = PipelineConfig.from_file(args.config)
    result = run_pipeline(config)
    ran = ", ".join(result.stages_run) or "none"
    skipped = ", ".join(result.stages_skipped) or "none"
    print(f"stages run: {ran}; skipped (already checkpointed): {skipped}")
    print(f"machine annotations: {result.machine_path}")
    if result.automatch_path:
        print(f"auto-match matrices: {result.automatch_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="citefn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="JATS XML to plain text")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--chunks", type=int, default=0, metavar="N", help="also write chunks of at most N chars")
    p.add_argument("--no-tables", action="store_true")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--keep-headers", action="store_true")
    p.add_argument("--keep-front-back", action="store_true")
    p.add_argument("--jats-version", choices=["1.2", "1.3"], default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("context", help="render a context statement")
    p.add_argument("--accession", default=None)
    p.add_argument("--metadata", required=True, help="identifier JSON file")
    p.add_argument("--templates", default=None)
    p.set_defaults(func=cmd_context)

    p = sub.add_parser("classify", help="run the decision-tree workflow")
    p.add_argument("--pairs", required=True)
    p.add_argument("--texts", required=True)
    p.add_argument("--tree", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--templates", default=None)
    p.add_argument("--mock-script", default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("score", help="score machine output against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--machine", required=True)
    p.add_argument("--decisions", default=None)
    p.add_argument("--pairs", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sample", help="stratified annotation sample")
    p.add_argument("--pairs", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("report", help="pooled metrics report")
    p.add_argument("--scores", required=True)
    p.add_argument("--format", choices=sorted(RENDERERS), default="table")
    p.add_argument("--set-label", default="all")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("estimate-cost", help="API cost projection")
    p.add_argument("--pairs", type=int, required=True)
    p.add_argument("--in-tokens", type=int, required=True)
    p.add_argument("--out-tokens", type=int, required=True)
    p.add_argument("--in-price", type=float, required=True)
    p.add_argument("--out-price", type=float, required=True)
    p.set_defaults(func=cmd_estimate_cost)

    p = sub.add_parser("serve", help="review API + adjudication UI")
    p.add_argument("--pairs", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--machine", required=True)
    p.add_argument("--texts", default=None)
    p.add_argument("--decisions", default=None)
    p.add_argument("--ui", default=None, help="static UI directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8020)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("pipeline", help="run all stages from a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
