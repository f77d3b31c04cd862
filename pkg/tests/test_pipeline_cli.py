import json
from pathlib import Path

import pytest

from citefn.corpus import (
    Corpus,
    Identifier,
    PairRecord,
    Publication,
    load_annotations,
    load_transcripts,
    save_annotations,
    save_corpus,
)
from citefn.cli import main
from citefn.pipeline import (
    PipelineConfig,
    PipelineError,
    plain_text_from_string,
    run_pipeline,
)
from citefn.sargo import EvaluationMatrix
from helpers import (
    frisch_decisions,
    frisch_records,
    table_corpus,
    tsolis_decisions,
    tsolis_records,
)

FIXTURES = Path(__file__).parent / "fixtures"


def xml_doc(body_text: str) -> str:
    return (
        '<article xmlns:xlink="http://www.w3.org/1999/xlink"><body>'
        f"<sec><title>Methods</title><p>{body_text}</p></sec>"
        "</body></article>"
    )


def two_pair_setup(tmp_path, gold=False):
    """Corpus of two pairs, their XML sources, and a mock script that walks
    pair 1 to data_accessed=FALSE and pair 2 to TRUE with lists."""
    corpus = table_corpus()
    pairs_path = tmp_path / "pairs.jsonl"
    save_corpus(corpus, pairs_path)

    xml_dir = tmp_path / "xml"
    xml_dir.mkdir()
    (xml_dir / "PMC-frisch.xml").write_text(
        xml_doc("The CP000046.1 genome rooted the phylogeny.")
    )
    (xml_dir / "PMC-tsolis.xml").write_text(
        xml_doc("NC_003317 was compared against the B. ovis genome.")
    )

    script = tmp_path / "script.jsonl"
    responses = [
        # frisch pair: no access
        "TRUE",
        "The identifier is mentioned as the root of the tree.",
        "FALSE",
        # tsolis pair: accessed, with use cases and tools
        "TRUE",
        "The identifier is the comparison genome.",
        "TRUE",
        "1. comparative analysis of genomic features",
        "BLAST\nMUMmer",
    ]
    script.write_text("".join(json.dumps({"status": 200, "content": c}) + "\n" for c in responses))

    config = PipelineConfig(
        pairs_path=pairs_path,
        out_dir=tmp_path / "out",
        xml_dir=xml_dir,
        mock_script=script,
    )
    if gold:
        gold_path = tmp_path / "gold.jsonl"
        save_annotations([frisch_records()[0], tsolis_records()[0]], gold_path)
        config.gold_path = gold_path
    return corpus, config


def artifact_bytes(result):
    payload = {}
    for path in (result.contexts_path, result.machine_path, result.transcripts_path):
        payload[path.name] = path.read_bytes()
    if result.automatch_path:
        payload[result.automatch_path.name] = result.automatch_path.read_bytes()
    for text in sorted(result.texts_dir.glob("*.txt")):
        payload[text.name] = text.read_bytes()
    return payload


def test_pipeline_end_to_end(tmp_path):
    corpus, config = two_pair_setup(tmp_path, gold=True)
    result = run_pipeline(config)
    assert result.stages_run == ["extract", "context", "classify", "auto-match"]

    records = load_annotations(result.machine_path, corpus=corpus)
    assert len(records) == 2
    by_pair = {r.pair_id: r for r in records}
    assert by_pair["frisch-2018:CP000046.1"].data_accessed is False
    tsolis = by_pair["tsolis-2009:NC_003317"]
    assert tsolis.data_accessed is True
    assert tsolis.tools == ["BLAST", "MUMmer"]

    transcripts = load_transcripts(result.transcripts_path, corpus=corpus)
    assert len(transcripts) == 2
    assert transcripts[0].node_trace[-1] == "data_accessed"

    matrices = [
        EvaluationMatrix.from_json(json.loads(line))
        for line in result.automatch_path.read_text().splitlines()
    ]
    assert {m.pair_id for m in matrices} == set(by_pair)


def test_pipeline_rerun_is_byte_identical(tmp_path):
    _, config = two_pair_setup(tmp_path, gold=True)
    first = run_pipeline(config)
    before = artifact_bytes(first)
    # second run: the mock script is exhausted, but no stage should need it
    second = run_pipeline(config)
    assert artifact_bytes(second) == before
    assert second.stages_run == []
    assert set(second.stages_skipped) == {"extract", "context", "classify", "auto-match"}


def test_pipeline_halts_naming_pair_on_missing_text(tmp_path):
    _, config = two_pair_setup(tmp_path)
    (Path(config.xml_dir) / "PMC-tsolis.xml").unlink()
    with pytest.raises(PipelineError) as err:
        run_pipeline(config)
    assert err.value.stage == "extract"
    assert err.value.pair_id == "tsolis-2009:NC_003317"


def test_pipeline_checks_declared_char_count(tmp_path):
    corpus, config = two_pair_setup(tmp_path)
    wrong = [
        PairRecord(
            pair_id=p.pair_id,
            publication=Publication(
                pub_id=p.publication.pub_id,
                title=p.publication.title,
                publisher=p.publication.publisher,
                pub_year=p.publication.pub_year,
                char_count=5,
            ),
            identifier=p.identifier,
        )
        for p in corpus.pairs
    ]
    save_corpus(Corpus(wrong), config.pairs_path)
    with pytest.raises(PipelineError, match="char_count"):
        run_pipeline(config)


def test_plain_text_from_string_roundtrip():
    pt = plain_text_from_string("alpha\n\nbeta\nrow\n\ngamma")
    assert pt.blocks() == ["alpha", "beta\nrow", "gamma"]
    assert pt.block_boundaries == [0, 7, 17]
    assert plain_text_from_string("").blocks() == []


# -- CLI -----------------------------------------------------------------------


def test_cli_extract_and_chunks(tmp_path, capsys):
    doc = tmp_path / "doc.xml"
    doc.write_text((FIXTURES / "jats_v1_2.xml").read_text())
    out = tmp_path / "doc.txt"
    assert main(["extract", "--in", str(doc), "--out", str(out)]) == 0
    text = out.read_text()
    assert "Strain CP000046.1 was sequenced & assembled in 2005." in text
    assert main(["extract", "--in", str(doc), "--out", str(out), "--chunks", "120"]) == 0
    chunk_files = sorted(tmp_path.glob("doc.chunk*.txt"))
    assert chunk_files
    assert "\n\n".join(p.read_text() for p in chunk_files) == text


def test_cli_extract_flags(tmp_path):
    doc = tmp_path / "doc.xml"
    doc.write_text((FIXTURES / "jats_v1_2.xml").read_text())
    out = tmp_path / "full.txt"
    main(["extract", "--in", str(doc), "--out", str(out), "--no-tables", "--keep-headers"])
    text = out.read_text()
    assert "Contigs 12" not in text
    assert "Introduction" in text


def test_cli_context(tmp_path, capsys):
    meta = {
        "accession": "CP001672.1",
        "identifier_class": "nucleotide-sequence",
        "source_db": "National Center for Biotechnical Information (NCBI) GenBank Nucleotide Database",
        "metadata": {
            "record_kind": "Nucleotide Sequence",
            "content_description": "nucleotide sequence data",
            "organism": "Methylotenera mobilis JLW8",
            "taxon_domain": "Prokaryote",
            "species": "Methylotenera mobilis",
            "strain": "JLW8",
        },
    }
    path = tmp_path / "meta.json"
    path.write_text(json.dumps(meta))
    assert main(["context", "--metadata", str(path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith('The accession "CP001672.1" refers to a Nucleotide Sequence record')
    assert 'The sequenced strain is referred to as "JLW8".' in out


def test_cli_classify_with_mock(tmp_path, capsys):
    _, config = two_pair_setup(tmp_path)
    texts_dir = tmp_path / "texts"
    texts_dir.mkdir()
    # pre-extract texts so classify does not need xml
    (texts_dir / "PMC-frisch.txt").write_text("The CP000046.1 genome rooted the phylogeny.")
    (texts_dir / "PMC-tsolis.txt").write_text("NC_003317 was compared against B. ovis.")
    out = tmp_path / "out" / "machine.jsonl"
    ret = main(
        [
            "classify",
            "--pairs", str(config.pairs_path),
            "--texts", str(texts_dir),
            "--out", str(out),
            "--mock-script", str(config.mock_script),
        ]
    )
    assert ret == 0
    assert len(load_annotations(out)) == 2


def test_cli_score_and_report(tmp_path, capsys):
    from citefn.sargo import save_decisions
    from helpers import FRISCH_PAIR, TSOLIS_PAIR

    gold_path = tmp_path / "gold.jsonl"
    machine_path = tmp_path / "machine.jsonl"
    save_annotations([frisch_records()[0], tsolis_records()[0]], gold_path)
    save_annotations([frisch_records()[1], tsolis_records()[1]], machine_path)
    decisions_path = tmp_path / "decisions.jsonl"
    save_decisions(
        decisions_path,
        {FRISCH_PAIR: frisch_decisions(), TSOLIS_PAIR: tsolis_decisions()},
    )
    scores_path = tmp_path / "scores.jsonl"
    ret = main(
        [
            "score",
            "--gold", str(gold_path),
            "--machine", str(machine_path),
            "--decisions", str(decisions_path),
            "--out", str(scores_path),
        ]
    )
    assert ret == 0
    scores = [json.loads(line) for line in scores_path.read_text().splitlines()]
    assert len(scores) == 2

    ret = main(["report", "--scores", str(scores_path), "--format", "csv", "--set-label", "initial"])
    assert ret == 0
    out = capsys.readouterr().out
    # pooled across both pairs: tp=8, fp=1, fn=9
    assert "initial,overall,0.471,0.889,0.615" in out


def test_cli_sample(tmp_path, capsys):
    pairs = [
        PairRecord(
            pair_id=f"P{i}",
            publication=Publication(pub_id=f"PMC{i}", pub_year=2015 + i, publisher=f"pub{i%2}"),
            identifier=Identifier(accession=f"A{i}", identifier_class="assembly", source_db="db"),
        )
        for i in range(10)
    ]
    pairs_path = tmp_path / "pairs.jsonl"
    save_corpus(Corpus(pairs), pairs_path)
    spec_path = tmp_path / "spec.json"
    spec_path.write_text('{"cutoff_date": "2023-12-01", "sample_size": 4, "seed": 5}')
    out = tmp_path / "sample.jsonl"
    assert main(["sample", "--pairs", str(pairs_path), "--spec", str(spec_path), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 4


def test_cli_estimate_cost(capsys):
    ret = main(
        [
            "estimate-cost",
            "--pairs", "122292",
            "--in-tokens", "54600",
            "--out-tokens", "246",
            "--in-price", "0.0024",
            "--out-price", "0.0024",
        ]
    )
    assert ret == 0
    assert "$16,097" in capsys.readouterr().out


def test_cli_error_handling(tmp_path, capsys):
    ret = main(["extract", "--in", str(tmp_path / "missing.xml"), "--out", str(tmp_path / "o.txt")])
    assert ret == 1
    assert "error:" in capsys.readouterr().err


def test_pipeline_config_from_file(tmp_path):
    _, config = two_pair_setup(tmp_path, gold=True)
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(
        json.dumps(
            {
                "pairs": "pairs.jsonl",
                "out_dir": "out",
                "xml_dir": "xml",
                "gold": "gold.jsonl",
                "mock_script": "script.jsonl",
                "extraction": {"include_tables": True},
            }
        )
    )
    loaded = PipelineConfig.from_file(cfg_path)
    assert loaded.pairs_path == tmp_path / "pairs.jsonl"
    assert loaded.gold_path == tmp_path / "gold.jsonl"
    result = run_pipeline(loaded)
    assert result.automatch_path is not None


def test_cli_pipeline_command(tmp_path, capsys):
    _, _ = two_pair_setup(tmp_path, gold=True)
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(
        json.dumps(
            {
                "pairs": "pairs.jsonl",
                "out_dir": "out",
                "xml_dir": "xml",
                "gold": "gold.jsonl",
                "mock_script": "script.jsonl",
            }
        )
    )
    assert main(["pipeline", "--config", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "stages run: extract, context, classify, auto-match" in out
    # rerun resumes from checkpoints
    assert main(["pipeline", "--config", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "stages run: none" in out
