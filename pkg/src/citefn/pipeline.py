"""End-to-end pipeline: extract -> context -> classify -> auto-match.

Each stage checkpoints its output on disk and is skipped on rerun when the
output already exists, so interrupted runs resume where they stopped and a
rerun over finished outputs is byte-identical. Any failure halts the run
with the stage name and the offending pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .corpus import (
    Corpus,
    load_annotations,
    load_corpus,
    save_annotations,
    save_transcripts,
)
from .jats import BLOCK_SEP, ExtractionParams, PlainText, extract_text
from .llm import ChatClient, GenerationConfig, MockTransport, RetryPolicy, client_from_env
from .orchestrator import PromptTree, default_tree, load_tree, run_chat
from .rag import TemplateRegistry, build_statement, default_registry, load_registry
from .sargo import auto_match


class PipelineError(Exception):
    def __init__(self, stage: str, message: str, pair_id: Optional[str] = None):
        self.stage = stage
        self.pair_id = pair_id
        where = f"stage {stage!r}"
        if pair_id:
            where += f", pair {pair_id!r}"
        super().__init__(f"{where}: {message}")


@dataclass
class PipelineConfig:
    pairs_path: Path
    out_dir: Path
    xml_dir: Optional[Path] = None
    texts_dir: Optional[Path] = None  # defaults to out_dir / "texts"
    tree_path: Optional[Path] = None
    templates_path: Optional[Path] = None
    gold_path: Optional[Path] = None
    mock_script: Optional[Path] = None
    extraction: ExtractionParams = field(default_factory=ExtractionParams)
    generation: GenerationConfig = field(default_factory=GenerationConfig)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        base = Path(path).parent
        obj = json.loads(Path(path).read_text(encoding="utf-8"))

        def resolve(key):
            return (base / obj[key]) if key in obj and obj[key] else None

        extraction = ExtractionParams(**obj.get("extraction", {}))
        generation = GenerationConfig(**obj.get("generation", {}))
        return cls(
            pairs_path=base / obj["pairs"],
            out_dir=base / obj.get("out_dir", "out"),
            xml_dir=resolve("xml_dir"),
            texts_dir=resolve("texts_dir"),
            tree_path=resolve("tree"),
            templates_path=resolve("templates"),
            gold_path=resolve("gold"),
            mock_script=resolve("mock_script"),
            extraction=extraction,
            generation=generation,
        )


def plain_text_from_string(text: str) -> PlainText:
    """Rebuild a PlainText (with block boundaries) from saved text; blocks
    never contain the separator, so the split is exact."""
    if not text:
        return PlainText("", [])
    blocks = text.split(BLOCK_SEP)
    boundaries = []
    offset = 0
    for b in blocks:
        boundaries.append(offset)
        offset += len(b) + len(BLOCK_SEP)
    return PlainText(text=text, block_boundaries=boundaries)


def load_text_for(pub_id: str, texts_dir: Path) -> PlainText:
    path = texts_dir / f"{pub_id}.txt"
    if not path.exists():
        raise FileNotFoundError(path)
    return plain_text_from_string(path.read_text(encoding="utf-8"))


@dataclass
class PipelineResult:
    texts_dir: Path
    contexts_path: Path
    machine_path: Path
    transcripts_path: Path
    automatch_path: Optional[Path]
    stages_run: list[str]
    stages_skipped: list[str]


def run_pipeline(config: PipelineConfig, client: Optional[ChatClient] = None) -> PipelineResult:
    corpus = load_corpus(config.pairs_path)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    texts_dir = Path(config.texts_dir) if config.texts_dir else out_dir / "texts"
    texts_dir.mkdir(parents=True, exist_ok=True)

    stages_run: list[str] = []
    stages_skipped: list[str] = []

    # -- extract ---------------------------------------------------------------
    missing_texts = [
        p for p in corpus.pairs if not (texts_dir / f"{p.publication.pub_id}.txt").exists()
    ]
    if missing_texts:
        stages_run.append("extract")
        for pair in missing_texts:
            pub_id = pair.publication.pub_id
            out_path = texts_dir / f"{pub_id}.txt"
            if out_path.exists():
                continue  # another pair of the same publication already wrote it
            if config.xml_dir is None:
                raise PipelineError(
                    "extract", f"no text at {out_path} and no xml_dir configured", pair.pair_id
                )
            xml_path = Path(config.xml_dir) / f"{pub_id}.xml"
            if not xml_path.exists():
                raise PipelineError("extract", f"missing XML file {xml_path}", pair.pair_id)
            try:
                pt = extract_text(xml_path.read_text(encoding="utf-8"), config.extraction)
            except Exception as exc:
                raise PipelineError("extract", str(exc), pair.pair_id) from exc
            out_path.write_text(pt.text, encoding="utf-8")
    else:
        stages_skipped.append("extract")

    for pair in corpus.pairs:
        pub = pair.publication
        text = (texts_dir / f"{pub.pub_id}.txt").read_text(encoding="utf-8")
        if pub.char_count and pub.char_count != len(text):
            raise PipelineError(
                "extract",
                f"publication {pub.pub_id} declares char_count={pub.char_count} "
                f"but its text has {len(text)} chars",
                pair.pair_id,
            )

    # -- context ---------------------------------------------------------------
    contexts_path = out_dir / "contexts.jsonl"
    if contexts_path.exists():
        stages_skipped.append("context")
        contexts = {
            obj["pair_id"]: obj["statement"]
            for obj in map(json.loads, contexts_path.read_text(encoding="utf-8").splitlines())
        }
    else:
        stages_run.append("context")
        registry: TemplateRegistry = (
            load_registry(config.templates_path) if config.templates_path else default_registry()
        )
        contexts = {}
        lines = []
        for pair in corpus.pairs:
            try:
                statement = build_statement(pair.identifier, registry)
            except Exception as exc:
                raise PipelineError("context", str(exc), pair.pair_id) from exc
            contexts[pair.pair_id] = statement
            lines.append(json.dumps({"pair_id": pair.pair_id, "statement": statement}, ensure_ascii=False))
        contexts_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    # -- classify ----------------------------------------------------------------
    machine_path = out_dir / "machine.jsonl"
    transcripts_path = out_dir / "transcripts.jsonl"
    if machine_path.exists():
        stages_skipped.append("classify")
    else:
        stages_run.append("classify")
        tree: PromptTree = load_tree(config.tree_path) if config.tree_path else default_tree()
        if client is None:
            if config.mock_script:
                client = ChatClient(
                    MockTransport.from_script(config.mock_script),
                    retry_policy=RetryPolicy(jitter=False),
                    sleep=lambda dt: None,
                )
            else:
                client = client_from_env()
        records = []
        transcripts = []
        for pair in corpus.pairs:
            text = load_text_for(pair.publication.pub_id, texts_dir)
            try:
                output = run_chat(
                    pair, text, contexts[pair.pair_id], tree, client, config.generation
                )
            except Exception as exc:
                raise PipelineError("classify", str(exc), pair.pair_id) from exc
            records.append(output.record)
            transcripts.append(output.transcript)
        save_annotations(records, machine_path)
        save_transcripts(transcripts, transcripts_path)

    # -- auto-match --------------------------------------------------------------
    automatch_path: Optional[Path] = None
    if config.gold_path:
        automatch_path = out_dir / "automatch.jsonl"
        if automatch_path.exists():
            stages_skipped.append("auto-match")
        else:
            stages_run.append("auto-match")
            gold_records = {
                r.pair_id: r
                for r in load_annotations(config.gold_path, corpus=corpus)
                if r.origin == "consensus"
            }
            machine_records = {
                r.pair_id: r for r in load_annotations(machine_path, corpus=corpus)
            }
            lines = []
            for pair in corpus.pairs:
                if pair.pair_id not in gold_records:
                    continue
                if pair.pair_id not in machine_records:
                    raise PipelineError(
                        "auto-match", "no machine record for annotated pair", pair.pair_id
                    )
                try:
                    matrix = auto_match(gold_records[pair.pair_id], machine_records[pair.pair_id])
                except Exception as exc:
                    raise PipelineError("auto-match", str(exc), pair.pair_id) from exc
                lines.append(json.dumps(matrix.to_json(), ensure_ascii=False))
            automatch_path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")

    return PipelineResult(
        texts_dir=texts_dir,
        contexts_path=contexts_path,
        machine_path=machine_path,
        transcripts_path=transcripts_path,
        automatch_path=automatch_path,
        stages_run=stages_run,
        stages_skipped=stages_skipped,
    )
