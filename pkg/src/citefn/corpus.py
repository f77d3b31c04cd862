"""Domain records and JSONL persistence.

Three line-delimited JSON stores make up a corpus on disk:

* ``pairs.jsonl`` -- one (publication, accession) pair per line, publication
  and identifier embedded
* ``annotations.jsonl`` -- labeled three-field records from humans or the
  machine assistant
* ``transcripts.jsonl`` -- one chat transcript per classified pair

All files are UTF-8. Records are validated on construction and again on
load, where errors carry the offending line number.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

ORIGINS = ("annotator-A", "annotator-B", "consensus", "machine")


class CorpusError(ValueError):
    """Invariant violation or malformed input in a corpus store."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def normalize_label(value: str) -> str:
    """Normalization used for duplicate detection and string matching:
    trim, collapse internal whitespace, case-fold."""
    return " ".join(value.split()).casefold()


@dataclass(frozen=True)
class Identifier:
    accession: str
    identifier_class: str
    source_db: str
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.accession:
            raise CorpusError("identifier accession must be non-empty")
        if not self.identifier_class:
            raise CorpusError("identifier_class must be non-empty")
        for key, value in self.metadata.items():
            if not isinstance(key, str) or not isinstance(value, str):
                raise CorpusError(
                    f"identifier {self.accession}: metadata entries must be strings"
                )

    def to_json(self) -> dict:
        return {
            "accession": self.accession,
            "identifier_class": self.identifier_class,
            "source_db": self.source_db,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Identifier":
        return cls(
            accession=obj.get("accession", ""),
            identifier_class=obj.get("identifier_class", ""),
            source_db=obj.get("source_db", ""),
            metadata=obj.get("metadata", {}) or {},
        )


@dataclass(frozen=True)
class Publication:
    pub_id: str
    title: str = ""
    publisher: str = ""
    pub_year: int = 0
    char_count: int = 0
    full_text_path: Optional[str] = None

    def __post_init__(self):
        if not self.pub_id:
            raise CorpusError("publication pub_id must be non-empty")
        if self.char_count < 0:
            raise CorpusError(f"publication {self.pub_id}: char_count must be >= 0")

    def to_json(self) -> dict:
        obj = {
            "pub_id": self.pub_id,
            "title": self.title,
            "publisher": self.publisher,
            "pub_year": self.pub_year,
            "char_count": self.char_count,
        }
        if self.full_text_path is not None:
            obj["full_text_path"] = self.full_text_path
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "Publication":
        return cls(
            pub_id=obj.get("pub_id", ""),
            title=obj.get("title", ""),
            publisher=obj.get("publisher", ""),
            pub_year=int(obj.get("pub_year", 0)),
            char_count=int(obj.get("char_count", 0)),
            full_text_path=obj.get("full_text_path"),
        )


@dataclass(frozen=True)
class PairRecord:
    pair_id: str
    publication: Publication
    identifier: Identifier

    def __post_init__(self):
        if not self.pair_id:
            raise CorpusError("pair_id must be non-empty")

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "publication": self.publication.to_json(),
            "identifier": self.identifier.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PairRecord":
        if "publication" not in obj or "identifier" not in obj:
            raise CorpusError("pair record needs 'publication' and 'identifier'")
        return cls(
            pair_id=obj.get("pair_id", ""),
            publication=Publication.from_json(obj["publication"]),
            identifier=Identifier.from_json(obj["identifier"]),
        )


def _check_label_list(values: list[str], field_name: str) -> None:
    seen: set[str] = set()
    for v in values:
        if not isinstance(v, str) or not v.strip():
            raise CorpusError(f"{field_name} entries must be non-empty strings")
        key = normalize_label(v)
        if key in seen:
            raise CorpusError(f"duplicate {field_name} entry after normalization: {v!r}")
        seen.add(key)


@dataclass
class AnnotationRecord:
    """One labeled (pair, origin) record: the Data Accessed flag plus the
    open-set Use Cases and Tools/Software lists."""

    pair_id: str
    origin: str
    data_accessed: bool
    use_cases: list[str] = field(default_factory=list)
    tools: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise CorpusError(
                f"origin must be one of {ORIGINS}, got {self.origin!r}"
            )
        if not self.data_accessed and (self.use_cases or self.tools):
            raise CorpusError(
                f"pair {self.pair_id}: data_accessed is false but use_cases/tools are non-empty"
            )
        _check_label_list(self.use_cases, "use_cases")
        _check_label_list(self.tools, "tools")

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "origin": self.origin,
            "data_accessed": self.data_accessed,
            "use_cases": list(self.use_cases),
            "tools": list(self.tools),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AnnotationRecord":
        return cls(
            pair_id=obj.get("pair_id", ""),
            origin=obj.get("origin", ""),
            data_accessed=bool(obj.get("data_accessed", False)),
            use_cases=list(obj.get("use_cases", []) or []),
            tools=list(obj.get("tools", []) or []),
        )


@dataclass
class Turn:
    role: str
    content: str

    def to_json(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass
class ChatTranscript:
    """Ordered prompt/response record of one decision-tree traversal."""

    pair_id: str
    turns: list[Turn] = field(default_factory=list)
    input_tokens: int = 0
    output_tokens: int = 0
    node_trace: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise CorpusError(f"pair {self.pair_id}: token counts must be >= 0")
        roles = [t.role for t in self.turns]
        for r in roles:
            if r not in ("system", "user", "assistant"):
                raise CorpusError(f"pair {self.pair_id}: unknown turn role {r!r}")
        body = roles[:]
        while body and body[0] == "system":
            body = body[1:]
        for i, r in enumerate(body):
            expected = "user" if i % 2 == 0 else "assistant"
            if r == "system":
                raise CorpusError(
                    f"pair {self.pair_id}: system turns allowed only at the start"
                )
            if r != expected:
                raise CorpusError(
                    f"pair {self.pair_id}: turns must alternate user/assistant, "
                    f"got {r!r} at position {i}"
                )

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "turns": [t.to_json() for t in self.turns],
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "node_trace": list(self.node_trace),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChatTranscript":
        turns = [Turn(t.get("role", ""), t.get("content", "")) for t in obj.get("turns", [])]
        return cls(
            pair_id=obj.get("pair_id", ""),
            turns=turns,
            input_tokens=int(obj.get("input_tokens", 0)),
            output_tokens=int(obj.get("output_tokens", 0)),
            node_trace=list(obj.get("node_trace", []) or []),
        )


@dataclass
class Corpus:
    """Validated, immutable-by-convention collection of pairs."""

    pairs: list[PairRecord] = field(default_factory=list)

    def __post_init__(self):
        self._by_pair_id: dict[str, PairRecord] = {}
        seen_combo: set[tuple[str, str]] = set()
        pubs: dict[str, Publication] = {}
        ids: dict[str, Identifier] = {}
        for p in self.pairs:
            if p.pair_id in self._by_pair_id:
                raise CorpusError(f"duplicate pair_id {p.pair_id!r}")
            combo = (p.publication.pub_id, p.identifier.accession)
            if combo in seen_combo:
                raise CorpusError(
                    f"duplicate (publication, accession) pair "
                    f"{combo[0]!r}/{combo[1]!r} (pair {p.pair_id})"
                )
            seen_combo.add(combo)
            prev_pub = pubs.get(p.publication.pub_id)
            if prev_pub is not None and prev_pub != p.publication:
                raise CorpusError(
                    f"publication {p.publication.pub_id!r} repeated with differing fields"
                )
            pubs[p.publication.pub_id] = p.publication
            prev_id = ids.get(p.identifier.accession)
            if prev_id is not None and prev_id != p.identifier:
                raise CorpusError(
                    f"identifier {p.identifier.accession!r} repeated with differing fields"
                )
            ids[p.identifier.accession] = p.identifier
            self._by_pair_id[p.pair_id] = p
        self.publications = pubs
        self.identifiers = ids

    def __len__(self) -> int:
        return len(self.pairs)

    def get(self, pair_id: str) -> Optional[PairRecord]:
        return self._by_pair_id.get(pair_id)

    def __contains__(self, pair_id: str) -> bool:
        return pair_id in self._by_pair_id


def _iter_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line, object_pairs_hook=_reject_dup_keys)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"malformed JSON ({exc.msg})", line=lineno) from exc
            if not isinstance(obj, dict):
                raise CorpusError("record must be a JSON object", line=lineno)
            yield lineno, obj


def _reject_dup_keys(pairs):
    obj = {}
    for key, value in pairs:
        if key in obj:
            raise json.JSONDecodeError(f"duplicate key {key!r}", "", 0)
        obj[key] = value
    return obj


def _write_jsonl(records: Iterable[dict], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for obj in records:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def load_corpus(path, allowed_classes: Optional[set[str]] = None) -> Corpus:
    """Load and validate ``pairs.jsonl``.

    ``allowed_classes`` optionally restricts identifier_class to a configured
    tag set; when omitted any non-empty tag is accepted (the class list is
    deployment configuration, not code).
    """
    pairs = []
    for lineno, obj in _iter_jsonl(Path(path)):
        try:
            pair = PairRecord.from_json(obj)
        except CorpusError as exc:
            raise CorpusError(str(exc), line=lineno) from exc
        if allowed_classes is not None and pair.identifier.identifier_class not in allowed_classes:
            raise CorpusError(
                f"pair {pair.pair_id}: identifier_class "
                f"{pair.identifier.identifier_class!r} not in configured classes",
                line=lineno,
            )
        pairs.append(pair)
    try:
        return Corpus(pairs)
    except CorpusError as exc:
        raise CorpusError(f"{path}: {exc}") from exc


def save_corpus(corpus: Corpus, path) -> None:
    _write_jsonl((p.to_json() for p in corpus.pairs), Path(path))


def load_annotations(path, corpus: Optional[Corpus] = None) -> list[AnnotationRecord]:
    """Load ``annotations.jsonl``; with ``corpus`` given, every pair_id must
    resolve to a loaded pair."""
    records = []
    for lineno, obj in _iter_jsonl(Path(path)):
        try:
            rec = AnnotationRecord.from_json(obj)
        except CorpusError as exc:
            raise CorpusError(str(exc), line=lineno) from exc
        if corpus is not None and rec.pair_id not in corpus:
            raise CorpusError(
                f"annotation references unknown pair {rec.pair_id!r}", line=lineno
            )
        records.append(rec)
    return records


def save_annotations(records: list[AnnotationRecord], path) -> None:
    """Write records to JSONL; a reload reproduces them field-for-field."""
    _write_jsonl((r.to_json() for r in records), Path(path))


def load_transcripts(path, corpus: Optional[Corpus] = None) -> list[ChatTranscript]:
    records = []
    for lineno, obj in _iter_jsonl(Path(path)):
        try:
            rec = ChatTranscript.from_json(obj)
        except CorpusError as exc:
            raise CorpusError(str(exc), line=lineno) from exc
        if corpus is not None and rec.pair_id not in corpus:
            raise CorpusError(
                f"transcript references unknown pair {rec.pair_id!r}", line=lineno
            )
        records.append(rec)
    return records


def save_transcripts(records: list[ChatTranscript], path) -> None:
    _write_jsonl((r.to_json() for r in records), Path(path))
