"""JATS XML to plain text.

Transforms JATS-style publication XML (v1.2/v1.3 both parse identically
here) into whitespace-normalized plain text made of blocks separated by
blank lines, plus an optional chunking mode that packs whole blocks under a
size cap.

Serialization rules, pinned bit-exactly by the fixture tests:

* paragraphs: text content flattened, whitespace collapsed to single spaces
* section titles: own block, emitted only when ``drop_section_headers`` is off
* tables: one block; first line is label + caption, then one line per row
  (cells joined by single spaces), then one line per footnote paragraph
* figures: one block made of label + caption text; graphics and alt-text
  are ignored
* front matter (title, abstract) and back matter (acknowledgments,
  appendices, references) are emitted only when ``drop_front_back_matter``
  is off
* lists: one block per list item
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Optional

BLOCK_SEP = "\n\n"


class JatsError(ValueError):
    pass


class JatsParseError(JatsError):
    """Malformed XML; carries the parser's line/column position."""


class JatsStructureError(JatsError):
    """Well-formed XML that is not a usable JATS document (no body)."""


class OversizeBlockError(JatsError):
    def __init__(self, block_index: int, length: int, max_chars: int):
        self.block_index = block_index
        super().__init__(
            f"block {block_index} has {length} chars, exceeding max_chars={max_chars}; "
            "blocks are never split"
        )


@dataclass(frozen=True)
class ExtractionParams:
    """Inclusion/exclusion switches. Defaults reproduce the reference run:
    tables and figure text in, front/back matter and section headers out."""

    include_tables: bool = True
    include_figure_text: bool = True
    drop_front_back_matter: bool = True
    drop_section_headers: bool = True
    jats_version_hint: Optional[str] = None

    def __post_init__(self):
        if self.jats_version_hint not in (None, "1.2", "1.3"):
            raise JatsError(f"unsupported JATS version hint {self.jats_version_hint!r}")


@dataclass
class PlainText:
    text: str
    block_boundaries: list[int] = field(default_factory=list)

    def blocks(self) -> list[str]:
        """Recover the block list from text + boundaries."""
        out = []
        for i, start in enumerate(self.block_boundaries):
            if i + 1 < len(self.block_boundaries):
                end = self.block_boundaries[i + 1] - len(BLOCK_SEP)
            else:
                end = len(self.text)
            out.append(self.text[start:end])
        return out


@dataclass(frozen=True)
class Chunk:
    index: int
    text: str
    source_block_range: tuple[int, int]


def _local(tag) -> str:
    # strips any {namespace} prefix; JATS documents in the wild vary
    if isinstance(tag, str):
        return tag.rsplit("}", 1)[-1]
    return ""  # comments / processing instructions


def _collapse(text: str) -> str:
    return " ".join(text.split())


def _flat_text(el: ET.Element, skip: tuple[str, ...] = ()) -> str:
    """All character data under el, skipping subtrees whose local tag is in
    ``skip`` (their tails still belong to the surrounding text)."""
    parts = [el.text or ""]
    for child in el:
        if _local(child.tag) not in skip:
            parts.append(_flat_text(child, skip))
        parts.append(child.tail or "")
    return "".join(parts)


def _find_child(el: ET.Element, name: str) -> Optional[ET.Element]:
    for child in el:
        if _local(child.tag) == name:
            return child
    return None


def _find_all(el: ET.Element, name: str) -> list[ET.Element]:
    found = []
    for node in el.iter():
        if _local(node.tag) == name:
            found.append(node)
    return found


class _BlockCollector:
    def __init__(self, params: ExtractionParams):
        self.params = params
        self.blocks: list[str] = []

    def add(self, text: str) -> None:
        if text:
            self.blocks.append(text)

    # -- structural handlers -------------------------------------------------

    def walk(self, el: ET.Element) -> None:
        for child in el:
            self.dispatch(child)

    def dispatch(self, el: ET.Element) -> None:
        tag = _local(el.tag)
        if not tag:
            return
        if tag == "sec" or tag in ("app", "boxed-text", "disp-quote", "statement", "abstract", "ack", "notes", "app-group"):
            self.section(el)
        elif tag == "title" or tag == "label":
            if not self.params.drop_section_headers:
                self.add(_collapse(_flat_text(el)))
        elif tag == "p":
            self.paragraph(el)
        elif tag == "fig" or tag == "fig-group":
            self.figure(el)
        elif tag == "table-wrap" or tag == "table-wrap-group":
            self.table(el)
        elif tag == "list":
            self.list_items(el)
        elif tag == "ref-list":
            self.ref_list(el)
        elif tag in ("graphic", "media", "alt-text", "object-id", "supplementary-material"):
            return
        else:
            # unknown container: flatten whatever text it holds into one block
            self.add(_collapse(_flat_text(el)))

    def section(self, el: ET.Element) -> None:
        for child in el:
            tag = _local(child.tag)
            if tag == "title" or tag == "label":
                if not self.params.drop_section_headers:
                    self.add(_collapse(_flat_text(child)))
            else:
                self.dispatch(child)

    def paragraph(self, el: ET.Element) -> None:
        # figures/tables nested in a paragraph become their own blocks after it
        embedded = ("fig", "table-wrap", "list")
        self.add(_collapse(_flat_text(el, skip=embedded)))
        self._emit_embedded(el)

    def _emit_embedded(self, el: ET.Element) -> None:
        for child in el:
            tag = _local(child.tag)
            if tag == "fig":
                self.figure(child)
            elif tag == "table-wrap":
                self.table(child)
            elif tag == "list":
                self.list_items(child)
            else:
                self._emit_embedded(child)

    def figure(self, el: ET.Element) -> None:
        if not self.params.include_figure_text:
            return
        if _local(el.tag) == "fig-group":
            for child in el:
                if _local(child.tag) == "fig":
                    self.figure(child)
            return
        parts = []
        label = _find_child(el, "label")
        if label is not None:
            parts.append(_collapse(_flat_text(label)))
        caption = _find_child(el, "caption")
        if caption is not None:
            parts.append(_collapse(_flat_text(caption)))
        self.add(" ".join(p for p in parts if p))

    def table(self, el: ET.Element) -> None:
        if not self.params.include_tables:
            return
        if _local(el.tag) == "table-wrap-group":
            for child in el:
                if _local(child.tag) == "table-wrap":
                    self.table(child)
            return
        lines = []
        head_parts = []
        label = _find_child(el, "label")
        if label is not None:
            head_parts.append(_collapse(_flat_text(label)))
        caption = _find_child(el, "caption")
        if caption is not None:
            head_parts.append(_collapse(_flat_text(caption)))
        head = " ".join(p for p in head_parts if p)
        if head:
            lines.append(head)
        for row in _find_all(el, "tr"):
            cells = [
                _collapse(_flat_text(cell))
                for cell in row
                if _local(cell.tag) in ("td", "th")
            ]
            line = " ".join(c for c in cells if c)
            if line:
                lines.append(line)
        foot = _find_child(el, "table-wrap-foot")
        if foot is not None:
            for note in foot.iter():
                if _local(note.tag) == "p":
                    text = _collapse(_flat_text(note))
                    if text:
                        lines.append(text)
        self.add("\n".join(lines))

    def list_items(self, el: ET.Element) -> None:
        for item in el:
            if _local(item.tag) == "list-item":
                self.add(_collapse(_flat_text(item)))

    def ref_list(self, el: ET.Element) -> None:
        for child in el:
            tag = _local(child.tag)
            if tag == "title" and not self.params.drop_section_headers:
                self.add(_collapse(_flat_text(child)))
            elif tag == "ref":
                self.add(_collapse(_flat_text(child)))


def extract_text(xml_document: str, params: Optional[ExtractionParams] = None) -> PlainText:
    """Transform one JATS document into plain text blocks.

    Raises JatsParseError for malformed XML (with position) and
    JatsStructureError when the document has no body element.
    """
    if params is None:
        params = ExtractionParams()
    try:
        root = ET.fromstring(xml_document)
    except ET.ParseError as exc:
        line, col = exc.position
        raise JatsParseError(f"malformed XML at line {line}, column {col}: {exc.msg}") from exc

    article = root if _local(root.tag) == "article" else _find_child(root, "article")
    if article is None:
        article = root
    body = _find_child(article, "body")
    if body is None:
        raise JatsStructureError("document has no <body> element")

    collector = _BlockCollector(params)
    if not params.drop_front_back_matter:
        front = _find_child(article, "front")
        if front is not None:
            for title_el in _find_all(front, "article-title"):
                collector.add(_collapse(_flat_text(title_el)))
                break
            for abstract in _find_all(front, "abstract"):
                collector.section(abstract)
    collector.walk(body)
    if not params.drop_front_back_matter:
        back = _find_child(article, "back")
        if back is not None:
            collector.walk(back)

    blocks = collector.blocks
    text = BLOCK_SEP.join(blocks)
    boundaries = []
    offset = 0
    for b in blocks:
        boundaries.append(offset)
        offset += len(b) + len(BLOCK_SEP)
    return PlainText(text=text, block_boundaries=boundaries)


_TAG_PATTERN = re.compile(r"</?[A-Za-z][^>]*>")


def contains_markup(text: str) -> bool:
    """True when text still holds something shaped like an XML tag."""
    return _TAG_PATTERN.search(text) is not None


def chunk_text(pt: PlainText, max_chars: int) -> list[Chunk]:
    """Greedy partition of blocks into chunks of at most max_chars.

    Blocks are never split; a single block over the cap raises
    OversizeBlockError. Joining the chunk texts with the block separator
    reproduces ``pt.text`` exactly.
    """
    if max_chars <= 0:
        raise JatsError(f"max_chars must be > 0, got {max_chars}")
    blocks = pt.blocks()
    for i, b in enumerate(blocks):
        if len(b) > max_chars:
            raise OversizeBlockError(i, len(b), max_chars)

    chunks: list[Chunk] = []
    current: list[str] = []
    first_block = 0
    for i, b in enumerate(blocks):
        if current and len(BLOCK_SEP.join(current + [b])) > max_chars:
            chunks.append(
                Chunk(index=len(chunks), text=BLOCK_SEP.join(current),
                      source_block_range=(first_block, i - 1))
            )
            current = []
            first_block = i
        current.append(b)
    if current:
        chunks.append(
            Chunk(index=len(chunks), text=BLOCK_SEP.join(current),
                  source_block_range=(first_block, len(blocks) - 1))
        )
    return chunks
