"""Decision-tree chat workflow for one (publication, accession) pair.

One pair gets one chat. The tree's root prompt carries the full text; later
prompts carry the context statement and accession. The endpoint is
stateless, so the complete conversation history is resent on every turn.
Three answer kinds exist: boolean (TRUE/FALSE token), free text, and
itemized string arrays. A boolean node that fails to parse is reprompted
once before the run is abandoned.

Prompt wording lives in the tree file, not in code: the shipped
``data/tree.json`` reproduces the workflow's control flow with placeholder
prompts, and deployments substitute their own language.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .corpus import AnnotationRecord, ChatTranscript, PairRecord, Turn, normalize_label
from .jats import PlainText
from .llm import ChatClient, GenerationConfig

TERMINAL = "END"
ANSWER_KINDS = ("boolean", "text", "string_array")
FIELDS = ("data_accessed", "use_cases", "tools")
PROMPT_PLACEHOLDERS = ("full_text", "context_statement", "accession")

BOOLEAN_REPROMPT = "Answer only TRUE or FALSE."


class OrchestratorError(Exception):
    pass


class TreeError(OrchestratorError):
    """The tree file violates a structural invariant."""


class AmbiguousAnswerError(OrchestratorError):
    def __init__(self, raw: str):
        self.raw = raw
        super().__init__(f"could not read a single TRUE/FALSE from {raw!r}")


class ParseFailureError(OrchestratorError):
    """A node's answer stayed unparseable after the one allowed reprompt."""

    def __init__(self, node_id: str, raw: str):
        self.node_id = node_id
        self.raw = raw
        super().__init__(f"node {node_id!r}: unparseable answer after reprompt: {raw!r}")


@dataclass(frozen=True)
class TreeNode:
    node_id: str
    prompt_template: str
    answer_kind: str
    edges: dict[str, str]
    field: Optional[str] = None


@dataclass
class PromptTree:
    root: str
    nodes: dict[str, TreeNode]
    system_prompt: Optional[str] = None

    def __post_init__(self):
        self._validate()

    def _validate(self) -> None:
        if self.root not in self.nodes:
            raise TreeError(f"root node {self.root!r} is not defined")
        fields_seen: dict[str, str] = {}
        for node in self.nodes.values():
            if node.answer_kind not in ANSWER_KINDS:
                raise TreeError(f"node {node.node_id!r}: unknown answer_kind {node.answer_kind!r}")
            expected_edges = {"true", "false"} if node.answer_kind == "boolean" else {"any"}
            if set(node.edges) != expected_edges:
                raise TreeError(
                    f"node {node.node_id!r}: {node.answer_kind} node needs edges "
                    f"{sorted(expected_edges)}, got {sorted(node.edges)}"
                )
            for target in node.edges.values():
                if target != TERMINAL and target not in self.nodes:
                    raise TreeError(f"node {node.node_id!r}: edge to undefined node {target!r}")
            if node.field is not None:
                if node.field not in FIELDS:
                    raise TreeError(f"node {node.node_id!r}: unknown output field {node.field!r}")
                if node.field in fields_seen:
                    raise TreeError(
                        f"output field {node.field!r} set by both "
                        f"{fields_seen[node.field]!r} and {node.node_id!r}"
                    )
                fields_seen[node.field] = node.node_id
                want = "boolean" if node.field == "data_accessed" else "string_array"
                if node.answer_kind != want:
                    raise TreeError(
                        f"node {node.node_id!r}: field {node.field!r} requires a {want} node"
                    )
            for name in re.findall(r"\{([A-Za-z_][A-Za-z0-9_]*)\}", node.prompt_template):
                if name not in PROMPT_PLACEHOLDERS:
                    raise TreeError(
                        f"node {node.node_id!r}: unknown prompt placeholder {{{name}}}"
                    )
        self._check_acyclic_and_reachable()
        self._check_short_circuit(fields_seen)

    def _check_acyclic_and_reachable(self) -> None:
        # DFS with colors; every node must be visited and reach END
        WHITE, GRAY, BLACK = 0, 1, 2
        color = {node_id: WHITE for node_id in self.nodes}

        def visit(node_id: str) -> None:
            color[node_id] = GRAY
            for target in self.nodes[node_id].edges.values():
                if target == TERMINAL:
                    continue
                if color[target] == GRAY:
                    raise TreeError(f"cycle through node {target!r}")
                if color[target] == WHITE:
                    visit(target)
            color[node_id] = BLACK

        visit(self.root)
        unreachable = sorted(n for n, c in color.items() if c == WHITE)
        if unreachable:
            raise TreeError(f"unreachable nodes: {unreachable}")
        # acyclic + all edges eventually hit TERMINAL, so every path terminates

    def _check_short_circuit(self, fields_seen: dict[str, str]) -> None:
        gate = fields_seen.get("data_accessed")
        if gate is None:
            return
        start = self.nodes[gate].edges["false"]
        seen = set()
        stack = [] if start == TERMINAL else [start]
        while stack:
            node_id = stack.pop()
            if node_id in seen:
                continue
            seen.add(node_id)
            node = self.nodes[node_id]
            if node.field in ("use_cases", "tools"):
                raise TreeError(
                    f"node {node_id!r} elicits {node.field!r} on the data_accessed=false "
                    "branch; a negative pair must not be prompted for use cases or tools"
                )
            stack.extend(t for t in node.edges.values() if t != TERMINAL)

    def validate_trace(self, node_trace: list[str]) -> bool:
        """True when the trace is a root-to-leaf path of this tree."""
        if not node_trace or node_trace[0] != self.root:
            return False
        for here, nxt in zip(node_trace, node_trace[1:]):
            if here not in self.nodes or nxt not in self.nodes[here].edges.values():
                return False
        last = node_trace[-1]
        return last in self.nodes and TERMINAL in self.nodes[last].edges.values()


def _tree_from_obj(obj: dict) -> PromptTree:
    nodes = {}
    for node_id, spec in obj.get("nodes", {}).items():
        nodes[node_id] = TreeNode(
            node_id=node_id,
            prompt_template=spec["prompt_template"],
            answer_kind=spec["answer_kind"],
            edges=dict(spec["edges"]),
            field=spec.get("field"),
        )
    return PromptTree(root=obj.get("root", ""), nodes=nodes, system_prompt=obj.get("system_prompt"))


def load_tree(path) -> PromptTree:
    return _tree_from_obj(json.loads(Path(path).read_text(encoding="utf-8")))


def default_tree() -> PromptTree:
    with resources.files("citefn.data").joinpath("tree.json").open(encoding="utf-8") as fh:
        return _tree_from_obj(json.load(fh))


_TRUE_TOKEN = re.compile(r"\btrue\b", re.IGNORECASE)
_FALSE_TOKEN = re.compile(r"\bfalse\b", re.IGNORECASE)
_ITEM_PREFIX = re.compile(r"^\s*(?:[-*•]|\d+[.)])\s*")
_EMPTY_MARKERS = frozenset({"none", "n/a", "no tools", "no use cases"})


def parse_answer(raw: str, kind: str):
    """Turn a model reply into a typed value.

    boolean: exactly one TRUE/FALSE token, possibly embedded in a short
    sentence. text: passthrough. string_array: one item per line or a
    comma/semicolon-delimited single line; bullets and numbering stripped,
    empties dropped, a lone "None" means no items.
    """
    if kind == "text":
        return raw
    if kind == "boolean":
        has_true = _TRUE_TOKEN.search(raw) is not None
        has_false = _FALSE_TOKEN.search(raw) is not None
        if has_true == has_false:
            raise AmbiguousAnswerError(raw)
        return has_true
    if kind == "string_array":
        stripped = raw.strip()
        if not stripped or stripped.rstrip(".").casefold() in _EMPTY_MARKERS:
            return []
        if "\n" in stripped:
            parts = stripped.splitlines()
        elif ";" in stripped:
            parts = stripped.split(";")
        elif "," in stripped:
            parts = stripped.split(",")
        else:
            parts = [stripped]
        items = []
        for part in parts:
            item = _ITEM_PREFIX.sub("", part).strip()
            if item:
                items.append(item)
        return items
    raise OrchestratorError(f"unknown answer kind {kind!r}")


@dataclass
class MachineOutput:
    record: AnnotationRecord
    transcript: ChatTranscript

    @property
    def node_trace(self) -> list[str]:
        return self.transcript.node_trace


def _dedupe(values: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for v in values:
        key = normalize_label(v)
        if key and key not in seen:
            seen.add(key)
            out.append(v.strip())
    return out


def run_chat(
    pair: PairRecord,
    full_text: PlainText,
    context: str,
    tree: PromptTree,
    client: ChatClient,
    cfg: Optional[GenerationConfig] = None,
) -> MachineOutput:
    """Traverse the decision tree for one pair and collect its three output
    fields. Unreached fields default to data_accessed=False and empty lists.

    Exact duplicates (after normalization) in model-returned lists are
    dropped so the output always satisfies the annotation invariants.
    """
    if cfg is None:
        cfg = GenerationConfig()
    if cfg.sampling_enabled:
        raise OrchestratorError(
            "pipeline runs require sampling_enabled=False for reproducible output"
        )
    if not full_text.text:
        raise OrchestratorError(f"pair {pair.pair_id}: full text is empty")

    substitutions = {
        "full_text": full_text.text,
        "context_statement": context,
        "accession": pair.identifier.accession,
    }

    messages: list[tuple[str, str]] = []
    if tree.system_prompt:
        messages.append(("system", tree.system_prompt))
    node_trace: list[str] = []
    input_tokens = 0
    output_tokens = 0
    answers: dict[str, object] = {}

    def ask(prompt: str):
        nonlocal input_tokens, output_tokens
        messages.append(("user", prompt))
        response = client.chat(messages, cfg)
        messages.append(("assistant", response.content))
        input_tokens += response.input_tokens
        output_tokens += response.output_tokens
        return response.content

    node_id = tree.root
    while True:
        node = tree.nodes[node_id]
        prompt = re.sub(
            r"\{([A-Za-z_][A-Za-z0-9_]*)\}", lambda m: substitutions[m.group(1)], node.prompt_template
        )
        raw = ask(prompt)
        node_trace.append(node_id)
        try:
            value = parse_answer(raw, node.answer_kind)
        except AmbiguousAnswerError:
            if node.answer_kind != "boolean":
                raise
            raw = ask(BOOLEAN_REPROMPT)
            try:
                value = parse_answer(raw, node.answer_kind)
            except AmbiguousAnswerError as exc:
                raise ParseFailureError(node_id, raw) from exc

        if node.field is not None:
            answers[node.field] = value

        if node.answer_kind == "boolean":
            target = node.edges["true" if value else "false"]
        else:
            target = node.edges["any"]
        if target == TERMINAL:
            break
        node_id = target

    accessed = bool(answers.get("data_accessed", False))
    record = AnnotationRecord(
        pair_id=pair.pair_id,
        origin="machine",
        data_accessed=accessed,
        use_cases=_dedupe(answers.get("use_cases", [])) if accessed else [],
        tools=_dedupe(answers.get("tools", [])) if accessed else [],
    )
    transcript = ChatTranscript(
        pair_id=pair.pair_id,
        turns=[Turn(role, content) for role, content in messages],
        input_tokens=input_tokens,
        output_tokens=output_tokens,
        node_trace=node_trace,
    )
    return MachineOutput(record=record, transcript=transcript)
