"""Context statements describing an accession.

Each identifier class carries a statement template; rendering one against
an identifier's metadata yields the natural-language context sentence fed
to the model alongside the publication text. The shipped registry covers
the nucleotide-sequence and assembly classes; deployments extend it with
their own class entries (the registry file is configuration, not code).

Placeholders resolve from the identifier's metadata, except three built-ins
taken from the identifier record itself: ``accession``, ``source_db`` and
``identifier_class``. The main template may only reference required keys;
optional segments are appended when every key they mention is present and
silently dropped otherwise.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .corpus import Identifier

BUILTIN_KEYS = ("accession", "source_db", "identifier_class")

_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class RagError(ValueError):
    pass


class UnknownClassError(RagError):
    def __init__(self, identifier_class: str):
        self.identifier_class = identifier_class
        super().__init__(f"no statement template registered for class {identifier_class!r}")


class IncompleteMetadataError(RagError):
    def __init__(self, accession: str, key: str):
        self.key = key
        super().__init__(f"identifier {accession}: required metadata key {key!r} missing")


def placeholders(template: str) -> list[str]:
    return _PLACEHOLDER.findall(template)


@dataclass(frozen=True)
class StatementTemplate:
    identifier_class: str
    template: str
    required_keys: tuple[str, ...]
    optional_segments: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.required_keys:
            raise RagError(f"class {self.identifier_class!r}: required_keys must be non-empty")
        allowed = set(self.required_keys) | set(BUILTIN_KEYS)
        for name in placeholders(self.template):
            if name not in allowed:
                raise RagError(
                    f"class {self.identifier_class!r}: placeholder {{{name}}} "
                    "is neither a required key nor a built-in"
                )
        if "accession" not in placeholders(self.template):
            raise RagError(
                f"class {self.identifier_class!r}: template must mention the accession"
            )


@dataclass
class TemplateRegistry:
    templates: dict[str, StatementTemplate] = field(default_factory=dict)

    def add(self, tpl: StatementTemplate) -> None:
        if tpl.identifier_class in self.templates:
            raise RagError(f"duplicate template for class {tpl.identifier_class!r}")
        self.templates[tpl.identifier_class] = tpl

    def get(self, identifier_class: str) -> Optional[StatementTemplate]:
        return self.templates.get(identifier_class)

    def classes(self) -> list[str]:
        return sorted(self.templates)


def load_registry(path) -> TemplateRegistry:
    """Read a registry file: a JSON array of
    {identifier_class, template, required_keys[], optional_segments[]}."""
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(entries, list):
        raise RagError("template registry must be a JSON array")
    registry = TemplateRegistry()
    for entry in entries:
        registry.add(
            StatementTemplate(
                identifier_class=entry["identifier_class"],
                template=entry["template"],
                required_keys=tuple(entry["required_keys"]),
                optional_segments=tuple(entry.get("optional_segments", ())),
            )
        )
    return registry


def default_registry() -> TemplateRegistry:
    """Registry shipped with the package (nucleotide-sequence, assembly)."""
    with resources.files("citefn.data").joinpath("templates.json").open(encoding="utf-8") as fh:
        entries = json.load(fh)
    registry = TemplateRegistry()
    for entry in entries:
        registry.add(
            StatementTemplate(
                identifier_class=entry["identifier_class"],
                template=entry["template"],
                required_keys=tuple(entry["required_keys"]),
                optional_segments=tuple(entry.get("optional_segments", ())),
            )
        )
    return registry


def _render(template: str, values: dict[str, str]) -> str:
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], template)


def build_statement(identifier: Identifier, registry: TemplateRegistry) -> str:
    """Render the context statement for one identifier.

    Raises UnknownClassError when no template covers the identifier's class
    and IncompleteMetadataError naming the first missing required key.
    """
    tpl = registry.get(identifier.identifier_class)
    if tpl is None:
        raise UnknownClassError(identifier.identifier_class)

    values = dict(identifier.metadata)
    values["accession"] = identifier.accession
    values["source_db"] = identifier.source_db
    values["identifier_class"] = identifier.identifier_class

    for key in tpl.required_keys:
        if key not in values:
            raise IncompleteMetadataError(identifier.accession, key)

    parts = [_render(tpl.template, values)]
    for segment in tpl.optional_segments:
        if all(name in values for name in placeholders(segment)):
            parts.append(_render(segment, values))
    return " ".join(parts)
