"""Scoring machine outputs against gold annotations.

The flow mirrors the semi-automated evaluation protocol: normalized exact
string matches are credited automatically as true positives, everything
else lands in an unresolved queue for a human reviewer, and the reviewer's
decisions (one-to-one matches, FP/FN verdicts, and aggregation groups)
complete the per-pair evaluation matrix.

Aggregation groups exist because a machine assistant often emits several
redundant or overly granular descriptions of one underlying item. A group
binds those members to a single counterpart so they count as exactly one
assessment, which keeps recall's numerator from exceeding its denominator.
The common direction folds machine outputs into one gold value; the rare
backwards direction folds several gold values into one machine output and
is flagged in reports.

Boolean Data Accessed values are scored immediately from the truth table:
gold T / machine T is a TP, F/F a TN, T/F an FN, and F/T an FP. True
negatives exist only for this binary field; the open-set fields have no
enumerable negative class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Optional

from .corpus import AnnotationRecord, normalize_label

CATEGORIES = ("data_accessed", "use_cases", "tools")
OPEN_SET_CATEGORIES = ("use_cases", "tools")
ASSESSMENTS = ("TP", "FP", "TN", "FN")
DIRECTIONS = ("none", "machine-into-gold", "gold-into-machine")

Normalizer = Callable[[str], str]


class SargoError(ValueError):
    pass


class PairMismatchError(SargoError):
    pass


class ConflictError(SargoError):
    """A value was claimed twice, or a decision references a value that is
    not (or no longer) unresolved."""


class IncompleteAdjudicationError(SargoError):
    def __init__(self, pair_id: str, leftovers: list[tuple[str, str, str]]):
        self.leftovers = leftovers
        listing = ", ".join(f"{side} {cat}: {value!r}" for cat, side, value in leftovers)
        super().__init__(f"pair {pair_id}: unresolved items remain ({listing})")


class IncompleteMatrixError(SargoError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise SargoError("confusion counts must be >= 0")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
            fn=self.fn + other.fn,
        )

    @property
    def relevant(self) -> int:
        return self.tp + self.fn

    @property
    def retrieved(self) -> int:
        return self.tp + self.fp

    def to_json(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}

    @classmethod
    def from_json(cls, obj: dict) -> "ConfusionCounts":
        return cls(
            tp=int(obj.get("tp", 0)),
            fp=int(obj.get("fp", 0)),
            tn=int(obj.get("tn", 0)),
            fn=int(obj.get("fn", 0)),
        )


@dataclass(frozen=True)
class MatrixRow:
    category: str
    gold_values: tuple[str, ...]
    machine_values: tuple[str, ...]
    assessment: str
    direction: str = "none"

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise SargoError(f"unknown category {self.category!r}")
        if self.assessment not in ASSESSMENTS:
            raise SargoError(f"unknown assessment {self.assessment!r}")
        if self.direction not in DIRECTIONS:
            raise SargoError(f"unknown aggregation direction {self.direction!r}")

    def to_json(self) -> dict:
        return {
            "category": self.category,
            "gold_values": list(self.gold_values),
            "machine_values": list(self.machine_values),
            "assessment": self.assessment,
            "direction": self.direction,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MatrixRow":
        return cls(
            category=obj["category"],
            gold_values=tuple(obj.get("gold_values", ())),
            machine_values=tuple(obj.get("machine_values", ())),
            assessment=obj["assessment"],
            direction=obj.get("direction", "none"),
        )


@dataclass
class EvaluationMatrix:
    pair_id: str
    rows: list[MatrixRow] = field(default_factory=list)
    unresolved_gold: dict[str, list[str]] = field(default_factory=dict)
    unresolved_machine: dict[str, list[str]] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return not any(self.unresolved_gold.values()) and not any(
            self.unresolved_machine.values()
        )

    def unresolved_count(self) -> int:
        return sum(len(v) for v in self.unresolved_gold.values()) + sum(
            len(v) for v in self.unresolved_machine.values()
        )

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "rows": [r.to_json() for r in self.rows],
            "unresolved_gold": {k: list(v) for k, v in self.unresolved_gold.items()},
            "unresolved_machine": {k: list(v) for k, v in self.unresolved_machine.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvaluationMatrix":
        return cls(
            pair_id=obj["pair_id"],
            rows=[MatrixRow.from_json(r) for r in obj.get("rows", [])],
            unresolved_gold={k: list(v) for k, v in obj.get("unresolved_gold", {}).items()},
            unresolved_machine={k: list(v) for k, v in obj.get("unresolved_machine", {}).items()},
        )


@dataclass(frozen=True)
class AggregationDecision:
    """A reviewer-made group of redundant/granular values that must count as
    one assessment. ``member_values`` live on the aggregated side given by
    ``direction``; ``target_value`` is their counterpart on the other side
    (a group without a counterpart scores as a single FP or FN)."""

    pair_id: str
    category: str
    member_values: tuple[str, ...]
    direction: str
    target_value: Optional[str] = None
    decided_by: str = ""
    rationale: Optional[str] = None

    def __post_init__(self):
        if self.category not in OPEN_SET_CATEGORIES:
            raise SargoError(f"aggregation only applies to open-set categories, got {self.category!r}")
        if self.direction not in ("machine-into-gold", "gold-into-machine"):
            raise SargoError(f"aggregation direction must be directional, got {self.direction!r}")
        if len(self.member_values) < 2:
            raise SargoError("aggregation groups need at least 2 member values")
        keys = [normalize_label(v) for v in self.member_values]
        if len(set(keys)) != len(keys):
            raise SargoError("aggregation members must be distinct")

    def to_json(self) -> dict:
        obj = {
            "pair_id": self.pair_id,
            "category": self.category,
            "member_values": list(self.member_values),
            "direction": self.direction,
            "target_value": self.target_value,
            "decided_by": self.decided_by,
        }
        if self.rationale is not None:
            obj["rationale"] = self.rationale
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "AggregationDecision":
        return cls(
            pair_id=obj["pair_id"],
            category=obj["category"],
            member_values=tuple(obj["member_values"]),
            direction=obj["direction"],
            target_value=obj.get("target_value"),
            decided_by=obj.get("decided_by", ""),
            rationale=obj.get("rationale"),
        )


@dataclass(frozen=True)
class Verdict:
    """A reviewer's fate for one unresolved value: ``match`` pairs it with a
    counterpart on the other side (TP); ``fp``/``fn`` confirm it has none."""

    pair_id: str
    category: str
    side: str  # "gold" | "machine"
    value: str
    fate: str  # "match" | "fp" | "fn"
    counterpart: Optional[str] = None
    decided_by: str = ""

    def __post_init__(self):
        if self.side not in ("gold", "machine"):
            raise SargoError(f"verdict side must be gold or machine, got {self.side!r}")
        if self.fate not in ("match", "fp", "fn"):
            raise SargoError(f"unknown verdict fate {self.fate!r}")
        if self.fate == "match" and not self.counterpart:
            raise SargoError("match verdicts need a counterpart value")
        if self.fate == "fp" and self.side != "machine":
            raise SargoError("fp verdicts apply to machine-side values")
        if self.fate == "fn" and self.side != "gold":
            raise SargoError("fn verdicts apply to gold-side values")

    def to_json(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "category": self.category,
            "side": self.side,
            "value": self.value,
            "fate": self.fate,
            "counterpart": self.counterpart,
            "decided_by": self.decided_by,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Verdict":
        return cls(
            pair_id=obj["pair_id"],
            category=obj["category"],
            side=obj["side"],
            value=obj["value"],
            fate=obj["fate"],
            counterpart=obj.get("counterpart"),
            decided_by=obj.get("decided_by", ""),
        )


def auto_match(
    gold: AnnotationRecord,
    machine: AnnotationRecord,
    normalizer: Normalizer = normalize_label,
) -> EvaluationMatrix:
    """Score what simple string matching can and queue the rest.

    The normalizer is deliberately conservative (trim, collapse whitespace,
    case-fold); anything fuzzier is a reviewer call and goes to the queue.
    """
    if gold.pair_id != machine.pair_id:
        raise PairMismatchError(
            f"gold record is for {gold.pair_id!r}, machine record for {machine.pair_id!r}"
        )
    if gold.origin != "consensus":
        raise SargoError(f"gold record must have origin=consensus, got {gold.origin!r}")
    if machine.origin != "machine":
        raise SargoError(f"machine record must have origin=machine, got {machine.origin!r}")

    rows = []
    if gold.data_accessed and machine.data_accessed:
        assessment = "TP"
    elif gold.data_accessed and not machine.data_accessed:
        assessment = "FN"
    elif not gold.data_accessed and machine.data_accessed:
        assessment = "FP"
    else:
        assessment = "TN"
    rows.append(
        MatrixRow(
            category="data_accessed",
            gold_values=("TRUE" if gold.data_accessed else "FALSE",),
            machine_values=("TRUE" if machine.data_accessed else "FALSE",),
            assessment=assessment,
        )
    )

    unresolved_gold: dict[str, list[str]] = {c: [] for c in OPEN_SET_CATEGORIES}
    unresolved_machine: dict[str, list[str]] = {c: [] for c in OPEN_SET_CATEGORIES}
    for category in OPEN_SET_CATEGORIES:
        gold_values = getattr(gold, category)
        machine_values = getattr(machine, category)
        machine_by_key = {normalizer(v): v for v in machine_values}
        matched_machine_keys = set()
        for gv in gold_values:
            key = normalizer(gv)
            if key in machine_by_key:
                matched_machine_keys.add(key)
                rows.append(
                    MatrixRow(
                        category=category,
                        gold_values=(gv,),
                        machine_values=(machine_by_key[key],),
                        assessment="TP",
                    )
                )
            else:
                unresolved_gold[category].append(gv)
        for mv in machine_values:
            if normalizer(mv) not in matched_machine_keys:
                unresolved_machine[category].append(mv)

    return EvaluationMatrix(
        pair_id=gold.pair_id,
        rows=rows,
        unresolved_gold=unresolved_gold,
        unresolved_machine=unresolved_machine,
    )


class _Queue:
    """Consumption bookkeeping for one side of one category."""

    def __init__(self, values: Iterable[str], label: str, normalizer: Normalizer):
        self._normalizer = normalizer
        self.label = label
        self._pending = {normalizer(v): v for v in values}

    def take(self, value: str) -> str:
        key = self._normalizer(value)
        if key not in self._pending:
            raise ConflictError(
                f"{self.label}: value {value!r} is not unresolved (missing, already "
                "matched automatically, or claimed by another decision)"
            )
        return self._pending.pop(key)

    def leftovers(self) -> list[str]:
        return list(self._pending.values())


def apply_decisions(
    matrix: EvaluationMatrix,
    aggregations: list[AggregationDecision],
    verdicts: list[Verdict],
    normalizer: Normalizer = normalize_label,
) -> EvaluationMatrix:
    """Resolve every queued item and return the completed matrix.

    All-or-nothing: conflicts (overlapping groups, double-claimed values)
    and leftovers raise without producing a partial result. The input
    matrix is not mutated.
    """
    queues: dict[tuple[str, str], _Queue] = {}
    for category in OPEN_SET_CATEGORIES:
        queues[("gold", category)] = _Queue(
            matrix.unresolved_gold.get(category, []), f"gold {category}", normalizer
        )
        queues[("machine", category)] = _Queue(
            matrix.unresolved_machine.get(category, []), f"machine {category}", normalizer
        )

    new_rows = list(matrix.rows)
    for decision in aggregations:
        if decision.pair_id != matrix.pair_id:
            raise PairMismatchError(
                f"decision targets pair {decision.pair_id!r}, matrix is {matrix.pair_id!r}"
            )
        if decision.direction == "machine-into-gold":
            member_side, target_side = "machine", "gold"
        else:
            member_side, target_side = "gold", "machine"
        members = tuple(
            queues[(member_side, decision.category)].take(v) for v in decision.member_values
        )
        if decision.target_value is not None:
            target = queues[(target_side, decision.category)].take(decision.target_value)
            gold_values = (target,) if target_side == "gold" else members
            machine_values = members if target_side == "gold" else (target,)
            assessment = "TP"
        else:
            gold_values = () if member_side == "machine" else members
            machine_values = members if member_side == "machine" else ()
            assessment = "FP" if member_side == "machine" else "FN"
        new_rows.append(
            MatrixRow(
                category=decision.category,
                gold_values=gold_values,
                machine_values=machine_values,
                assessment=assessment,
                direction=decision.direction,
            )
        )

    for verdict in verdicts:
        if verdict.pair_id != matrix.pair_id:
            raise PairMismatchError(
                f"verdict targets pair {verdict.pair_id!r}, matrix is {matrix.pair_id!r}"
            )
        value = queues[(verdict.side, verdict.category)].take(verdict.value)
        if verdict.fate == "match":
            other_side = "gold" if verdict.side == "machine" else "machine"
            counterpart = queues[(other_side, verdict.category)].take(verdict.counterpart)
            gold_value = counterpart if verdict.side == "machine" else value
            machine_value = value if verdict.side == "machine" else counterpart
            new_rows.append(
                MatrixRow(
                    category=verdict.category,
                    gold_values=(gold_value,),
                    machine_values=(machine_value,),
                    assessment="TP",
                )
            )
        elif verdict.fate == "fp":
            new_rows.append(
                MatrixRow(
                    category=verdict.category,
                    gold_values=(),
                    machine_values=(value,),
                    assessment="FP",
                )
            )
        else:
            new_rows.append(
                MatrixRow(
                    category=verdict.category,
                    gold_values=(value,),
                    machine_values=(),
                    assessment="FN",
                )
            )

    leftovers = []
    for (side, category), queue in queues.items():
        for value in queue.leftovers():
            leftovers.append((category, side, value))
    if leftovers:
        raise IncompleteAdjudicationError(matrix.pair_id, leftovers)

    return EvaluationMatrix(
        pair_id=matrix.pair_id,
        rows=new_rows,
        unresolved_gold={c: [] for c in OPEN_SET_CATEGORIES},
        unresolved_machine={c: [] for c in OPEN_SET_CATEGORIES},
    )


def score_pair(matrix: EvaluationMatrix) -> dict[str, ConfusionCounts]:
    """Tally assessments per category for a completed matrix."""
    if not matrix.complete:
        raise IncompleteMatrixError(
            f"pair {matrix.pair_id}: {matrix.unresolved_count()} unresolved items; "
            "apply decisions before scoring"
        )
    counts = {c: ConfusionCounts() for c in CATEGORIES}
    for row in matrix.rows:
        bump = {row.assessment.lower(): 1}
        counts[row.category] = counts[row.category] + ConfusionCounts(**bump)
    for category in OPEN_SET_CATEGORIES:
        if counts[category].tn != 0:
            raise SargoError(
                f"true negatives are undefined for open-set category {category!r}"
            )
    da = counts["data_accessed"]
    if matrix.rows and da.tp + da.fp + da.tn + da.fn != 1:
        raise SargoError(
            f"pair {matrix.pair_id}: data_accessed must carry exactly one assessment"
        )
    return counts


def total_counts(counts: dict[str, ConfusionCounts]) -> ConfusionCounts:
    """Pool one pair's categories, reproducing the printed per-publication
    confusion matrix (relevant/irrelevant vs retrieved/not-retrieved)."""
    total = ConfusionCounts()
    for c in counts.values():
        total = total + c
    return total


# -- decisions file ------------------------------------------------------------


def save_decisions(path, decisions_by_pair: dict[str, tuple[list[AggregationDecision], list[Verdict]]]) -> None:
    """One line per pair: {pair_id, aggregations[], verdicts[]}."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for pair_id in sorted(decisions_by_pair):
            aggregations, verdicts = decisions_by_pair[pair_id]
            fh.write(
                json.dumps(
                    {
                        "pair_id": pair_id,
                        "aggregations": [d.to_json() for d in aggregations],
                        "verdicts": [v.to_json() for v in verdicts],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_decisions(path) -> dict[str, tuple[list[AggregationDecision], list[Verdict]]]:
    out: dict[str, tuple[list[AggregationDecision], list[Verdict]]] = {}
    with open(Path(path), encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            pair_id = obj["pair_id"]
            if pair_id in out:
                raise SargoError(f"decisions file lists pair {pair_id!r} twice")
            out[pair_id] = (
                [AggregationDecision.from_json(d) for d in obj.get("aggregations", [])],
                [Verdict.from_json(v) for v in obj.get("verdicts", [])],
            )
    return out
