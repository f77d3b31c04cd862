"""Precision/recall/F1 pooling, report rendering, and the API cost model.

Pooling is micro-averaged: confusion counts are summed across pairs first,
then divided. The "overall" row additionally pools the three categories'
counts into one. Reports render to text, CSV and JSON with values rounded
to three decimals; the unrounded numbers stay available on the row objects.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .sargo import CATEGORIES, ConfusionCounts

OVERALL = "overall"


class MetricsError(ValueError):
    pass


class EmptyReportError(MetricsError):
    pass


@dataclass(frozen=True)
class MetricSet:
    precision: float
    recall: float

    def __post_init__(self):
        for name in ("precision", "recall"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise MetricsError(f"{name} must lie in [0, 1], got {v}")

    @property
    def f1(self) -> float:
        if self.precision + self.recall == 0:
            return 0.0
        return 2 * self.precision * self.recall / (self.precision + self.recall)

    @property
    def hallucination_rate(self) -> float:
        """Share of produced values with no gold counterpart: 1 - precision."""
        return 1.0 - self.precision

    def rounded(self, places: int = 3) -> dict[str, float]:
        return {
            "precision": round(self.precision, places),
            "recall": round(self.recall, places),
            "f1": round(self.f1, places),
            "hallucination_rate": round(self.hallucination_rate, places),
        }


def compute_metrics(counts: ConfusionCounts) -> MetricSet:
    """P = tp/(tp+fp), R = tp/(tp+fn); degenerate denominators give 0."""
    precision = counts.tp / counts.retrieved if counts.retrieved else 0.0
    recall = counts.tp / counts.relevant if counts.relevant else 0.0
    return MetricSet(precision=precision, recall=recall)


def pool_counts(
    per_pair: Iterable[Mapping[str, ConfusionCounts]],
) -> dict[str, ConfusionCounts]:
    pooled = {c: ConfusionCounts() for c in CATEGORIES}
    for scores in per_pair:
        for category, counts in scores.items():
            if category not in pooled:
                raise MetricsError(f"unknown category {category!r}")
            pooled[category] = pooled[category] + counts
    return pooled


@dataclass(frozen=True)
class ReportRow:
    set_label: str
    category: str
    counts: ConfusionCounts
    metrics: MetricSet


def pool_and_report(
    per_pair: Iterable[Mapping[str, ConfusionCounts]],
    set_label: str = "all",
    include_overall: bool = True,
) -> list[ReportRow]:
    """Micro-pool per-pair counts into per-category rows plus an overall row
    (the overall row pools all three categories' counts)."""
    per_pair = list(per_pair)
    if not per_pair:
        raise EmptyReportError("no scored pairs to report on")
    pooled = pool_counts(per_pair)
    rows = [
        ReportRow(set_label, category, pooled[category], compute_metrics(pooled[category]))
        for category in CATEGORIES
    ]
    if include_overall:
        total = ConfusionCounts()
        for counts in pooled.values():
            total = total + counts
        rows.append(ReportRow(set_label, OVERALL, total, compute_metrics(total)))
    return rows


CATEGORY_TITLES = {
    "data_accessed": "Data Accessed",
    "use_cases": "Use Cases",
    "tools": "Tools and Software",
    OVERALL: "Overall",
}


def render_text(rows: list[ReportRow]) -> str:
    header = f"{'Set':<12} {'Value Type':<20} {'Recall':>7} {'Precision':>10} {'F1':>7}"
    lines = [header, "-" * len(header)]
    for row in rows:
        m = row.metrics.rounded()
        lines.append(
            f"{row.set_label:<12} {CATEGORY_TITLES.get(row.category, row.category):<20} "
            f"{m['recall']:>7.3f} {m['precision']:>10.3f} {m['f1']:>7.3f}"
        )
    lines.append("(overall rows micro-pool the three categories' counts)")
    return "\n".join(lines)


def render_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    buf.write("set,category,recall,precision,f1\n")
    for row in rows:
        m = row.metrics.rounded()
        buf.write(
            f"{row.set_label},{row.category},{m['recall']:.3f},{m['precision']:.3f},{m['f1']:.3f}\n"
        )
    return buf.getvalue()


def render_json(rows: list[ReportRow]) -> str:
    payload = []
    for row in rows:
        entry = {"set": row.set_label, "category": row.category}
        entry.update(row.metrics.rounded())
        entry["counts"] = row.counts.to_json()
        payload.append(entry)
    return json.dumps(payload, indent=2, ensure_ascii=False)


RENDERERS = {"table": render_text, "csv": render_csv, "json": render_json}


@dataclass(frozen=True)
class CostEstimate:
    pair_count: int
    median_input_tokens: int
    median_output_tokens: int
    input_price: float  # currency per 1,000 tokens
    output_price: float

    def __post_init__(self):
        if self.pair_count < 0 or self.median_input_tokens < 0 or self.median_output_tokens < 0:
            raise MetricsError("counts must be >= 0")
        if self.input_price < 0 or self.output_price < 0:
            raise MetricsError("prices must be >= 0")

    @property
    def total(self) -> float:
        per_pair = (
            self.median_input_tokens * self.input_price
            + self.median_output_tokens * self.output_price
        ) / 1000.0
        return self.pair_count * per_pair

    @property
    def rounded_total(self) -> int:
        """Whole currency units for display."""
        return round(self.total)


def estimate_cost(
    pair_count: int,
    median_input_tokens: int,
    median_output_tokens: int,
    input_price: float,
    output_price: Optional[float] = None,
) -> CostEstimate:
    """Median-token cost projection for running a whole corpus. Prices are
    per 1,000 tokens; one price argument applies to both directions."""
    if output_price is None:
        output_price = input_price
    return CostEstimate(
        pair_count=pair_count,
        median_input_tokens=median_input_tokens,
        median_output_tokens=median_output_tokens,
        input_price=input_price,
        output_price=output_price,
    )
