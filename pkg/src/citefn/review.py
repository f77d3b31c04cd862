"""Review API backing the adjudication UI.

State lives in the same JSONL stores the CLI uses: gold and machine
annotation files plus one decisions file, so ``citefn score`` and the UI
are two front-ends over a single source of truth. GET endpoints are pure
reads; a decision POST either fully validates and persists or changes
nothing.

Endpoints:
  GET  /api/queue                      pairs with unresolved counts
  GET  /api/pairs/{pair_id}            matrix, queues, text excerpt, session
  POST /api/pairs/{pair_id}/decisions  apply verdicts + aggregations
  GET  /api/metrics                    pooled report over completed pairs
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles

from .corpus import AnnotationRecord, Corpus, load_annotations, load_corpus
from .metrics import compute_metrics, pool_and_report
from .sargo import (
    AggregationDecision,
    ConflictError,
    EvaluationMatrix,
    IncompleteAdjudicationError,
    SargoError,
    Verdict,
    apply_decisions,
    auto_match,
    load_decisions,
    save_decisions,
    score_pair,
    total_counts,
)

EXCERPT_RADIUS = 200


class ReviewError(Exception):
    pass


class UnknownPairError(ReviewError):
    pass


class AlreadyCompleteError(ReviewError):
    pass


@dataclass
class ReviewStore:
    """Adjudication state over one corpus run."""

    corpus: Corpus
    gold: dict[str, AnnotationRecord]
    machine: dict[str, AnnotationRecord]
    texts_dir: Optional[Path] = None
    decisions_path: Optional[Path] = None
    decisions: dict[str, tuple[list[AggregationDecision], list[Verdict]]] = field(
        default_factory=dict
    )

    @classmethod
    def from_files(
        cls,
        pairs_path,
        gold_path,
        machine_path,
        texts_dir=None,
        decisions_path=None,
    ) -> "ReviewStore":
        corpus = load_corpus(pairs_path)
        gold = {
            r.pair_id: r
            for r in load_annotations(gold_path, corpus=corpus)
            if r.origin == "consensus"
        }
        machine = {r.pair_id: r for r in load_annotations(machine_path, corpus=corpus)}
        decisions = {}
        if decisions_path and Path(decisions_path).exists():
            decisions = load_decisions(decisions_path)
        return cls(
            corpus=corpus,
            gold=gold,
            machine=machine,
            texts_dir=Path(texts_dir) if texts_dir else None,
            decisions_path=Path(decisions_path) if decisions_path else None,
            decisions=decisions,
        )

    # -- pure reads -------------------------------------------------------------

    def pair_ids(self) -> list[str]:
        return sorted(set(self.gold) & set(self.machine))

    def matrix_for(self, pair_id: str) -> EvaluationMatrix:
        if pair_id not in self.gold or pair_id not in self.machine:
            raise UnknownPairError(pair_id)
        matrix = auto_match(self.gold[pair_id], self.machine[pair_id])
        if pair_id in self.decisions:
            aggregations, verdicts = self.decisions[pair_id]
            matrix = apply_decisions(matrix, aggregations, verdicts)
        return matrix

    def is_complete(self, pair_id: str) -> bool:
        return self.matrix_for(pair_id).complete

    def queue(self) -> list[dict]:
        out = []
        for pair_id in self.pair_ids():
            matrix = self.matrix_for(pair_id)
            out.append(
                {
                    "pair_id": pair_id,
                    "unresolved": matrix.unresolved_count(),
                    "unresolved_gold": sum(len(v) for v in matrix.unresolved_gold.values()),
                    "unresolved_machine": sum(
                        len(v) for v in matrix.unresolved_machine.values()
                    ),
                    "status": "complete" if matrix.complete else "open",
                }
            )
        return out

    def _excerpt(self, pair_id: str) -> dict:
        pair = self.corpus.get(pair_id)
        empty = {"excerpt": "", "excerpt_start": 0, "mention_offsets": []}
        if pair is None or self.texts_dir is None:
            return empty
        path = self.texts_dir / f"{pair.publication.pub_id}.txt"
        if not path.exists():
            return empty
        text = path.read_text(encoding="utf-8")
        accession = pair.identifier.accession
        offsets = []
        start = text.find(accession)
        cursor = start
        while cursor != -1:
            offsets.append(cursor)
            cursor = text.find(accession, cursor + 1)
        anchor = start if start != -1 else 0
        lo = max(0, anchor - EXCERPT_RADIUS)
        hi = min(len(text), anchor + len(accession) + EXCERPT_RADIUS)
        return {"excerpt": text[lo:hi], "excerpt_start": lo, "mention_offsets": offsets}

    def pair_payload(self, pair_id: str) -> dict:
        matrix = self.matrix_for(pair_id)
        gold = self.gold[pair_id]
        machine = self.machine[pair_id]
        payload = {
            "pair_id": pair_id,
            "session": {
                "session_id": pair_id,
                "status": "complete" if matrix.complete else "open",
                "submitted_decisions": pair_id in self.decisions,
            },
            "gold": gold.to_json(),
            "machine": machine.to_json(),
            "matrix": matrix.to_json(),
        }
        payload.update(self._excerpt(pair_id))
        if matrix.complete:
            payload["metrics"] = self._pair_metrics(matrix)
        return payload

    def _pair_metrics(self, matrix: EvaluationMatrix) -> dict:
        counts = score_pair(matrix)
        total = total_counts(counts)
        preview = compute_metrics(total).rounded()
        preview["counts"] = total.to_json()
        preview["by_category"] = {
            category: {**compute_metrics(c).rounded(), "counts": c.to_json()}
            for category, c in counts.items()
        }
        return preview

    def pooled_metrics(self) -> dict:
        scored = []
        for pair_id in self.pair_ids():
            matrix = self.matrix_for(pair_id)
            if matrix.complete:
                scored.append(score_pair(matrix))
        if not scored:
            return {"pairs_scored": 0, "rows": []}
        rows = pool_and_report(scored, set_label="review")
        return {
            "pairs_scored": len(scored),
            "rows": [
                {
                    "set": r.set_label,
                    "category": r.category,
                    **r.metrics.rounded(),
                    "counts": r.counts.to_json(),
                }
                for r in rows
            ],
        }

    # -- the one mutation ---------------------------------------------------------

    def submit(
        self,
        pair_id: str,
        aggregations: list[AggregationDecision],
        verdicts: list[Verdict],
    ) -> EvaluationMatrix:
        """Validate and persist one pair's decisions atomically."""
        if pair_id not in self.gold or pair_id not in self.machine:
            raise UnknownPairError(pair_id)
        if pair_id in self.decisions:
            raise AlreadyCompleteError(f"pair {pair_id} already has submitted decisions")
        base = auto_match(self.gold[pair_id], self.machine[pair_id])
        if base.complete and (aggregations or verdicts):
            raise AlreadyCompleteError(f"pair {pair_id} has nothing to adjudicate")
        completed = apply_decisions(base, aggregations, verdicts)
        self.decisions[pair_id] = (aggregations, verdicts)
        if self.decisions_path:
            save_decisions(self.decisions_path, self.decisions)
        return completed


def create_app(store: ReviewStore, static_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="citefn review API")

    @app.get("/api/queue")
    def get_queue():
        return store.queue()

    @app.get("/api/pairs/{pair_id}")
    def get_pair(pair_id: str):
        try:
            return store.pair_payload(pair_id)
        except UnknownPairError:
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id!r}")

    @app.post("/api/pairs/{pair_id}/decisions")
    def post_decisions(pair_id: str, body: dict):
        try:
            aggregations = [
                AggregationDecision.from_json({**d, "pair_id": pair_id})
                for d in body.get("aggregations", [])
            ]
            verdicts = [
                Verdict.from_json({**v, "pair_id": pair_id}) for v in body.get("verdicts", [])
            ]
        except (KeyError, SargoError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            matrix = store.submit(pair_id, aggregations, verdicts)
        except UnknownPairError:
            raise HTTPException(status_code=404, detail=f"unknown pair {pair_id!r}")
        except (AlreadyCompleteError, ConflictError) as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except (IncompleteAdjudicationError, SargoError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "pair_id": pair_id,
            "matrix": matrix.to_json(),
            "metrics": store._pair_metrics(matrix),
            "pooled": store.pooled_metrics(),
        }

    @app.get("/api/metrics")
    def get_metrics():
        return store.pooled_metrics()

    if static_dir and Path(static_dir).exists():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def serve(store: ReviewStore, host: str = "127.0.0.1", port: int = 8020, static_dir=None):
    import uvicorn

    uvicorn.run(create_app(store, static_dir=static_dir), host=host, port=port)
