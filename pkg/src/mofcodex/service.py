"""HTTP facade over the store for the expert review loop.

The service is the sole writer to its store while running. No
authentication: bind to loopback unless you know what you are doing.
Optimistic concurrency on review posts via the ``X-If-Updated-At``
header: send the ``updated_at`` you loaded; a mismatch yields 409.
"""
from __future__ import annotations

import random
from dataclasses import replace
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import schema
from .errors import EmptyRecord, UnknownEntityType, UnknownRelationType, ValidationFailed
from .extract import EntitySpan
from .link import RelationEdge, build_record, utc_now
from .corpus import Paragraph
from .schema import EntityType
from .store import (
    REVIEW_STATUSES,
    AnnotatedParagraph,
    Store,
    annotated_to_dict,
    canonicalize,
    validate_annotated,
)


class SpanIn(BaseModel):
    id: str | int | None = None
    start: int
    end: int
    label: str


class RelationIn(BaseModel):
    id: str | int | None = None
    head: str | int
    tail: str | int
    type: str


class ReviewSubmission(BaseModel):
    spans: list[SpanIn] = Field(default_factory=list)
    relations: list[RelationIn] = Field(default_factory=list)
    decision: str = "reviewed"
    annotator: str = ""


def _summary(ap: AnnotatedParagraph) -> dict:
    return {
        "doi": ap.doi,
        "paragraph_index": ap.paragraph_index,
        "review_status": ap.review_status,
        "updated_at": ap.updated_at,
        "n_spans": len(ap.spans),
        "n_relations": len(ap.relations),
        "preview": ap.text[:100],
    }


def _bad_request(message: str) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": message})


def create_app(store_path: str | Path, ui_dir: str | Path | None = None) -> FastAPI:
    """Build the review service over a store directory."""
    app = FastAPI(title="mofcodex review service")
    store = Store(store_path, writable=True)
    app.state.store = store
    schema_bytes = schema.export_text().encode("utf-8")

    @app.get("/schema")
    def get_schema() -> Response:
        return Response(content=schema_bytes, media_type="application/json")

    @app.get("/stats")
    def get_stats() -> dict:
        by_status = {s: 0 for s in REVIEW_STATUSES}
        by_type = {t.value: 0 for t in EntityType}
        for _, ap in store.items():
            by_status[ap.review_status] += 1
            for span in ap.spans:
                by_type[span.etype.value] += 1
        return {"by_status": by_status, "by_entity_type": by_type, "total": len(store.keys())}

    @app.get("/paragraphs")
    def list_paragraphs(request: Request):
        params = request.query_params
        status = params.get("status")
        if status is not None and status not in REVIEW_STATUSES:
            return _bad_request(f"status must be one of {REVIEW_STATUSES}")
        limit_raw = params.get("limit")
        limit = None
        if limit_raw is not None:
            try:
                limit = int(limit_raw)
            except ValueError:
                return _bad_request("limit must be an integer")
            if limit < 0:
                return _bad_request("limit must be >= 0")
        shuffle_raw = params.get("shuffle")
        seed = None
        if shuffle_raw is not None:
            try:
                seed = int(shuffle_raw)
            except ValueError:
                return _bad_request("shuffle must be an integer seed")
        records = [ap for _, ap in store.items()]
        if status is not None:
            records = [ap for ap in records if ap.review_status == status]
        if seed is not None:
            random.Random(seed).shuffle(records)
        total = len(records)
        if limit is not None:
            records = records[:limit]
        return {"paragraphs": [_summary(ap) for ap in records], "total": total}

    @app.post("/paragraphs/{doi:path}/{index}/review")
    def review_paragraph(doi: str, index: int, submission: ReviewSubmission, request: Request):
        key = (doi, index)
        existing = store.get(key)
        if existing is None:
            return JSONResponse(status_code=404, content={"detail": f"no paragraph {doi}#{index}"})
        precondition = request.headers.get("X-If-Updated-At")
        if precondition is not None and precondition != existing.updated_at:
            return JSONResponse(
                status_code=409,
                content={"detail": "record changed since load", "updated_at": existing.updated_at},
            )
        if submission.decision not in ("reviewed", "rejected"):
            return JSONResponse(
                status_code=422, content={"detail": "decision must be 'reviewed' or 'rejected'"}
            )
        errors: list[str] = []
        text = existing.text
        spans: list[EntitySpan] = []
        for i, s in enumerate(submission.spans):
            sid = str(s.id) if s.id is not None else f"s{i}"
            if not (0 <= s.start < s.end <= len(text)):
                errors.append(f"span {sid}: offsets [{s.start},{s.end}) out of bounds")
                continue
            try:
                etype = schema.resolve_entity_type(s.label)
            except UnknownEntityType as exc:
                errors.append(str(exc))
                continue
            spans.append(
                EntitySpan(
                    span_id=sid,
                    start=s.start,
                    end=s.end,
                    surface=text[s.start : s.end],
                    etype=etype,
                    provenance="human",
                )
            )
        edges: list[RelationEdge] = []
        for i, r in enumerate(submission.relations):
            try:
                rtype = schema.resolve_relation_type(r.type)
            except UnknownRelationType as exc:
                errors.append(str(exc))
                continue
            edges.append(
                RelationEdge(
                    edge_id=str(r.id) if r.id is not None else f"e{i}",
                    rtype=rtype,
                    head=str(r.head),
                    tail=str(r.tail),
                    provenance="human",
                )
            )
        if errors:
            return JSONResponse(status_code=422, content={"detail": "validation failed", "errors": errors})

        ap = canonicalize(
            AnnotatedParagraph(
                doi=existing.doi,
                paragraph_index=existing.paragraph_index,
                text=text,
                spans=tuple(spans),
                relations=tuple(edges),
                review_status=submission.decision,
                annotator=submission.annotator or None,
                updated_at=utc_now(),
            )
        )
        problems = validate_annotated(ap)
        if problems:
            return JSONResponse(status_code=422, content={"detail": "validation failed", "errors": problems})
        # keep the structured record in sync with the edited annotation
        try:
            record = build_record(
                Paragraph(doi=ap.doi, index=ap.paragraph_index, text=ap.text),
                list(ap.spans),
                list(ap.relations),
            )
        except EmptyRecord:
            record = None
        ap = replace(ap, record=record)
        try:
            store.put(ap)
        except ValidationFailed as exc:
            return JSONResponse(status_code=422, content={"detail": str(exc)})
        return {"ok": True, "updated_at": ap.updated_at}

    @app.get("/paragraphs/{doi:path}/{index}")
    def get_paragraph(doi: str, index: int):
        ap = store.get((doi, index))
        if ap is None:
            return JSONResponse(status_code=404, content={"detail": f"no paragraph {doi}#{index}"})
        return annotated_to_dict(ap)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
