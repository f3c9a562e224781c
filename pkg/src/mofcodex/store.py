"""Durable store for annotated paragraphs and their synthesis records.

Layout: one directory holding an append-only journal (one JSON object per
line), a manifest, and an advisory lock file. Single writer, any number
of readers. A torn final journal line (crash mid-append) is ignored on
replay; anything else corrupt is an error.

The annotation interchange format (import/export) is line-delimited JSON,
one paragraph per line::

    {"doi": "10.1021/ja0001", "paragraph_index": 0, "text": "...",
     "entities":  [{"id": 0, "start_offset": 17, "end_offset": 23, "label": "SynthesisAction"}],
     "relations": [{"id": 0, "from_id": 0, "to_id": 1, "type": "has_value"}],
     "record": {...}}          # optional

``doi`` and ``paragraph_index`` are required: records are keyed by them.
"""
from __future__ import annotations

import fcntl
import json
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from . import schema
from .corpus import normalize_doi
from .errors import (
    CodexError,
    FileUnreadable,
    MalformedDoi,
    RelationValidationError,
    StorageError,
    StoreLocked,
    UnknownEntityType,
    UnknownRelationType,
    UnparseableQuantity,
    ValidationFailed,
)
from .extract import Dimension, EntitySpan, parse_quantity, validate_span
from .link import ActionStep, RelationEdge, SynthesisRecord, utc_now
from .schema import EntityType, RelationType

Key = tuple[str, int]

REVIEW_STATUSES = ("pending", "reviewed", "rejected")
SPAN_PROVENANCES = ("rule", "external-model", "human")
EDGE_PROVENANCES = ("rule", "human")

# wire labels for relation types in interchange files
_RELATION_WIRE = {RelationType.HAS_VALUE: "has_value", RelationType.ASSOCIATED_WITH: "associated_with"}


@dataclass(frozen=True)
class AnnotatedParagraph:
    doi: str
    paragraph_index: int
    text: str
    spans: tuple[EntitySpan, ...] = ()
    relations: tuple[RelationEdge, ...] = ()
    review_status: str = "pending"
    annotator: str | None = None
    updated_at: str = ""
    record: SynthesisRecord | None = None

    @property
    def key(self) -> Key:
        return (self.doi, self.paragraph_index)


@dataclass(frozen=True)
class StoreManifest:
    schema_version: str
    record_count: int
    created_at: str


# ----------------------------------------------------------------------
# Canonicalization and validation
# ----------------------------------------------------------------------


def canonicalize(ap: AnnotatedParagraph) -> AnnotatedParagraph:
    """Sort spans by offset, renumber ids s0../e0.., remap references."""
    ordered = sorted(ap.spans, key=lambda s: (s.start, s.end, s.etype.value))
    id_map = {s.span_id: f"s{i}" for i, s in enumerate(ordered)}
    spans = tuple(replace(s, span_id=id_map[s.span_id]) for s in ordered)
    index_of = {s.span_id: i for i, s in enumerate(spans)}

    def edge_sort_key(e: RelationEdge):
        # e.head/e.tail are already remapped here
        return (index_of.get(e.head, 1 << 30), index_of.get(e.tail, 1 << 30), e.rtype.value)

    remapped = [
        replace(e, head=id_map.get(e.head, e.head), tail=id_map.get(e.tail, e.tail))
        for e in ap.relations
    ]
    remapped.sort(key=edge_sort_key)
    relations = tuple(replace(e, edge_id=f"e{i}") for i, e in enumerate(remapped))

    record = ap.record
    if record is not None:
        steps = tuple(
            ActionStep(
                action=id_map.get(st.action, st.action),
                descriptors=tuple(id_map.get(d, d) for d in st.descriptors),
                materials=tuple(id_map.get(m, m) for m in st.materials),
                vessel=(id_map.get(st.vessel, st.vessel) if st.vessel else None),
            )
            for st in record.steps
        )
        record = replace(
            record,
            steps=steps,
            result=(id_map.get(record.result, record.result) if record.result else None),
        )
    return replace(ap, spans=spans, relations=relations, record=record)


def validate_annotated(ap: AnnotatedParagraph) -> list[str]:
    """All problems with a record; [] means storable."""
    problems: list[str] = []
    try:
        if normalize_doi(ap.doi) != ap.doi:
            problems.append(f"doi not normalized: {ap.doi!r}")
    except MalformedDoi:
        problems.append(f"malformed doi: {ap.doi!r}")
    if ap.paragraph_index < 0:
        problems.append(f"negative paragraph index {ap.paragraph_index}")
    if not ap.text.strip():
        problems.append("empty paragraph text")
    if ap.review_status not in REVIEW_STATUSES:
        problems.append(f"bad review status {ap.review_status!r}")

    seen_ids: set[str] = set()
    prev_end = -1
    for span in ap.spans:
        problems.extend(validate_span(span, ap.text))
        if span.span_id in seen_ids:
            problems.append(f"duplicate span id {span.span_id!r}")
        seen_ids.add(span.span_id)
        if span.provenance not in SPAN_PROVENANCES:
            problems.append(f"span {span.span_id}: bad provenance {span.provenance!r}")
        if span.start < prev_end:
            problems.append(f"span {span.span_id}: overlaps previous span")
        prev_end = max(prev_end, span.end)

    span_table = {s.span_id: s for s in ap.spans}
    edge_ids: set[str] = set()
    for edge in ap.relations:
        if edge.edge_id in edge_ids:
            problems.append(f"duplicate edge id {edge.edge_id!r}")
        edge_ids.add(edge.edge_id)
        if edge.provenance not in EDGE_PROVENANCES:
            problems.append(f"edge {edge.edge_id}: bad provenance {edge.provenance!r}")
        try:
            schema.validate_relation(edge, span_table)
        except RelationValidationError as exc:
            problems.append(str(exc))

    if ap.record is not None:
        rec = ap.record
        if rec.doi != ap.doi or rec.paragraph_index != ap.paragraph_index:
            problems.append("record key differs from paragraph key")
        referenced = [st.action for st in rec.steps]
        for st in rec.steps:
            referenced.extend(st.descriptors)
            referenced.extend(st.materials)
            if st.vessel:
                referenced.append(st.vessel)
        if rec.result:
            referenced.append(rec.result)
        for sid in referenced:
            if sid not in span_table:
                problems.append(f"record references unknown span {sid!r}")
    return problems


# ----------------------------------------------------------------------
# Serialization
# ----------------------------------------------------------------------


def span_to_dict(s: EntitySpan) -> dict:
    return {
        "id": s.span_id,
        "start": s.start,
        "end": s.end,
        "surface": s.surface,
        "label": s.etype.value,
        "confidence": s.confidence,
        "provenance": s.provenance,
    }


def span_from_dict(d: Mapping) -> EntitySpan:
    return EntitySpan(
        span_id=str(d["id"]),
        start=int(d["start"]),
        end=int(d["end"]),
        surface=d["surface"],
        etype=schema.resolve_entity_type(d["label"]),
        confidence=float(d.get("confidence", 1.0)),
        provenance=d.get("provenance", "rule"),
    )


def edge_to_dict(e: RelationEdge) -> dict:
    return {
        "id": e.edge_id,
        "head": e.head,
        "tail": e.tail,
        "type": _RELATION_WIRE[e.rtype],
        "provenance": e.provenance,
    }


def edge_from_dict(d: Mapping) -> RelationEdge:
    return RelationEdge(
        edge_id=str(d["id"]),
        rtype=schema.resolve_relation_type(d["type"]),
        head=str(d["head"]),
        tail=str(d["tail"]),
        provenance=d.get("provenance", "rule"),
    )


def record_to_dict(r: SynthesisRecord) -> dict:
    return {
        "doi": r.doi,
        "paragraph_index": r.paragraph_index,
        "steps": [
            {
                "action": st.action,
                "descriptors": list(st.descriptors),
                "materials": list(st.materials),
                "vessel": st.vessel,
            }
            for st in r.steps
        ],
        "result": r.result,
        "created_at": r.created_at,
        "schema_version": r.schema_version,
    }


def record_from_dict(d: Mapping) -> SynthesisRecord:
    return SynthesisRecord(
        doi=d["doi"],
        paragraph_index=int(d["paragraph_index"]),
        steps=tuple(
            ActionStep(
                action=st["action"],
                descriptors=tuple(st.get("descriptors", ())),
                materials=tuple(st.get("materials", ())),
                vessel=st.get("vessel"),
            )
            for st in d.get("steps", ())
        ),
        result=d.get("result"),
        created_at=d.get("created_at", ""),
        schema_version=d.get("schema_version", schema.SCHEMA_VERSION),
    )


def annotated_to_dict(ap: AnnotatedParagraph) -> dict:
    out = {
        "doi": ap.doi,
        "paragraph_index": ap.paragraph_index,
        "text": ap.text,
        "spans": [span_to_dict(s) for s in ap.spans],
        "relations": [edge_to_dict(e) for e in ap.relations],
        "review_status": ap.review_status,
        "annotator": ap.annotator,
        "updated_at": ap.updated_at,
    }
    if ap.record is not None:
        out["record"] = record_to_dict(ap.record)
    return out


def annotated_from_dict(d: Mapping) -> AnnotatedParagraph:
    return AnnotatedParagraph(
        doi=d["doi"],
        paragraph_index=int(d["paragraph_index"]),
        text=d["text"],
        spans=tuple(span_from_dict(s) for s in d.get("spans", ())),
        relations=tuple(edge_from_dict(e) for e in d.get("relations", ())),
        review_status=d.get("review_status", "pending"),
        annotator=d.get("annotator"),
        updated_at=d.get("updated_at", ""),
        record=(record_from_dict(d["record"]) if d.get("record") else None),
    )


def canonical_content(ap: AnnotatedParagraph) -> dict:
    """Timestamp-free canonical payload, for content-equality comparison."""
    d = annotated_to_dict(canonicalize(ap))
    d.pop("updated_at", None)
    if "record" in d:
        d["record"].pop("created_at", None)
    return d


# ----------------------------------------------------------------------
# The store
# ----------------------------------------------------------------------

_JOURNAL = "journal.jsonl"
_MANIFEST = "manifest.json"
_LOCKFILE = ".lock"


class Store:
    """Single-directory annotated-paragraph store.

    Open writable (default) to put records; the advisory file lock admits
    one writer at a time. Use as a context manager or call close().
    """

    def __init__(self, path: str | Path, writable: bool = True, compact_factor: int = 2):
        self.path = Path(path)
        self.writable = writable
        self.compact_factor = max(1, compact_factor)
        self.path.mkdir(parents=True, exist_ok=True)
        self._records: dict[Key, AnnotatedParagraph] = {}
        self._journal_lines = 0
        self._lock_fd: int | None = None
        self._append_fh = None
        if writable:
            self._acquire_lock()
        self._replay()
        if writable:
            self._append_fh = open(self.path / _JOURNAL, "a", encoding="utf-8")
            self._write_manifest()

    # -- lifecycle ----------------------------------------------------

    def _acquire_lock(self) -> None:
        fd = os.open(self.path / _LOCKFILE, os.O_CREAT | os.O_RDWR, 0o644)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            os.close(fd)
            raise StoreLocked(f"another writer holds {self.path}") from None
        self._lock_fd = fd

    def close(self) -> None:
        if self._append_fh is not None:
            self._append_fh.close()
            self._append_fh = None
        if self._lock_fd is not None:
            fcntl.flock(self._lock_fd, fcntl.LOCK_UN)
            os.close(self._lock_fd)
            self._lock_fd = None

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- journal ------------------------------------------------------

    def _replay(self) -> None:
        journal = self.path / _JOURNAL
        if not journal.exists():
            return
        try:
            raw = journal.read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"cannot read journal: {exc}") from exc
        lines = raw.split("\n")
        # a trailing empty element after the final newline is normal
        if lines and lines[-1] == "":
            lines.pop()
        for i, line in enumerate(lines):
            try:
                entry = json.loads(line)
                ap = annotated_from_dict(entry["value"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError,
                    UnknownEntityType, UnknownRelationType) as exc:
                if i == len(lines) - 1:
                    break  # torn final append from an interrupted put
                raise StorageError(f"corrupt journal line {i + 1}: {exc}") from exc
            self._records[ap.key] = ap
            self._journal_lines += 1

    def _append(self, ap: AnnotatedParagraph) -> None:
        line = json.dumps({"op": "put", "value": annotated_to_dict(ap)},
                          sort_keys=True, separators=(",", ":"))
        self._append_fh.write(line + "\n")
        self._append_fh.flush()
        os.fsync(self._append_fh.fileno())
        self._journal_lines += 1

    def _write_manifest(self) -> None:
        manifest_path = self.path / _MANIFEST
        created_at = None
        if manifest_path.exists():
            try:
                created_at = json.loads(manifest_path.read_text(encoding="utf-8")).get("created_at")
            except (OSError, json.JSONDecodeError):
                created_at = None
        data = {
            "schema_version": schema.SCHEMA_VERSION,
            "record_count": len(self._records),
            "created_at": created_at or utc_now(),
        }
        tmp = manifest_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, manifest_path)

    def _maybe_compact(self) -> None:
        if self._journal_lines <= max(16, self.compact_factor * len(self._records)):
            return
        self.compact()

    def compact(self) -> None:
        """Rewrite the journal to one line per live record."""
        self._require_writable()
        tmp = self.path / (_JOURNAL + ".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for key in sorted(self._records):
                ap = self._records[key]
                fh.write(json.dumps({"op": "put", "value": annotated_to_dict(ap)},
                                    sort_keys=True, separators=(",", ":")) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._append_fh.close()
        os.replace(tmp, self.path / _JOURNAL)
        self._append_fh = open(self.path / _JOURNAL, "a", encoding="utf-8")
        self._journal_lines = len(self._records)

    def _require_writable(self) -> None:
        if not self.writable or self._append_fh is None:
            raise StorageError("store opened read-only")

    # -- operations ---------------------------------------------------

    def put(self, ap: AnnotatedParagraph) -> None:
        """Validate and durably upsert one record."""
        self._require_writable()
        problems = validate_annotated(ap)
        if problems:
            raise ValidationFailed("; ".join(problems))
        old = self._records.get(ap.key)
        if old is not None and old.review_status != ap.review_status:
            if old.review_status != "pending":
                raise ValidationFailed(
                    f"illegal review-status transition {old.review_status} -> {ap.review_status}"
                )
        self._append(ap)
        self._records[ap.key] = ap
        self._write_manifest()
        self._maybe_compact()

    def get(self, key: Key) -> AnnotatedParagraph | None:
        return self._records.get(key)

    def keys(self) -> list[Key]:
        return sorted(self._records)

    def items(self) -> Iterator[tuple[Key, AnnotatedParagraph]]:
        for key in self.keys():
            yield key, self._records[key]

    def manifest(self) -> StoreManifest:
        data = json.loads((self.path / _MANIFEST).read_text(encoding="utf-8"))
        return StoreManifest(
            schema_version=data["schema_version"],
            record_count=data["record_count"],
            created_at=data["created_at"],
        )

    def query(
        self,
        etype: EntityType | str | None = None,
        surface_substring: str | None = None,
        doi: str | None = None,
        dimension_range: tuple[str | Dimension, float, float] | None = None,
        review_status: str | None = None,
    ) -> list[Key]:
        """Keys of records satisfying the conjunction of the given filters."""
        if all(f is None for f in (etype, surface_substring, doi, dimension_range, review_status)):
            raise ValueError("query needs at least one filter")
        if isinstance(etype, str):
            etype = schema.resolve_entity_type(etype)
        dim: Dimension | None = None
        lo = hi = 0.0
        if dimension_range is not None:
            raw_dim, lo, hi = dimension_range
            dim = raw_dim if isinstance(raw_dim, Dimension) else Dimension(raw_dim)
        out = []
        for key, ap in self.items():
            if doi is not None and ap.doi != doi:
                continue
            if review_status is not None and ap.review_status != review_status:
                continue
            if etype is not None and not any(s.etype is etype for s in ap.spans):
                continue
            if surface_substring is not None and not any(
                surface_substring in s.surface for s in ap.spans
            ):
                continue
            if dim is not None and not _matches_dimension_range(ap, dim, lo, hi):
                continue
            out.append(key)
        return out

    # -- annotation interchange ----------------------------------------

    def import_annotations(
        self, path: str | Path, provenance: str = "human", status: str = "reviewed"
    ) -> tuple[int, list[str]]:
        """Import a line-delimited annotation file.

        Returns (records imported, report messages for skipped lines).
        """
        self._require_writable()
        p = Path(path)
        try:
            lines = p.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise FileUnreadable(f"cannot read annotations {p}: {exc}") from exc
        count = 0
        reports: list[str] = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                ap = annotated_from_interchange(json.loads(line), provenance=provenance, status=status)
                self.put(ap)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, CodexError) as exc:
                reports.append(f"{p.name}:{lineno}: skipped ({exc})")
                continue
            count += 1
        return count, reports

    def export_annotations(self, keys: Sequence[Key], path: str | Path) -> None:
        """Write the interchange file for the given keys, ordered by key."""
        missing = [k for k in keys if k not in self._records]
        if missing:
            raise ValidationFailed(f"cannot export missing keys: {missing}")
        p = Path(path)
        with open(p, "w", encoding="utf-8") as fh:
            for key in sorted(keys):
                fh.write(json.dumps(annotated_to_interchange(self._records[key]),
                                    sort_keys=True, separators=(",", ":")) + "\n")


def _matches_dimension_range(ap: AnnotatedParagraph, dim: Dimension, lo: float, hi: float) -> bool:
    for span in ap.spans:
        if span.etype is not EntityType.DESCRIPTOR:
            continue
        try:
            q = parse_quantity(span.surface)
        except UnparseableQuantity:
            continue
        if q.dimension is dim and q.value is not None and lo <= q.value <= hi:
            return True
    return False


# ----------------------------------------------------------------------
# Interchange conversion
# ----------------------------------------------------------------------


def annotated_to_interchange(ap: AnnotatedParagraph) -> dict:
    """One interchange line: integer ids, Doccano-style field names."""
    ap = canonicalize(ap)
    sid_to_int = {s.span_id: i for i, s in enumerate(ap.spans)}
    out = {
        "doi": ap.doi,
        "paragraph_index": ap.paragraph_index,
        "text": ap.text,
        "entities": [
            {
                "id": sid_to_int[s.span_id],
                "start_offset": s.start,
                "end_offset": s.end,
                "label": s.etype.value,
            }
            for s in ap.spans
        ],
        "relations": [
            {
                "id": i,
                "from_id": sid_to_int[e.head],
                "to_id": sid_to_int[e.tail],
                "type": _RELATION_WIRE[e.rtype],
            }
            for i, e in enumerate(ap.relations)
        ],
    }
    if ap.record is not None:
        rec = record_to_dict(ap.record)
        rec.pop("doi")
        rec.pop("paragraph_index")
        rec["steps"] = [
            {
                "action": sid_to_int[st["action"]],
                "descriptors": [sid_to_int[d] for d in st["descriptors"]],
                "materials": [sid_to_int[m] for m in st["materials"]],
                "vessel": (sid_to_int[st["vessel"]] if st["vessel"] is not None else None),
            }
            for st in rec["steps"]
        ]
        rec["result"] = sid_to_int[ap.record.result] if ap.record.result else None
        out["record"] = rec
    return out


def annotated_from_interchange(
    d: Mapping, provenance: str = "human", status: str = "reviewed"
) -> AnnotatedParagraph:
    """Parse one interchange line into a canonical AnnotatedParagraph."""
    for required in ("doi", "paragraph_index", "text"):
        if required not in d:
            raise ValidationFailed(f"missing required field {required!r}")
    text = d["text"]
    entities = d.get("entities", [])
    spans = []
    int_to_sid: dict[int, str] = {}
    ordered = sorted(entities, key=lambda e: (int(e["start_offset"]), int(e["end_offset"])))
    for i, e in enumerate(ordered):
        sid = f"s{i}"
        int_to_sid[int(e["id"])] = sid
        start, end = int(e["start_offset"]), int(e["end_offset"])
        spans.append(
            EntitySpan(
                span_id=sid,
                start=start,
                end=end,
                surface=text[start:end],
                etype=schema.resolve_entity_type(e["label"]),
                provenance=provenance,
            )
        )
    relations = []
    for i, r in enumerate(d.get("relations", [])):
        relations.append(
            RelationEdge(
                edge_id=f"e{i}",
                rtype=schema.resolve_relation_type(r["type"]),
                head=int_to_sid[int(r["from_id"])],
                tail=int_to_sid[int(r["to_id"])],
                provenance=provenance if provenance in EDGE_PROVENANCES else "rule",
            )
        )
    record = None
    if d.get("record"):
        raw = d["record"]
        record = SynthesisRecord(
            doi=d["doi"],
            paragraph_index=int(d["paragraph_index"]),
            steps=tuple(
                ActionStep(
                    action=int_to_sid[int(st["action"])],
                    descriptors=tuple(int_to_sid[int(x)] for x in st.get("descriptors", ())),
                    materials=tuple(int_to_sid[int(x)] for x in st.get("materials", ())),
                    vessel=(int_to_sid[int(st["vessel"])] if st.get("vessel") is not None else None),
                )
                for st in raw.get("steps", ())
            ),
            result=(int_to_sid[int(raw["result"])] if raw.get("result") is not None else None),
            created_at=raw.get("created_at", utc_now()),
            schema_version=raw.get("schema_version", schema.SCHEMA_VERSION),
        )
    return canonicalize(
        AnnotatedParagraph(
            doi=d["doi"],
            paragraph_index=int(d["paragraph_index"]),
            text=text,
            spans=tuple(spans),
            relations=tuple(relations),
            review_status=status,
            annotator=d.get("annotator"),
            updated_at=utc_now(),
            record=record,
        )
    )
