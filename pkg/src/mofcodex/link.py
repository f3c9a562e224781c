"""Relation assignment and action-centered record assembly.

Attachment rule: nearest-in-sentence by character distance between span
midpoints, preferring a synthesis action when one exists in the sentence.
Spans with no viable partner yield no edge and are counted in a
diagnostics summary; the review service exists to correct these guesses.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone

from .corpus import Paragraph
from .errors import EmptyRecord
from .extract import EntitySpan
from .schema import SCHEMA_VERSION, EntityType, RelationType, validate_relation

# sentence split: terminal punctuation, whitespace, then an opener
_SPLIT_RX = re.compile(r"[.!?]+[)\]\"']*\s+(?=[A-Z0-9(\[\"'])")

# tokens whose trailing dot does not end a sentence
_ABBREVIATIONS = frozenset(
    "e.g i.e cf ca approx etc fig figs eq eqs ref refs sec al vs no".split()
)

_MATERIAL_TYPES = frozenset(
    {
        EntityType.PRECURSOR,
        EntityType.METAL_PRECURSOR,
        EntityType.ORGANIC_PRECURSOR,
        EntityType.SOLVENT_PRECURSOR,
        EntityType.ACID,
    }
)


def utc_now() -> str:
    """RFC 3339 UTC timestamp; lexical order equals chronological order."""
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


@dataclass(frozen=True)
class RelationEdge:
    edge_id: str
    rtype: RelationType
    head: str  # span id
    tail: str  # span id
    provenance: str = "rule"


@dataclass(frozen=True)
class ActionStep:
    action: str  # span id of the SynthesisAction
    descriptors: tuple[str, ...] = ()
    materials: tuple[str, ...] = ()
    vessel: str | None = None


@dataclass(frozen=True)
class SynthesisRecord:
    doi: str
    paragraph_index: int
    steps: tuple[ActionStep, ...]
    result: str | None  # span id of the resulting MOF composition
    created_at: str
    schema_version: str = SCHEMA_VERSION


@dataclass
class LinkDiagnostics:
    """Spans that found no attachment partner, counted per entity type."""

    unattached: Counter = field(default_factory=Counter)

    def note(self, etype: EntityType) -> None:
        self.unattached[etype.value] += 1

    def summary_lines(self) -> list[str]:
        return [f"unattached {name}: {count}" for name, count in sorted(self.unattached.items())]


def sentence_boundaries(text: str) -> list[tuple[int, int]]:
    """(start, end) sentence windows tiling the whole text.

    Splits after sentence-final punctuation followed by whitespace and an
    opening capital/digit; a token before the dot that is a known
    abbreviation or a single letter (initials, element symbols) suppresses
    the split.
    """
    if not text:
        return []
    cuts = []
    for m in _SPLIT_RX.finditer(text):
        before = text[: m.start() + 1]  # include the punctuation char
        token = re.search(r"([A-Za-z][\w.]*?)\.?$", before.rstrip(".!?)]\"'"))
        if token:
            word = token.group(1).rstrip(".").lower()
            if word in _ABBREVIATIONS or len(word) == 1:
                continue
        cuts.append(m.end())
    bounds = []
    prev = 0
    for cut in cuts:
        bounds.append((prev, cut))
        prev = cut
    bounds.append((prev, len(text)))
    return bounds


def _sentence_index(bounds: list[tuple[int, int]], offset: int) -> int:
    for i, (start, end) in enumerate(bounds):
        if start <= offset < end:
            return i
    return len(bounds) - 1


def _midpoint(span: EntitySpan) -> float:
    return (span.start + span.end) / 2.0


def _nearest(target: EntitySpan, pool: list[EntitySpan]) -> EntitySpan:
    return min(pool, key=lambda s: (abs(_midpoint(s) - _midpoint(target)), s.start))


def link_relations(
    p: Paragraph, spans: list[EntitySpan]
) -> tuple[list[RelationEdge], LinkDiagnostics]:
    """Emit HasValue and AssociatedWith edges between extracted spans.

    Every returned edge passes schema validation; each descriptor appears
    in at most one HasValue edge.
    """
    diagnostics = LinkDiagnostics()
    bounds = sentence_boundaries(p.text)
    ordered = sorted(spans, key=lambda s: s.start)
    sent_of = {s.span_id: _sentence_index(bounds, s.start) for s in ordered}
    span_table = {s.span_id: s for s in ordered}
    actions = [s for s in ordered if s.etype is EntityType.SYNTHESIS_ACTION]
    edges: list[RelationEdge] = []

    def emit(rtype: RelationType, head: EntitySpan, tail: EntitySpan) -> None:
        edge = RelationEdge(
            edge_id=f"e{len(edges)}", rtype=rtype, head=head.span_id, tail=tail.span_id
        )
        validate_relation(edge, span_table)
        edges.append(edge)

    for span in ordered:
        if span.etype is not EntityType.DESCRIPTOR:
            continue
        in_sentence = [
            s
            for s in ordered
            if s.span_id != span.span_id
            and s.etype is not EntityType.DESCRIPTOR
            and sent_of[s.span_id] == sent_of[span.span_id]
        ]
        if not in_sentence:
            diagnostics.note(span.etype)
            continue
        action_pool = [s for s in in_sentence if s.etype is EntityType.SYNTHESIS_ACTION]
        head = _nearest(span, action_pool or in_sentence)
        emit(RelationType.HAS_VALUE, head, span)

    for span in ordered:
        if span.etype not in _MATERIAL_TYPES and span.etype is not EntityType.VESSEL:
            continue
        in_sentence = [
            a for a in actions if a.span_id != span.span_id and sent_of[a.span_id] == sent_of[span.span_id]
        ]
        if in_sentence:
            target = _nearest(span, in_sentence)
        else:
            preceding = [a for a in actions if a.start < span.start]
            if not preceding:
                diagnostics.note(span.etype)
                continue
            target = max(preceding, key=lambda a: a.start)
        emit(RelationType.ASSOCIATED_WITH, span, target)

    return edges, diagnostics


def build_record(
    p: Paragraph,
    spans: list[EntitySpan],
    edges: list[RelationEdge],
    created_at: str | None = None,
) -> SynthesisRecord:
    """Assemble the action-centered record: one step per action span in
    text order, descriptors via HasValue, materials/vessel via
    AssociatedWith, result = last MOF-composition span."""
    ordered = sorted(spans, key=lambda s: s.start)
    span_table = {s.span_id: s for s in ordered}
    actions = [s for s in ordered if s.etype is EntityType.SYNTHESIS_ACTION]
    if not actions:
        raise EmptyRecord(f"no synthesis-action spans in {p.doi}#{p.index}")

    # step index by action span id
    step_of: dict[str, int] = {a.span_id: i for i, a in enumerate(actions)}
    descriptors: list[list[str]] = [[] for _ in actions]
    materials: list[list[str]] = [[] for _ in actions]
    vessels: list[list[str]] = [[] for _ in actions]

    # which step a non-action span belongs to, per AssociatedWith edges
    attached_step: dict[str, int] = {}
    for edge in edges:
        if edge.rtype is not RelationType.ASSOCIATED_WITH:
            continue
        head = span_table.get(edge.head)
        tail = span_table.get(edge.tail)
        if head is None or tail is None:
            continue
        if head.etype is EntityType.SYNTHESIS_ACTION and tail.etype is not EntityType.SYNTHESIS_ACTION:
            action, partner = head, tail
        elif tail.etype is EntityType.SYNTHESIS_ACTION and head.etype is not EntityType.SYNTHESIS_ACTION:
            action, partner = tail, head
        else:
            continue
        idx = step_of[action.span_id]
        attached_step[partner.span_id] = idx
        if partner.etype is EntityType.VESSEL:
            vessels[idx].append(partner.span_id)
        elif partner.etype in _MATERIAL_TYPES:
            materials[idx].append(partner.span_id)

    for edge in edges:
        if edge.rtype is not RelationType.HAS_VALUE:
            continue
        head = span_table.get(edge.head)
        tail = span_table.get(edge.tail)
        if head is None or tail is None:
            continue
        if head.etype is EntityType.SYNTHESIS_ACTION:
            idx = step_of[head.span_id]
        elif head.span_id in attached_step:
            idx = attached_step[head.span_id]
        else:
            continue
        descriptors[idx].append(tail.span_id)

    def by_start(ids: list[str]) -> tuple[str, ...]:
        return tuple(sorted(set(ids), key=lambda sid: span_table[sid].start))

    steps = tuple(
        ActionStep(
            action=a.span_id,
            descriptors=by_start(descriptors[i]),
            materials=by_start(materials[i]),
            vessel=(by_start(vessels[i])[0] if vessels[i] else None),
        )
        for i, a in enumerate(actions)
    )
    mofs = [s for s in ordered if s.etype is EntityType.MOF_COMPOSITION]
    return SynthesisRecord(
        doi=p.doi,
        paragraph_index=p.index,
        steps=steps,
        result=(mofs[-1].span_id if mofs else None),
        created_at=created_at if created_at is not None else utc_now(),
    )
