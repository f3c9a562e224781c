"""Closed entity/relation taxonomy for MOF synthesis records.

Nine entity types (three nested under Precursor) and two relation types.
The taxonomy is immutable: everything here is module-level constant data
plus pure functions, safe for unrestricted concurrent reads.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .errors import (
    DanglingSpanReference,
    SelfLoop,
    TypeConstraintViolation,
    UnknownEntityType,
    UnknownRelationType,
)

SCHEMA_VERSION = "1.0.0"


class EntityType(Enum):
    PRECURSOR = "Precursor"
    METAL_PRECURSOR = "MetalPrecursor"
    ORGANIC_PRECURSOR = "OrganicPrecursor"
    SOLVENT_PRECURSOR = "SolventPrecursor"
    SYNTHESIS_ACTION = "SynthesisAction"
    ACID = "Acid"
    VESSEL = "Vessel"
    DESCRIPTOR = "Descriptor"
    MOF_COMPOSITION = "MofComposition"

    def __str__(self) -> str:
        return self.value


class RelationType(Enum):
    HAS_VALUE = "HasValue"
    ASSOCIATED_WITH = "AssociatedWith"

    def __str__(self) -> str:
        return self.value


# Canonical serialization order: parent first, then its subtypes, then the
# remaining main types in report order.
_TAXONOMY_ORDER = (
    EntityType.PRECURSOR,
    EntityType.METAL_PRECURSOR,
    EntityType.ORGANIC_PRECURSOR,
    EntityType.SOLVENT_PRECURSOR,
    EntityType.SYNTHESIS_ACTION,
    EntityType.ACID,
    EntityType.VESSEL,
    EntityType.DESCRIPTOR,
    EntityType.MOF_COMPOSITION,
)

_PARENT: Mapping[EntityType, EntityType] = {
    EntityType.METAL_PRECURSOR: EntityType.PRECURSOR,
    EntityType.ORGANIC_PRECURSOR: EntityType.PRECURSOR,
    EntityType.SOLVENT_PRECURSOR: EntityType.PRECURSOR,
}

# Alias table absorbing label drift between annotation rounds and tools.
# Keys are normalized (lowercase, separators collapsed to single spaces).
_ENTITY_ALIASES: Mapping[str, EntityType] = {
    "precursors": EntityType.PRECURSOR,
    "chemical composition": EntityType.PRECURSOR,
    "metal source": EntityType.METAL_PRECURSOR,
    "organic linker": EntityType.ORGANIC_PRECURSOR,
    "linker": EntityType.ORGANIC_PRECURSOR,
    "solvent": EntityType.SOLVENT_PRECURSOR,
    "action": EntityType.SYNTHESIS_ACTION,
    "numeric descriptor": EntityType.DESCRIPTOR,
    "descriptor value": EntityType.DESCRIPTOR,
    "mof composition": EntityType.MOF_COMPOSITION,
    "mof chemical composition": EntityType.MOF_COMPOSITION,
    "resulted mof chemical composition": EntityType.MOF_COMPOSITION,
    "mof structure": EntityType.MOF_COMPOSITION,
}

_RELATION_ALIASES: Mapping[str, RelationType] = {
    "has value": RelationType.HAS_VALUE,
    "associated with": RelationType.ASSOCIATED_WITH,
}


def _normalize_label(label: str) -> str:
    return re.sub(r"[\s_\-]+", " ", label.strip().lower())


def _build_entity_lookup() -> dict[str, EntityType]:
    table: dict[str, EntityType] = {}
    for et in _TAXONOMY_ORDER:
        table[et.value.lower()] = et
        # spaced form of the CamelCase name ("metal precursor")
        spaced = re.sub(r"(?<!^)(?=[A-Z])", " ", et.value).lower()
        table[spaced] = et
    for alias, et in _ENTITY_ALIASES.items():
        table[alias] = et
    return table


def _build_relation_lookup() -> dict[str, RelationType]:
    table: dict[str, RelationType] = {}
    for rt in RelationType:
        table[rt.value.lower()] = rt
        spaced = re.sub(r"(?<!^)(?=[A-Z])", " ", rt.value).lower()
        table[spaced] = rt
    for alias, rt in _RELATION_ALIASES.items():
        table[alias] = rt
    return table


_ENTITY_LOOKUP = _build_entity_lookup()
_RELATION_LOOKUP = _build_relation_lookup()


@dataclass(frozen=True)
class SchemaConstraint:
    """Which head/tail entity types a relation type may connect."""

    relation: RelationType
    allowed_head_types: frozenset[EntityType]
    allowed_tail_types: frozenset[EntityType]


_ALL_TYPES = frozenset(EntityType)
_NON_DESCRIPTOR = frozenset(t for t in EntityType if t is not EntityType.DESCRIPTOR)

CONSTRAINTS: Mapping[RelationType, SchemaConstraint] = {
    RelationType.HAS_VALUE: SchemaConstraint(
        relation=RelationType.HAS_VALUE,
        allowed_head_types=_NON_DESCRIPTOR,
        allowed_tail_types=frozenset({EntityType.DESCRIPTOR}),
    ),
    RelationType.ASSOCIATED_WITH: SchemaConstraint(
        relation=RelationType.ASSOCIATED_WITH,
        allowed_head_types=_NON_DESCRIPTOR,
        allowed_tail_types=_ALL_TYPES,
    ),
}


def taxonomy() -> tuple[EntityType, ...]:
    """All nine entity types in canonical, run-stable order."""
    return _TAXONOMY_ORDER


def parent_of(et: EntityType) -> EntityType | None:
    return _PARENT.get(et)


def children_of(et: EntityType) -> frozenset[EntityType]:
    return frozenset(c for c, p in _PARENT.items() if p is et)


def resolve_entity_type(label: str) -> EntityType:
    """Map a label or registered alias to its entity type, case-insensitively."""
    key = _normalize_label(label)
    try:
        return _ENTITY_LOOKUP[key]
    except KeyError:
        raise UnknownEntityType(f"unknown entity type label: {label!r}") from None


def resolve_relation_type(label: str) -> RelationType:
    key = _normalize_label(label)
    try:
        return _RELATION_LOOKUP[key]
    except KeyError:
        raise UnknownRelationType(f"unknown relation type label: {label!r}") from None


def relation_types_allowed(rtype: RelationType, head: EntityType, tail: EntityType) -> bool:
    """Pure type-pair check against the constraint rows."""
    c = CONSTRAINTS[rtype]
    return head in c.allowed_head_types and tail in c.allowed_tail_types


def validate_relation(edge, spans: Mapping[str, object]) -> None:
    """Check one edge against a span table.

    ``edge`` needs ``rtype``/``head``/``tail`` attributes; ``spans`` maps
    span id to either an EntityType or any object with an ``etype``
    attribute. Raises DanglingSpanReference, SelfLoop or
    TypeConstraintViolation; returns None when the edge is acceptable.
    """
    for sid in (edge.head, edge.tail):
        if sid not in spans:
            raise DanglingSpanReference(f"edge {getattr(edge, 'edge_id', '?')} references unknown span {sid!r}")
    if edge.head == edge.tail:
        raise SelfLoop(f"edge {getattr(edge, 'edge_id', '?')} links span {edge.head!r} to itself")
    head_t = _etype_of(spans[edge.head])
    tail_t = _etype_of(spans[edge.tail])
    if not relation_types_allowed(edge.rtype, head_t, tail_t):
        raise TypeConstraintViolation(
            f"{edge.rtype.value} may not link {head_t.value} -> {tail_t.value}"
        )


def _etype_of(value) -> EntityType:
    if isinstance(value, EntityType):
        return value
    return value.etype


def export_document() -> dict:
    """Schema as a plain structure: taxonomy, constraints, aliases, version."""
    return {
        "schema_version": SCHEMA_VERSION,
        "entity_types": [
            {"name": et.value, "parent": (_PARENT[et].value if et in _PARENT else None)}
            for et in _TAXONOMY_ORDER
        ],
        "relation_types": [rt.value for rt in RelationType],
        "constraints": [
            {
                "relation": rt.value,
                "allowed_head_types": sorted(t.value for t in CONSTRAINTS[rt].allowed_head_types),
                "allowed_tail_types": sorted(t.value for t in CONSTRAINTS[rt].allowed_tail_types),
            }
            for rt in RelationType
        ],
        "entity_aliases": {a: et.value for a, et in sorted(_ENTITY_ALIASES.items())},
        "relation_aliases": {a: rt.value for a, rt in sorted(_RELATION_ALIASES.items())},
    }


def export_text() -> str:
    """Deterministic serialized form of the schema document."""
    return json.dumps(export_document(), indent=2, sort_keys=True) + "\n"
