"""Shared fixtures machinery: gold-markup parsing, article building,
brute-force oracles kept deliberately independent of the library code
they check."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from mofcodex.extract import EntitySpan
from mofcodex.link import RelationEdge
from mofcodex.schema import EntityType, RelationType, resolve_entity_type, resolve_relation_type
from mofcodex.store import AnnotatedParagraph, canonicalize

FIXTURES = Path(__file__).parent / "fixtures"

_MARKER_RX = re.compile(r"\{([^{}|]+)\|([^{}|]+)\}")

# noise paragraphs appended to each fixture article; must classify below 0.5
NOISE = {
    "10.5001/mofx.0001": "Powder X-ray diffraction confirmed the crystallinity of the framework and its phase purity.",
    "10.5001/mofx.0002": "Gas uptake experiments reveal a high surface area and promising selectivity toward carbon dioxide.",
    "10.5001/mofx.0003": "Thermogravimetric analysis shows the framework remains stable below the decomposition threshold.",
    "10.5001/mofx.0004": "Single-crystal structure determination reveals an open cubic network with large accessible pores.",
    "10.5001/mofx.0005": "Elemental analysis agrees with the expected composition within experimental uncertainty.",
}


@dataclass
class GoldParagraph:
    doi: str
    index: int
    text: str
    spans: list[tuple[int, int, str]]  # (start, end, label)
    relations: list[tuple[int, int, str]]  # (head ordinal, tail ordinal, type)

    @property
    def key(self):
        return (self.doi, self.index)


def parse_markup(path: Path | None = None) -> list[GoldParagraph]:
    path = path or (FIXTURES / "gold_markup.txt")
    blocks: list[GoldParagraph] = []
    current: dict | None = None
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "[paragraph]":
            if current:
                blocks.append(_finish_block(current))
            current = {"relations": []}
            continue
        assert current is not None, f"directive outside block: {line!r}"
        if line.startswith("doi:"):
            current["doi"] = line[len("doi:"):].strip()
        elif line.startswith("index:"):
            current["index"] = int(line[len("index:"):].strip())
        elif line.startswith("text:"):
            current["text_markup"] = raw.split("text:", 1)[1].strip()
        elif line.startswith("rel:"):
            head, tail, rtype = line[len("rel:"):].split()
            current["relations"].append((int(head), int(tail), rtype))
        else:
            raise AssertionError(f"bad markup line: {line!r}")
    if current:
        blocks.append(_finish_block(current))
    return blocks


def _finish_block(block: dict) -> GoldParagraph:
    markup = block["text_markup"]
    text_parts: list[str] = []
    spans: list[tuple[int, int, str]] = []
    pos = 0
    plain_len = 0
    for m in _MARKER_RX.finditer(markup):
        text_parts.append(markup[pos : m.start()])
        plain_len += m.start() - pos
        surface, label = m.group(1), m.group(2)
        resolve_entity_type(label)  # markup must use taxonomy labels
        spans.append((plain_len, plain_len + len(surface), label))
        text_parts.append(surface)
        plain_len += len(surface)
        pos = m.end()
    text_parts.append(markup[pos:])
    text = "".join(text_parts)
    for start, end, _ in spans:
        assert 0 <= start < end <= len(text)
    return GoldParagraph(
        doi=block["doi"],
        index=block["index"],
        text=text,
        spans=spans,
        relations=block["relations"],
    )


def gold_to_annotated(gp: GoldParagraph, provenance: str = "human",
                      status: str = "reviewed") -> AnnotatedParagraph:
    spans = tuple(
        EntitySpan(
            span_id=f"s{i}",
            start=start,
            end=end,
            surface=gp.text[start:end],
            etype=resolve_entity_type(label),
            provenance=provenance,
        )
        for i, (start, end, label) in enumerate(gp.spans)
    )
    edge_prov = provenance if provenance in ("rule", "human") else "human"
    relations = tuple(
        RelationEdge(
            edge_id=f"e{i}",
            rtype=resolve_relation_type(rtype),
            head=f"s{head}",
            tail=f"s{tail}",
            provenance=edge_prov,
        )
        for i, (head, tail, rtype) in enumerate(gp.relations)
    )
    return canonicalize(
        AnnotatedParagraph(
            doi=gp.doi,
            paragraph_index=gp.index,
            text=gp.text,
            spans=spans,
            relations=relations,
            review_status=status,
            updated_at="2026-01-01T00:00:00.000000Z",
        )
    )


def gold_interchange_lines(gold: list[GoldParagraph]) -> list[str]:
    lines = []
    for gp in gold:
        sid = {i: i for i in range(len(gp.spans))}
        entities = [
            {"id": i, "start_offset": s, "end_offset": e, "label": label}
            for i, (s, e, label) in enumerate(gp.spans)
        ]
        relations = [
            {"id": i, "from_id": sid[h], "to_id": sid[t], "type": rt}
            for i, (h, t, rt) in enumerate(gp.relations)
        ]
        lines.append(
            json.dumps(
                {
                    "doi": gp.doi,
                    "paragraph_index": gp.index,
                    "text": gp.text,
                    "entities": entities,
                    "relations": relations,
                },
                sort_keys=True,
            )
        )
    return lines


def write_fixture_articles(directory: Path, gold: list[GoldParagraph]) -> Path:
    """Materialize the gold corpus as front-matter article files plus one
    trailing non-synthesis paragraph per article."""
    directory.mkdir(parents=True, exist_ok=True)
    by_doi: dict[str, list[GoldParagraph]] = {}
    for gp in gold:
        by_doi.setdefault(gp.doi, []).append(gp)
    for n, (doi, paragraphs) in enumerate(sorted(by_doi.items())):
        paragraphs.sort(key=lambda g: g.index)
        assert [g.index for g in paragraphs] == list(range(len(paragraphs)))
        body = "\n\n".join([g.text for g in paragraphs] + [NOISE[doi]])
        (directory / f"article{n:02d}.txt").write_text(
            f"doi: {doi}\ntitle: Fixture synthesis report {n}\n\n{body}\n", encoding="utf-8"
        )
    return directory


def write_doi_list(path: Path, dois: list[str]) -> Path:
    path.write_text("# fixture reference list\n" + "\n".join(dois) + "\n", encoding="utf-8")
    return path


# ----------------------------------------------------------------------
# Random record generation for oracle / round-trip tests
# ----------------------------------------------------------------------

_WORD_POOL = [
    "the", "mixture", "was", "stirred", "heated", "cooled", "dried", "washed",
    "DMF", "water", "methanol", "autoclave", "vial", "beaker", "HCl",
    "Zn(NO3)2·6H2O", "ZrCl4", "MOF-5", "ZIF-8", "terephthalic", "acid",
    "slowly", "then", "product", "crystals", "2 hours", "120 °C", "15 mL",
    "0.5 mmol", "room temperature", "overnight", "3 days", "80 °C", "1 atm",
]

_TYPE_POOL = [t for t in EntityType]


def random_annotated(rng, doi: str, index: int,
                     allow_relations: bool = True) -> AnnotatedParagraph:
    """A random but always-valid AnnotatedParagraph."""
    words = [rng.choice(_WORD_POOL) for _ in range(rng.randint(4, 18))]
    text = " ".join(words)
    offsets = []
    pos = 0
    for w in words:
        offsets.append((pos, pos + len(w)))
        pos += len(w) + 1
    n_spans = rng.randint(0, min(6, len(words)))
    chosen = sorted(rng.sample(range(len(words)), n_spans))
    spans = []
    for i, wi in enumerate(chosen):
        start, end = offsets[wi]
        spans.append(
            EntitySpan(
                span_id=f"s{i}",
                start=start,
                end=end,
                surface=text[start:end],
                etype=rng.choice(_TYPE_POOL),
                provenance=rng.choice(["rule", "human"]),
            )
        )
    relations = []
    if allow_relations and len(spans) >= 2:
        for _ in range(rng.randint(0, 3)):
            head, tail = rng.sample(spans, 2)
            if head.etype is EntityType.DESCRIPTOR:
                continue
            rtype = RelationType.ASSOCIATED_WITH
            if tail.etype is EntityType.DESCRIPTOR and rng.random() < 0.5:
                rtype = RelationType.HAS_VALUE
            relations.append(
                RelationEdge(
                    edge_id=f"e{len(relations)}",
                    rtype=rtype,
                    head=head.span_id,
                    tail=tail.span_id,
                    provenance=rng.choice(["rule", "human"]),
                )
            )
    return canonicalize(
        AnnotatedParagraph(
            doi=doi,
            paragraph_index=index,
            text=text,
            spans=tuple(spans),
            relations=tuple(relations),
            review_status=rng.choice(["pending", "reviewed", "rejected"]),
            updated_at="2026-01-01T00:00:00.000000Z",
        )
    )


# ----------------------------------------------------------------------
# Brute-force oracles (independent re-implementations used as ground truth)
# ----------------------------------------------------------------------


def oracle_micro_prf(per_paragraph_counts: list[tuple[int, int, int]]) -> tuple[float, float, float]:
    """(matched, n_pred, n_gold) per paragraph -> micro P/R/F1 by direct sums."""
    matched = sum(c[0] for c in per_paragraph_counts)
    n_pred = sum(c[1] for c in per_paragraph_counts)
    n_gold = sum(c[2] for c in per_paragraph_counts)
    p = matched / n_pred if n_pred else 0.0
    r = matched / n_gold if n_gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def oracle_exact_match_count(pred: list[EntitySpan], gold: list[EntitySpan]) -> int:
    """Greedy exact matching by (start, end, type), each span used once."""
    gold_pool = [(g.start, g.end, g.etype) for g in gold]
    count = 0
    for s in pred:
        key = (s.start, s.end, s.etype)
        if key in gold_pool:
            gold_pool.remove(key)
            count += 1
    return count


def oracle_query(records: dict, etype=None, surface_substring=None, doi=None,
                 dimension_range=None, review_status=None) -> list:
    """Linear-scan re-implementation of store.query for oracle equivalence."""
    from mofcodex.errors import UnparseableQuantity
    from mofcodex.extract import Dimension, parse_quantity

    out = []
    for key in sorted(records):
        ap = records[key]
        if doi is not None and ap.doi != doi:
            continue
        if review_status is not None and ap.review_status != review_status:
            continue
        if etype is not None and all(s.etype is not etype for s in ap.spans):
            continue
        if surface_substring is not None and all(
            surface_substring not in s.surface for s in ap.spans
        ):
            continue
        if dimension_range is not None:
            dim, lo, hi = dimension_range
            dim = dim if isinstance(dim, Dimension) else Dimension(dim)
            hit = False
            for s in ap.spans:
                if s.etype is not EntityType.DESCRIPTOR:
                    continue
                try:
                    q = parse_quantity(s.surface)
                except UnparseableQuantity:
                    continue
                if q.dimension is dim and q.value is not None and lo <= q.value <= hi:
                    hit = True
                    break
            if not hit:
                continue
        out.append(key)
    return out
