"""Span- and relation-level scoring of predicted annotations against gold.

Conventions (fixed so tests can pin numbers): precision or recall is 0
when its denominator is 0; F1 is 0 when P+R is 0. Micro metrics come from
entity-span counts summed over types and paragraphs; macro averages over
entity types with gold support > 0. Relation metrics are reported
separately per relation type: a predicted edge counts as correct iff both
endpoint spans matched and the relation type is equal.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import KeyMismatch
from .extract import EntitySpan
from .link import RelationEdge
from .schema import EntityType, RelationType
from .store import AnnotatedParagraph, Key

MATCH_MODES = ("exact", "overlap")


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    support: int = 0


@dataclass(frozen=True)
class EvalReport:
    per_type: Mapping[EntityType, Metrics]
    relations: Mapping[RelationType, Metrics]
    micro: Metrics
    macro: Metrics
    matching_mode: str

    def to_dict(self) -> dict:
        def m(x: Metrics) -> dict:
            return {"precision": x.precision, "recall": x.recall, "f1": x.f1, "support": x.support}

        return {
            "matching_mode": self.matching_mode,
            "per_type": {t.value: m(self.per_type[t]) for t in sorted(self.per_type, key=lambda t: t.value)},
            "relations": {r.value: m(self.relations[r]) for r in sorted(self.relations, key=lambda r: r.value)},
            "micro": m(self.micro),
            "macro": m(self.macro),
        }

    def format_table(self) -> str:
        rows = [f"{'type':<20} {'P':>8} {'R':>8} {'F1':>8} {'support':>8}"]
        for t in sorted(self.per_type, key=lambda t: t.value):
            x = self.per_type[t]
            rows.append(f"{t.value:<20} {x.precision:>8.4f} {x.recall:>8.4f} {x.f1:>8.4f} {x.support:>8}")
        for r in sorted(self.relations, key=lambda r: r.value):
            x = self.relations[r]
            rows.append(f"{r.value:<20} {x.precision:>8.4f} {x.recall:>8.4f} {x.f1:>8.4f} {x.support:>8}")
        rows.append(f"{'micro':<20} {self.micro.precision:>8.4f} {self.micro.recall:>8.4f} {self.micro.f1:>8.4f} {self.micro.support:>8}")
        rows.append(f"{'macro':<20} {self.macro.precision:>8.4f} {self.macro.recall:>8.4f} {self.macro.f1:>8.4f} {self.macro.support:>8}")
        return "\n".join(rows)


def prf(matched: int, n_pred: int, n_gold: int) -> tuple[float, float, float]:
    p = matched / n_pred if n_pred else 0.0
    r = matched / n_gold if n_gold else 0.0
    f1 = (2 * p * r / (p + r)) if (p + r) else 0.0
    return p, r, f1


def _overlap_len(a: EntitySpan, b: EntitySpan) -> int:
    return min(a.end, b.end) - max(a.start, b.start)


def match_spans(
    pred: Sequence[EntitySpan], gold: Sequence[EntitySpan], mode: str = "exact"
) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Pair predicted and gold spans.

    exact: identical (start, end, type). overlap: same type and >= 1 char
    of overlap, resolved greedily by largest overlap then leftmost. Each
    span lands in at most one pair. Returns (pairs of indices,
    unmatched pred indices, unmatched gold indices).
    """
    if mode not in MATCH_MODES:
        raise ValueError(f"unknown matching mode {mode!r}")
    pairs: list[tuple[int, int]] = []
    used_pred: set[int] = set()
    used_gold: set[int] = set()
    if mode == "exact":
        gold_index: dict[tuple[int, int, EntityType], int] = {}
        for j, g in enumerate(gold):
            gold_index.setdefault((g.start, g.end, g.etype), j)
        for i, s in enumerate(pred):
            j = gold_index.get((s.start, s.end, s.etype))
            if j is not None and j not in used_gold:
                pairs.append((i, j))
                used_pred.add(i)
                used_gold.add(j)
    else:
        candidates = []
        for i, s in enumerate(pred):
            for j, g in enumerate(gold):
                if s.etype is g.etype and _overlap_len(s, g) >= 1:
                    candidates.append((-_overlap_len(s, g), s.start, g.start, i, j))
        for _, _, _, i, j in sorted(candidates):
            if i in used_pred or j in used_gold:
                continue
            pairs.append((i, j))
            used_pred.add(i)
            used_gold.add(j)
    unmatched_pred = [i for i in range(len(pred)) if i not in used_pred]
    unmatched_gold = [j for j in range(len(gold)) if j not in used_gold]
    return pairs, unmatched_pred, unmatched_gold


def _matched_edge_pairs(
    pred_edges: Iterable[RelationEdge],
    gold_edges: Iterable[RelationEdge],
    span_pairs: dict[str, str],
) -> dict[RelationType, int]:
    """Count predicted edges whose endpoints map to a same-typed gold edge."""
    counts = {rt: 0 for rt in RelationType}
    gold_set: dict[tuple[RelationType, str, str], int] = {}
    for g in gold_edges:
        k = (g.rtype, g.head, g.tail)
        gold_set[k] = gold_set.get(k, 0) + 1
    for e in pred_edges:
        head = span_pairs.get(e.head)
        tail = span_pairs.get(e.tail)
        if head is None or tail is None:
            continue
        k = (e.rtype, head, tail)
        if gold_set.get(k, 0) > 0:
            gold_set[k] -= 1
            counts[e.rtype] += 1
    return counts


def evaluate(
    pred: Mapping[Key, AnnotatedParagraph],
    gold: Mapping[Key, AnnotatedParagraph],
    mode: str = "exact",
) -> EvalReport:
    """Score predictions against gold over aligned paragraph keys."""
    missing = sorted(set(pred) - set(gold))
    extra = sorted(set(gold) - set(pred))
    if missing or extra:
        raise KeyMismatch(
            f"pred keys without gold: {missing[:5]}; gold keys without pred: {extra[:5]}"
        )
    matched: dict[EntityType, int] = {t: 0 for t in EntityType}
    n_pred: dict[EntityType, int] = {t: 0 for t in EntityType}
    n_gold: dict[EntityType, int] = {t: 0 for t in EntityType}
    r_matched = {rt: 0 for rt in RelationType}
    r_pred = {rt: 0 for rt in RelationType}
    r_gold = {rt: 0 for rt in RelationType}

    for key in sorted(pred):
        p_spans = list(pred[key].spans)
        g_spans = list(gold[key].spans)
        pairs, _, _ = match_spans(p_spans, g_spans, mode)
        for s in p_spans:
            n_pred[s.etype] += 1
        for g in g_spans:
            n_gold[g.etype] += 1
        span_pair_map: dict[str, str] = {}
        for i, j in pairs:
            matched[p_spans[i].etype] += 1
            span_pair_map[p_spans[i].span_id] = g_spans[j].span_id
        for e in pred[key].relations:
            r_pred[e.rtype] += 1
        for e in gold[key].relations:
            r_gold[e.rtype] += 1
        for rt, c in _matched_edge_pairs(pred[key].relations, gold[key].relations, span_pair_map).items():
            r_matched[rt] += c

    per_type = {}
    for t in EntityType:
        p, r, f1 = prf(matched[t], n_pred[t], n_gold[t])
        per_type[t] = Metrics(p, r, f1, support=n_gold[t])
    relations = {}
    for rt in RelationType:
        p, r, f1 = prf(r_matched[rt], r_pred[rt], r_gold[rt])
        relations[rt] = Metrics(p, r, f1, support=r_gold[rt])

    total_matched = sum(matched.values())
    total_pred = sum(n_pred.values())
    total_gold = sum(n_gold.values())
    p, r, f1 = prf(total_matched, total_pred, total_gold)
    micro = Metrics(p, r, f1, support=total_gold)

    with_support = [t for t in EntityType if n_gold[t] > 0]
    if with_support:
        mp = sum(per_type[t].precision for t in with_support) / len(with_support)
        mr = sum(per_type[t].recall for t in with_support) / len(with_support)
        mf = sum(per_type[t].f1 for t in with_support) / len(with_support)
    else:
        mp = mr = mf = 0.0
    macro = Metrics(mp, mr, mf, support=total_gold)

    return EvalReport(per_type=per_type, relations=relations, micro=micro, macro=macro, matching_mode=mode)
