#!/usr/bin/env python3
"""Narrative tour of the library: article -> paragraphs -> classification
-> entity spans -> relations -> structured synthesis record -> store.

Run from the repository root:

    python3 demo/walkthrough.py
"""
from pathlib import Path
import tempfile

from mofcodex.classify import classify
from mofcodex.corpus import load_doi_list, read_article, segment_paragraphs
from mofcodex.errors import EmptyRecord
from mofcodex.extract import extract_entities
from mofcodex.link import build_record, link_relations, utc_now
from mofcodex.store import AnnotatedParagraph, Store, canonicalize

DEMO = Path(__file__).parent

reference, _ = load_doi_list(DEMO / "mof_dois.txt")
article = read_article(DEMO / "articles" / "mof5_report.txt")
print(f"article: {article.title}  (doi {article.doi}, MOF-relevant: {article.doi in reference})")

paragraphs = segment_paragraphs(article)
print(f"{len(paragraphs)} paragraphs segmented\n")

annotated = []
for p in paragraphs:
    result = classify(p, threshold=0.5)
    tag = "synthesis" if result.label else "other"
    print(f"[{p.index}] score={result.score:.2f} ({tag}): {p.text[:70]}...")
    if not result.label:
        continue

    spans = extract_entities(p)
    for s in spans:
        print(f"      {s.etype.value:<18} {s.surface!r} @ [{s.start},{s.end})")
    edges, diagnostics = link_relations(p, spans)
    table = {s.span_id: s for s in spans}
    for e in edges:
        print(f"      {e.rtype.value}: {table[e.head].surface!r} -> {table[e.tail].surface!r}")
    try:
        record = build_record(p, spans, edges)
    except EmptyRecord:
        record = None
    if record:
        print(f"      record: {len(record.steps)} step(s), result span: "
              f"{table[record.result].surface if record.result else None}")
    annotated.append(
        canonicalize(AnnotatedParagraph(
            doi=p.doi, paragraph_index=p.index, text=p.text,
            spans=tuple(spans), relations=tuple(edges),
            updated_at=utc_now(), record=record,
        ))
    )
    print()

with tempfile.TemporaryDirectory() as tmp:
    with Store(tmp) as store:
        for ap in annotated:
            store.put(ap)
        print(f"stored {store.manifest().record_count} paragraphs")
        hot = store.query(dimension_range=("temperature", 350.0, 500.0))
        print(f"paragraphs with a temperature between 350 K and 500 K: {hot}")
