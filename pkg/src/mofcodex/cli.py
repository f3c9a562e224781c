"""``codex``: batch pipeline driver and service entry points.

Stages compose: ``codex run`` produces the same store as chaining
``ingest -> classify -> extract -> link -> store import``. Intermediate
files are line-delimited JSON; the link output is the annotation
interchange format accepted by ``store import``.

Exit codes: 0 success, 1 fatal configuration error, 2 completed with
per-item errors.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from . import schema
from .classify import (
    DEFAULT_CLASSIFY_TEMPLATE,
    ExternalModelConfig,
    HttpCompletionClient,
    classify,
    classify_with_fallback,
)
from .corpus import (
    Paragraph,
    filter_by_doi,
    iter_article_paths,
    load_doi_list,
    read_article,
    segment_paragraphs,
)
from .errors import CodexError, EmptyRecord
from .evaluate import evaluate
from .extract import EntitySpan, default_gazetteers, extract_entities, load_gazetteer_dir
from .link import RelationEdge, build_record, link_relations, utc_now
from .store import (
    AnnotatedParagraph,
    Store,
    annotated_from_interchange,
    annotated_to_interchange,
    canonicalize,
)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


@dataclass
class PipelineConfig:
    """All pipeline settings; round-trips losslessly through JSON."""

    articles_dir: str = ""
    doi_list: str = ""
    store_dir: str = ""
    gazetteer_dir: str | None = None
    threshold: float = 0.5
    external: bool = False
    endpoint_url: str = ""
    model: str = ""
    timeout_s: float = 30.0
    max_in_flight: int = 4
    credential_env: str = "CODEX_API_KEY"
    fallback_to_heuristic: bool = True
    matching_mode: str = "exact"
    seed: int = 0
    workers: int = 0  # 0 = logical cores
    report_path: str = "report.txt"

    def to_file(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise CodexError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def external_model(self) -> ExternalModelConfig:
        return ExternalModelConfig(
            endpoint_url=self.endpoint_url,
            model=self.model,
            timeout_s=self.timeout_s,
            max_in_flight=self.max_in_flight,
            credential_env=self.credential_env,
            fallback_to_heuristic=self.fallback_to_heuristic,
        )


@dataclass
class PipelineReport:
    articles_in: int = 0
    articles_kept: int = 0
    paragraphs: int = 0
    synthesis_paragraphs: int = 0
    spans: int = 0
    edges: int = 0
    records_stored: int = 0
    unattached: dict = field(default_factory=dict)
    errors: list = field(default_factory=list)
    seed: int = 0

    def format(self) -> str:
        lines = [
            "pipeline report",
            f"seed: {self.seed}",
            f"articles_in: {self.articles_in}",
            f"articles_kept: {self.articles_kept}",
            f"paragraphs: {self.paragraphs}",
            f"synthesis_paragraphs: {self.synthesis_paragraphs}",
            f"spans: {self.spans}",
            f"edges: {self.edges}",
            f"records_stored: {self.records_stored}",
            "unattached_spans:",
        ]
        for name, count in sorted(self.unattached.items()):
            lines.append(f"  {name}: {count}")
        lines.append(f"errors: {len(self.errors)}")
        for err in self.errors:
            lines.append(f"  {err}")
        return "\n".join(lines) + "\n"


def _gazetteers(config: PipelineConfig):
    if config.gazetteer_dir:
        return load_gazetteer_dir(config.gazetteer_dir)
    return default_gazetteers()


def _annotate_paragraph(p: Paragraph, gazetteers, now: str) -> tuple[AnnotatedParagraph, dict, int, int]:
    """extract + link + record for one synthesis paragraph."""
    spans = extract_entities(p, gazetteers)
    edges, diagnostics = link_relations(p, spans)
    try:
        record = build_record(p, spans, edges, created_at=now)
    except EmptyRecord:
        record = None
    ap = canonicalize(
        AnnotatedParagraph(
            doi=p.doi,
            paragraph_index=p.index,
            text=p.text,
            spans=tuple(spans),
            relations=tuple(edges),
            review_status="pending",
            updated_at=now,
            record=record,
        )
    )
    return ap, dict(diagnostics.unattached), len(spans), len(edges)


def run_pipeline(config: PipelineConfig) -> PipelineReport:
    """ingest -> DOI filter -> classify -> extract -> link -> store."""
    report = PipelineReport(seed=config.seed)
    gazetteers = _gazetteers(config)
    reference, warnings = load_doi_list(config.doi_list)
    report.errors.extend(warnings)
    client = None
    if config.external:
        client = HttpCompletionClient(config.external_model())
    workers = config.workers if config.workers > 0 else (os.cpu_count() or 1)

    def process(p: Paragraph):
        if config.external and client is not None:
            errs: list[str] = []
            try:
                result = classify_with_fallback(
                    p, DEFAULT_CLASSIFY_TEMPLATE, client, config.threshold, gazetteers,
                    errs, fallback=config.fallback_to_heuristic,
                )
            except CodexError:
                return p, None, errs  # recorded; paragraph skipped
            return p, result, errs
        return p, classify(p, config.threshold, gazetteers), []

    now = utc_now()
    with Store(config.store_dir, writable=True) as store, ThreadPoolExecutor(max_workers=workers) as pool:
        for path in iter_article_paths(config.articles_dir):
            try:
                article = read_article(path)
            except CodexError as exc:
                report.errors.append(str(exc))
                continue
            report.articles_in += 1
            if not filter_by_doi([article], reference):
                continue
            report.articles_kept += 1
            paragraphs = segment_paragraphs(article)
            report.paragraphs += len(paragraphs)
            for p, result, errs in pool.map(process, paragraphs):
                report.errors.extend(errs)
                if result is None or not result.label:
                    continue
                report.synthesis_paragraphs += 1
                ap, unattached, n_spans, n_edges = _annotate_paragraph(p, gazetteers, now)
                report.spans += n_spans
                report.edges += n_edges
                for name, count in unattached.items():
                    report.unattached[name] = report.unattached.get(name, 0) + count
                store.put(ap)
                report.records_stored += 1
    return report


# ----------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------


def _read_jsonl(path: str) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out


def _write_jsonl(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")


def cmd_ingest(args) -> int:
    reference, warnings = load_doi_list(args.doi_list)
    for w in warnings:
        print(w, file=sys.stderr)
    rows = []
    errors = 0
    articles_in = articles_kept = 0
    for path in iter_article_paths(args.articles):
        try:
            article = read_article(path)
        except CodexError as exc:
            print(exc, file=sys.stderr)
            errors += 1
            continue
        articles_in += 1
        if not filter_by_doi([article], reference):
            continue
        articles_kept += 1
        for p in segment_paragraphs(article):
            rows.append({"doi": p.doi, "paragraph_index": p.index, "text": p.text})
    _write_jsonl(args.out, rows)
    print(f"articles_in: {articles_in}")
    print(f"articles_kept: {articles_kept}")
    print(f"paragraphs: {len(rows)}")
    return EXIT_PARTIAL if (errors or warnings) else EXIT_OK


def cmd_classify(args) -> int:
    config = _config_from_args(args)
    gazetteers = _gazetteers(config)
    client = HttpCompletionClient(config.external_model()) if args.external else None
    rows = _read_jsonl(args.infile)
    errors: list[str] = []
    out = []
    for row in rows:
        p = Paragraph(doi=row["doi"], index=int(row["paragraph_index"]), text=row["text"])
        if client is not None:
            result = classify_with_fallback(
                p, DEFAULT_CLASSIFY_TEMPLATE, client, args.threshold, gazetteers, errors
            )
        else:
            result = classify(p, args.threshold, gazetteers)
        out.append(
            {
                "doi": p.doi,
                "paragraph_index": p.index,
                "text": p.text,
                "score": result.score,
                "label": result.label,
                "source": result.source,
            }
        )
    _write_jsonl(args.out, out)
    for e in errors:
        print(e, file=sys.stderr)
    kept = sum(1 for r in out if r["label"])
    print(f"paragraphs: {len(out)}")
    print(f"synthesis_paragraphs: {kept}")
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_extract(args) -> int:
    config = _config_from_args(args)
    gazetteers = _gazetteers(config)
    client = HttpCompletionClient(config.external_model()) if args.external else None
    out = []
    n_spans = 0
    errors: list[str] = []
    for row in _read_jsonl(args.infile):
        if "label" in row and not row["label"]:
            continue
        p = Paragraph(doi=row["doi"], index=int(row["paragraph_index"]), text=row["text"])
        if client is not None:
            from .classify import DEFAULT_NER_TEMPLATE
            from .errors import MalformedCompletion, TransportError
            from .extract import extract_external

            try:
                result = extract_external(p, DEFAULT_NER_TEMPLATE, client)
                spans = result.spans
                errors.extend(f"{p.doi}#{p.index}: {r}" for r in result.reports)
            except (TransportError, MalformedCompletion) as exc:
                errors.append(f"{p.doi}#{p.index}: {exc}")
                if not config.fallback_to_heuristic:
                    continue
                spans = extract_entities(p, gazetteers)
        else:
            spans = extract_entities(p, gazetteers)
        n_spans += len(spans)
        out.append(
            {
                "doi": p.doi,
                "paragraph_index": p.index,
                "text": p.text,
                "entities": [
                    {"id": i, "start_offset": s.start, "end_offset": s.end, "label": s.etype.value}
                    for i, s in enumerate(spans)
                ],
            }
        )
    _write_jsonl(args.out, out)
    for e in errors:
        print(e, file=sys.stderr)
    print(f"paragraphs: {len(out)}")
    print(f"spans: {n_spans}")
    return EXIT_PARTIAL if errors else EXIT_OK


def cmd_link(args) -> int:
    out = []
    n_edges = 0
    unattached: dict[str, int] = {}
    now = utc_now()
    for row in _read_jsonl(args.infile):
        p = Paragraph(doi=row["doi"], index=int(row["paragraph_index"]), text=row["text"])
        spans = [
            EntitySpan(
                span_id=f"s{i}",
                start=int(e["start_offset"]),
                end=int(e["end_offset"]),
                surface=p.text[int(e["start_offset"]) : int(e["end_offset"])],
                etype=schema.resolve_entity_type(e["label"]),
            )
            for i, e in enumerate(row.get("entities", []))
        ]
        edges, diagnostics = link_relations(p, spans)
        n_edges += len(edges)
        for name, count in diagnostics.unattached.items():
            unattached[name] = unattached.get(name, 0) + count
        try:
            record = build_record(p, spans, edges, created_at=now)
        except EmptyRecord:
            record = None
        ap = AnnotatedParagraph(
            doi=p.doi,
            paragraph_index=p.index,
            text=p.text,
            spans=tuple(spans),
            relations=tuple(edges),
            updated_at=now,
            record=record,
        )
        out.append(annotated_to_interchange(ap))
    _write_jsonl(args.out, out)
    print(f"paragraphs: {len(out)}")
    print(f"edges: {n_edges}")
    for name, count in sorted(unattached.items()):
        print(f"unattached {name}: {count}", file=sys.stderr)
    return EXIT_OK


def cmd_store_import(args) -> int:
    with Store(args.store, writable=True) as store:
        count, reports = store.import_annotations(
            args.infile, provenance=args.provenance, status=args.status
        )
    for r in reports:
        print(r, file=sys.stderr)
    print(f"imported: {count}")
    return EXIT_PARTIAL if reports else EXIT_OK


def cmd_store_export(args) -> int:
    with Store(args.store, writable=False) as store:
        keys = store.keys()
        if args.status:
            keys = [k for k in keys if store.get(k).review_status == args.status]
        if args.sample is not None:
            rng = random.Random(args.seed)
            keys = sorted(rng.sample(keys, min(args.sample, len(keys))))
        store.export_annotations(keys, args.out)
    print(f"exported: {len(keys)}")
    return EXIT_OK


def cmd_store_query(args) -> int:
    dimension_range = None
    if args.dimension_range:
        try:
            dim, lo, hi = args.dimension_range.split(":")
            dimension_range = (dim, float(lo), float(hi))
        except ValueError:
            print("--dimension-range must be DIMENSION:LO:HI", file=sys.stderr)
            return EXIT_FATAL
    with Store(args.store, writable=False) as store:
        keys = store.query(
            etype=args.etype,
            surface_substring=args.surface,
            doi=args.doi,
            dimension_range=dimension_range,
            review_status=args.status,
        )
    for doi, index in keys:
        print(f"{doi}\t{index}")
    return EXIT_OK


def cmd_eval(args) -> int:
    with Store(args.pred, writable=False) as pred_store, Store(args.gold, writable=False) as gold_store:
        pred = dict(pred_store.items())
        gold = dict(gold_store.items())
    report = evaluate(pred, gold, mode=args.mode)
    print(report.format_table())
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")
    return EXIT_OK


def cmd_schema_export(args) -> int:
    text = schema.export_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.bind.partition(":")
    app = create_app(args.store, ui_dir=args.ui)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8976), log_level="warning")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _config_from_args(args)
    for name, value in (("articles_dir", config.articles_dir),
                        ("doi_list", config.doi_list),
                        ("store_dir", config.store_dir)):
        if not value:
            print(f"missing required config: {name}", file=sys.stderr)
            return EXIT_FATAL
        if name != "store_dir" and not Path(value).exists():
            print(f"{name} does not exist: {value}", file=sys.stderr)
            return EXIT_FATAL
    report = run_pipeline(config)
    text = report.format()
    sys.stdout.write(text)
    Path(config.report_path).write_text(text, encoding="utf-8")
    for name, count in sorted(report.unattached.items()):
        print(f"unattached {name}: {count}", file=sys.stderr)
    return EXIT_PARTIAL if report.errors else EXIT_OK


def _config_from_args(args) -> PipelineConfig:
    config = PipelineConfig.from_file(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    for flag, key in (
        ("articles", "articles_dir"),
        ("doi_list", "doi_list"),
        ("store", "store_dir"),
        ("gazetteers", "gazetteer_dir"),
        ("threshold", "threshold"),
        ("external", "external"),
        ("seed", "seed"),
        ("workers", "workers"),
        ("report", "report_path"),
    ):
        value = getattr(args, flag, None)
        if value is not None and value is not False:
            overrides[key] = value
    return replace(config, **overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codex", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="read articles, filter by DOI list, write paragraphs")
    p.add_argument("--articles", required=True)
    p.add_argument("--doi-list", dest="doi_list", required=True)
    p.add_argument("--out", default="paragraphs.jsonl")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("classify", help="label paragraphs as synthesis / not")
    p.add_argument("--in", dest="infile", default="paragraphs.jsonl")
    p.add_argument("--out", default="classified.jsonl")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--external", action="store_true")
    p.add_argument("--gazetteers", default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("extract", help="recognize entity spans")
    p.add_argument("--in", dest="infile", default="classified.jsonl")
    p.add_argument("--out", default="extracted.jsonl")
    p.add_argument("--gazetteers", default=None)
    p.add_argument("--external", action="store_true")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("link", help="assign relations and build records")
    p.add_argument("--in", dest="infile", default="extracted.jsonl")
    p.add_argument("--out", default="annotated.jsonl")
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("store", help="store operations")
    store_sub = p.add_subparsers(dest="store_command", required=True)

    sp = store_sub.add_parser("import", help="import an annotation file")
    sp.add_argument("infile")
    sp.add_argument("--store", required=True)
    sp.add_argument("--provenance", choices=("human", "rule"), default="human")
    sp.add_argument("--status", choices=("reviewed", "pending"), default="reviewed")
    sp.set_defaults(func=cmd_store_import)

    sp = store_sub.add_parser("export", help="export annotation file")
    sp.add_argument("--store", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--status", default=None)
    sp.add_argument("--sample", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_store_export)

    sp = store_sub.add_parser("query", help="query stored paragraphs")
    sp.add_argument("--store", required=True)
    sp.add_argument("--etype", default=None)
    sp.add_argument("--surface", default=None)
    sp.add_argument("--doi", default=None)
    sp.add_argument("--dimension-range", dest="dimension_range", default=None,
                    help="DIMENSION:LO:HI, canonical units")
    sp.add_argument("--status", default=None)
    sp.set_defaults(func=cmd_store_query)

    p = sub.add_parser("eval", help="score a prediction store against a gold store")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--mode", choices=("exact", "overlap"), default="exact")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("schema", help="schema operations")
    schema_sub = p.add_subparsers(dest="schema_command", required=True)
    sp = schema_sub.add_parser("export", help="write the schema document")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_schema_export)

    p = sub.add_parser("serve", help="run the review service")
    p.add_argument("--store", required=True)
    p.add_argument("--bind", default="127.0.0.1:8976")
    p.add_argument("--ui", default=None, help="directory of built UI assets")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("run", help="full pipeline")
    p.add_argument("--config", default=None)
    p.add_argument("--articles", default=None)
    p.add_argument("--doi-list", dest="doi_list", default=None)
    p.add_argument("--store", default=None)
    p.add_argument("--gazetteers", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--external", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CodexError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
