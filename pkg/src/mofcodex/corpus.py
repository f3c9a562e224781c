"""Article ingestion: front-matter files, DOI normalization and filtering,
paragraph segmentation.

Articles are plain-text files with a small header::

    doi: 10.1021/ja0001
    title: Synthesis and characterization of MOF-5

    First paragraph ...

    Second paragraph ...

The header ends at the first blank line; paragraph boundaries are blank
lines. All operations are pure.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import ArticleFormatError, FileUnreadable, MalformedDoi

_RESOLVER_RX = re.compile(r"^(?:https?://(?:dx\.)?doi\.org/|doi:\s*)", re.IGNORECASE)
_DOI_RX = re.compile(r"^10\.[^/\s]+/\S+$")


@dataclass(frozen=True)
class ArticleDocument:
    doi: str
    title: str
    body: str
    source_path: str = ""


@dataclass(frozen=True)
class Paragraph:
    doi: str
    index: int
    text: str


def normalize_doi(raw: str) -> str:
    """Strip resolver prefixes and whitespace, lowercase, validate shape."""
    doi = _RESOLVER_RX.sub("", raw.strip()).strip().lower()
    if not _DOI_RX.match(doi):
        raise MalformedDoi(f"not a DOI: {raw!r}")
    return doi


def load_doi_list(path: str | Path) -> tuple[set[str], list[str]]:
    """Read a one-DOI-per-line file ('#' comments allowed).

    Returns (normalized deduplicated set, warnings for skipped lines).
    """
    p = Path(path)
    try:
        lines = p.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FileUnreadable(f"cannot read DOI list {p}: {exc}") from exc
    dois: set[str] = set()
    warnings: list[str] = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            dois.add(normalize_doi(stripped))
        except MalformedDoi:
            warnings.append(f"{p.name}:{lineno}: skipped malformed DOI {stripped!r}")
    return dois, warnings


def filter_by_doi(articles: Sequence[ArticleDocument] | Iterable[ArticleDocument],
                  reference: set[str]) -> list[ArticleDocument]:
    """Input subsequence whose DOI is in the reference set, order preserved."""
    return [a for a in articles if a.doi in reference]


def segment_paragraphs(doc: ArticleDocument) -> list[Paragraph]:
    """Split the body on blank lines, normalize whitespace, index from 0."""
    paragraphs: list[Paragraph] = []
    for segment in re.split(r"\n\s*\n", doc.body):
        text = re.sub(r"\s+", " ", segment).strip()
        if text:
            paragraphs.append(Paragraph(doi=doc.doi, index=len(paragraphs), text=text))
    return paragraphs


def read_article(path: str | Path) -> ArticleDocument:
    """Parse one front-matter article file."""
    p = Path(path)
    try:
        raw = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise FileUnreadable(f"cannot read article {p}: {exc}") from exc
    header, _, body = raw.partition("\n\n")
    fields: dict[str, str] = {}
    for line in header.splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ArticleFormatError(f"{p.name}: malformed header line {line!r}")
        fields[key.strip().lower()] = value.strip()
    if "doi" not in fields:
        raise ArticleFormatError(f"{p.name}: missing 'doi' header field")
    return ArticleDocument(
        doi=normalize_doi(fields["doi"]),
        title=fields.get("title", ""),
        body=body,
        source_path=str(p),
    )


def iter_article_paths(directory: str | Path) -> Iterator[Path]:
    """Article files in a directory, sorted by name for run-stable order."""
    d = Path(directory)
    if not d.is_dir():
        raise FileUnreadable(f"not a directory: {d}")
    yield from sorted(d.glob("*.txt"))
