"""Entity recognition inside synthesis paragraphs.

Combines editable gazetteers (action verbs, solvents, acids, vessels,
named precursors), a chemical-formula grammar, a MOF-code pattern, and a
quantity/unit grammar. All matchers are pure functions over immutable
gazetteers; paragraphs can be processed in parallel.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .corpus import Paragraph
from .errors import FileUnreadable, MalformedCompletion, UnknownEntityType, UnparseableQuantity
from .schema import EntityType, resolve_entity_type

# ----------------------------------------------------------------------
# Quantities
# ----------------------------------------------------------------------


class Dimension(Enum):
    TEMPERATURE = "temperature"
    DURATION = "duration"
    MASS = "mass"
    VOLUME = "volume"
    AMOUNT_OF_SUBSTANCE = "amount-of-substance"
    CONCENTRATION = "concentration"
    PRESSURE = "pressure"
    DIMENSIONLESS = "dimensionless"
    QUALITATIVE = "qualitative"

    def __str__(self) -> str:
        return self.value


# canonical unit symbol per dimension
CANONICAL_UNITS: Mapping[Dimension, str] = {
    Dimension.TEMPERATURE: "K",
    Dimension.DURATION: "s",
    Dimension.MASS: "g",
    Dimension.VOLUME: "L",
    Dimension.AMOUNT_OF_SUBSTANCE: "mol",
    Dimension.CONCENTRATION: "mol/L",
    Dimension.PRESSURE: "Pa",
    Dimension.DIMENSIONLESS: "",
}

# surface -> (dimension, scale, offset); canonical = value * scale + offset.
# Case-sensitive symbols are the ones whose lowercase collides with another
# common token; everything else is looked up lowercased.
_UNITS_CASE_SENSITIVE: dict[str, tuple[Dimension, float, float]] = {
    "K": (Dimension.TEMPERATURE, 1.0, 0.0),
    "M": (Dimension.CONCENTRATION, 1.0, 0.0),
    "mM": (Dimension.CONCENTRATION, 1e-3, 0.0),
    "µM": (Dimension.CONCENTRATION, 1e-6, 0.0),
    "μM": (Dimension.CONCENTRATION, 1e-6, 0.0),
    "uM": (Dimension.CONCENTRATION, 1e-6, 0.0),
    "MPa": (Dimension.PRESSURE, 1e6, 0.0),
}

_UNITS_CASE_INSENSITIVE: dict[str, tuple[Dimension, float, float]] = {
    "°c": (Dimension.TEMPERATURE, 1.0, 273.15),
    "℃": (Dimension.TEMPERATURE, 1.0, 273.15),
    "kelvin": (Dimension.TEMPERATURE, 1.0, 0.0),
    "s": (Dimension.DURATION, 1.0, 0.0),
    "sec": (Dimension.DURATION, 1.0, 0.0),
    "secs": (Dimension.DURATION, 1.0, 0.0),
    "second": (Dimension.DURATION, 1.0, 0.0),
    "seconds": (Dimension.DURATION, 1.0, 0.0),
    "min": (Dimension.DURATION, 60.0, 0.0),
    "mins": (Dimension.DURATION, 60.0, 0.0),
    "minute": (Dimension.DURATION, 60.0, 0.0),
    "minutes": (Dimension.DURATION, 60.0, 0.0),
    "h": (Dimension.DURATION, 3600.0, 0.0),
    "hr": (Dimension.DURATION, 3600.0, 0.0),
    "hrs": (Dimension.DURATION, 3600.0, 0.0),
    "hour": (Dimension.DURATION, 3600.0, 0.0),
    "hours": (Dimension.DURATION, 3600.0, 0.0),
    "day": (Dimension.DURATION, 86400.0, 0.0),
    "days": (Dimension.DURATION, 86400.0, 0.0),
    "g": (Dimension.MASS, 1.0, 0.0),
    "gram": (Dimension.MASS, 1.0, 0.0),
    "grams": (Dimension.MASS, 1.0, 0.0),
    "mg": (Dimension.MASS, 1e-3, 0.0),
    "kg": (Dimension.MASS, 1e3, 0.0),
    "µg": (Dimension.MASS, 1e-6, 0.0),
    "μg": (Dimension.MASS, 1e-6, 0.0),
    "ug": (Dimension.MASS, 1e-6, 0.0),
    "l": (Dimension.VOLUME, 1.0, 0.0),
    "liter": (Dimension.VOLUME, 1.0, 0.0),
    "liters": (Dimension.VOLUME, 1.0, 0.0),
    "litre": (Dimension.VOLUME, 1.0, 0.0),
    "litres": (Dimension.VOLUME, 1.0, 0.0),
    "ml": (Dimension.VOLUME, 1e-3, 0.0),
    "µl": (Dimension.VOLUME, 1e-6, 0.0),
    "μl": (Dimension.VOLUME, 1e-6, 0.0),
    "ul": (Dimension.VOLUME, 1e-6, 0.0),
    "mol": (Dimension.AMOUNT_OF_SUBSTANCE, 1.0, 0.0),
    "mole": (Dimension.AMOUNT_OF_SUBSTANCE, 1.0, 0.0),
    "moles": (Dimension.AMOUNT_OF_SUBSTANCE, 1.0, 0.0),
    "mmol": (Dimension.AMOUNT_OF_SUBSTANCE, 1e-3, 0.0),
    "µmol": (Dimension.AMOUNT_OF_SUBSTANCE, 1e-6, 0.0),
    "μmol": (Dimension.AMOUNT_OF_SUBSTANCE, 1e-6, 0.0),
    "umol": (Dimension.AMOUNT_OF_SUBSTANCE, 1e-6, 0.0),
    "mol/l": (Dimension.CONCENTRATION, 1.0, 0.0),
    "pa": (Dimension.PRESSURE, 1.0, 0.0),
    "kpa": (Dimension.PRESSURE, 1e3, 0.0),
    "bar": (Dimension.PRESSURE, 1e5, 0.0),
    "mbar": (Dimension.PRESSURE, 1e2, 0.0),
    "atm": (Dimension.PRESSURE, 101325.0, 0.0),
}

# qualitative phrase -> tag; looked up on whitespace-collapsed lowercase text
QUALITATIVE_TAGS: Mapping[str, str] = {
    "room temperature": "room-temperature",
    "ambient temperature": "room-temperature",
    "r.t.": "room-temperature",
    "overnight": "overnight",
    "reflux": "reflux",
    "under reflux": "reflux",
    "dropwise": "dropwise",
    "under vacuum": "vacuum",
    "in vacuo": "vacuum",
}


@dataclass(frozen=True)
class Quantity:
    """Parsed numeric or qualitative descriptor.

    Exactly one of (value, unit) or qualitative_tag is present; unit "" is
    the canonical symbol for dimensionless values.
    """

    dimension: Dimension
    original: str
    value: float | None = None
    unit: str | None = None
    qualitative_tag: str | None = None
    value_range: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        numeric = self.value is not None and self.unit is not None
        qualitative = self.qualitative_tag is not None
        if numeric == qualitative:
            raise ValueError("Quantity needs exactly one of (value+unit) or qualitative_tag")


_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)"
_RANGE_SEP = r"(?:\s*[–—-]\s*|\s+to\s+)"
_QTY_FULL_RX = re.compile(
    rf"(?P<a>{_NUM})(?:(?P<sep>{_RANGE_SEP})(?P<b>{_NUM}))?(?:\s*(?P<unit>\S+))?$"
)


def _lookup_unit(token: str) -> tuple[Dimension, float, float] | None:
    token = token.rstrip(".,;:")
    if token in _UNITS_CASE_SENSITIVE:
        return _UNITS_CASE_SENSITIVE[token]
    return _UNITS_CASE_INSENSITIVE.get(token.lower())


def parse_quantity(s: str) -> Quantity:
    """Parse a descriptor string into a canonical Quantity.

    Numbers may be single values or ranges ("100–120 °C" keeps the range
    and stores the midpoint); units normalize to the canonical symbol of
    their dimension; qualitative phrases come from a fixed table.
    """
    collapsed = re.sub(r"\s+", " ", s.strip())
    tag = QUALITATIVE_TAGS.get(collapsed.lower())
    if tag is not None:
        return Quantity(dimension=Dimension.QUALITATIVE, original=s, qualitative_tag=tag)
    m = _QTY_FULL_RX.fullmatch(collapsed)
    if not m:
        raise UnparseableQuantity(f"not a quantity: {s!r}")
    lo = float(m.group("a"))
    hi = float(m.group("b")) if m.group("b") is not None else None
    unit_token = m.group("unit")
    if unit_token is None:
        dim, scale, offset = Dimension.DIMENSIONLESS, 1.0, 0.0
    else:
        found = _lookup_unit(unit_token)
        if found is None:
            raise UnparseableQuantity(f"unknown unit {unit_token!r} in {s!r}")
        dim, scale, offset = found
    canon = CANONICAL_UNITS[dim]
    if hi is None:
        return Quantity(dimension=dim, original=s, value=lo * scale + offset, unit=canon)
    c_lo, c_hi = lo * scale + offset, hi * scale + offset
    return Quantity(
        dimension=dim,
        original=s,
        value=(c_lo + c_hi) / 2.0,
        unit=canon,
        value_range=(c_lo, c_hi),
    )


def _unit_alternation() -> str:
    cs = sorted(_UNITS_CASE_SENSITIVE, key=len, reverse=True)
    ci = sorted(_UNITS_CASE_INSENSITIVE, key=len, reverse=True)
    return "|".join(re.escape(u) for u in cs) + "|(?i:" + "|".join(re.escape(u) for u in ci) + ")"


_SCAN_QTY_RX = re.compile(
    rf"(?<![\w.\-])(?:{_NUM})(?:{_RANGE_SEP}(?:{_NUM}))?\s*(?:{_unit_alternation()})(?![\w/])"
)

_SCAN_QUAL_RX = re.compile(
    "(?<![A-Za-z0-9])(?:"
    + "|".join(re.escape(p) for p in sorted(QUALITATIVE_TAGS, key=len, reverse=True))
    + ")(?![A-Za-z0-9])",
    re.IGNORECASE,
)


def find_quantity_spans(text: str) -> list[tuple[int, int]]:
    """Character ranges of parseable quantity expressions in running text."""
    hits = [(m.start(), m.end()) for m in _SCAN_QTY_RX.finditer(text)]
    hits += [(m.start(), m.end()) for m in _SCAN_QUAL_RX.finditer(text)]
    out = []
    for start, end in hits:
        try:
            parse_quantity(text[start:end])
        except UnparseableQuantity:
            continue
        out.append((start, end))
    return sorted(out)


# ----------------------------------------------------------------------
# Chemical formulas and MOF codes
# ----------------------------------------------------------------------

ELEMENTS = frozenset(
    """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co
    Ni Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te
    I Xe Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir
    Pt Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No
    Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og""".split()
)

_NONMETALS = frozenset(
    """H He B C N O F Ne Si P S Cl Ar Ge As Se Br Kr Sb Te I Xe At Rn Ts Og""".split()
)

METALS = ELEMENTS - _NONMETALS

_ELEMENT_TOKEN_RX = re.compile(r"[A-Z][a-z]?")


def _consume_group(s: str, i: int, counts: list[int]) -> int | None:
    """Parse element/group sequence starting at s[i]; return end index or None."""
    opener = s[i]
    closer = ")" if opener == "(" else "]"
    i += 1
    found = False
    while i < len(s) and s[i] != closer:
        step = _consume_unit(s, i, counts)
        if step is None:
            return None
        i = step
        found = True
    if i >= len(s) or not found:
        return None
    i += 1  # closer
    while i < len(s) and s[i].isdigit():
        i += 1
    return i


def _consume_unit(s: str, i: int, counts: list[int]) -> int | None:
    if s[i] in "([":
        return _consume_group(s, i, counts)
    m = _ELEMENT_TOKEN_RX.match(s, i)
    if not m or m.group() not in ELEMENTS:
        return None
    counts.append(1)
    i = m.end()
    while i < len(s) and s[i].isdigit():
        i += 1
    return i


def match_chemical_formula(s: str) -> bool:
    """True iff s is a chemical formula: element symbols with optional
    subscripts, parenthesized groups, hydrate dots, trailing charge marks.

    Bare single-element words without digits ("In", "He") are rejected to
    keep ordinary prose out.
    """
    if not s or not (s[0].isupper() or s[0] in "(["):
        return False
    body = s
    # optional trailing charge: "2+", "+", "3-"
    charge = re.search(r"\d*[+\-−]$", body)
    if charge:
        body = body[: charge.start()]
    if not body:
        return False
    element_count = 0
    for segment in re.split(r"[·.]", body):
        if not segment:
            return False
        # hydrate coefficient: "·6H2O" -> "6H2O"
        segment = re.sub(r"^\d+", "", segment)
        if not segment:
            return False
        i = 0
        counts: list[int] = []
        while i < len(segment):
            step = _consume_unit(segment, i, counts)
            if step is None:
                return False
            i = step
        element_count += len(counts)
    if element_count == 0:
        return False
    has_digit = any(c.isdigit() for c in s)
    return has_digit or element_count >= 2


def formula_elements(s: str) -> set[str]:
    """Element symbols appearing in a string that passed match_chemical_formula."""
    return {m.group() for m in _ELEMENT_TOKEN_RX.finditer(s) if m.group() in ELEMENTS}


# ----------------------------------------------------------------------
# Gazetteers
# ----------------------------------------------------------------------

WORD_BOUNDARY = "word-boundary"
FORMULA_PATTERN = "formula-pattern"


@dataclass(frozen=True)
class Gazetteer:
    etype: EntityType
    entries: frozenset[str]
    match_policy: str = WORD_BOUNDARY

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError(f"empty gazetteer for {self.etype}")
        if self.match_policy == WORD_BOUNDARY:
            folded = {e.casefold() for e in self.entries}
            if len(folded) != len(self.entries):
                raise ValueError(f"case-duplicate entries in {self.etype} gazetteer")


def _verb_variants(base: str) -> set[str]:
    """Inflected forms of an action verb. Over-generates on purpose:
    forms that are not real words never occur in text, so they cost nothing."""
    forms = {base, base + "s", base + "es"}
    if base.endswith("y") and len(base) > 2 and base[-2] not in "aeiou":
        stem = base[:-1]
        forms |= {stem + "ies", stem + "ied", base + "ing"}
        return forms
    if base.endswith("e"):
        forms |= {base + "d", base[:-1] + "ing", base + "ing"}
        return forms
    forms |= {base + "ed", base + "ing"}
    if (
        len(base) >= 3
        and base[-1] not in "aeiouwxy"
        and base[-2] in "aeiou"
        and base[-3] not in "aeiou"
    ):
        forms |= {base + base[-1] + "ed", base + base[-1] + "ing"}
    return forms


def load_gazetteer(path: str | Path, etype: EntityType,
                   match_policy: str = WORD_BOUNDARY) -> Gazetteer:
    """Read a one-entry-per-line gazetteer file ('#' comments allowed)."""
    p = Path(path)
    try:
        lines = p.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise FileUnreadable(f"cannot read gazetteer {p}: {exc}") from exc
    entries = {ln.strip() for ln in lines if ln.strip() and not ln.lstrip().startswith("#")}
    return Gazetteer(etype=etype, entries=frozenset(entries), match_policy=match_policy)


_BUNDLED_FILES: tuple[tuple[str, EntityType, str], ...] = (
    ("actions.txt", EntityType.SYNTHESIS_ACTION, WORD_BOUNDARY),
    ("solvents.txt", EntityType.SOLVENT_PRECURSOR, WORD_BOUNDARY),
    ("acids.txt", EntityType.ACID, WORD_BOUNDARY),
    ("vessels.txt", EntityType.VESSEL, WORD_BOUNDARY),
    ("metal_sources.txt", EntityType.METAL_PRECURSOR, WORD_BOUNDARY),
    ("organic_linkers.txt", EntityType.ORGANIC_PRECURSOR, WORD_BOUNDARY),
    ("mof_prefixes.txt", EntityType.MOF_COMPOSITION, FORMULA_PATTERN),
)


def default_gazetteers() -> tuple[Gazetteer, ...]:
    """The bundled starter gazetteers."""
    out = []
    base = resources.files("mofcodex").joinpath("data/gazetteers")
    for name, etype, policy in _BUNDLED_FILES:
        with resources.as_file(base / name) as p:
            out.append(load_gazetteer(p, etype, policy))
    return tuple(out)


def load_gazetteer_dir(directory: str | Path) -> tuple[Gazetteer, ...]:
    """Load gazetteers from a directory using the bundled file-name map."""
    d = Path(directory)
    out = []
    for name, etype, policy in _BUNDLED_FILES:
        p = d / name
        if p.exists():
            out.append(load_gazetteer(p, etype, policy))
    if not out:
        raise FileUnreadable(f"no gazetteer files found in {d}")
    return tuple(out)


# ----------------------------------------------------------------------
# Span extraction
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class EntitySpan:
    span_id: str
    start: int
    end: int
    surface: str
    etype: EntityType
    confidence: float = 1.0
    provenance: str = "rule"


# tie-break order when equal-length candidates overlap
TYPE_PRIORITY: tuple[EntityType, ...] = (
    EntityType.DESCRIPTOR,
    EntityType.METAL_PRECURSOR,
    EntityType.ORGANIC_PRECURSOR,
    EntityType.SOLVENT_PRECURSOR,
    EntityType.ACID,
    EntityType.VESSEL,
    EntityType.SYNTHESIS_ACTION,
    EntityType.MOF_COMPOSITION,
    EntityType.PRECURSOR,
)
_PRIORITY_INDEX = {t: i for i, t in enumerate(TYPE_PRIORITY)}


@dataclass(frozen=True)
class ExtractorConfig:
    match_quantities: bool = True
    match_formulas: bool = True
    match_mof_codes: bool = True


def _gazetteer_regex(gaz: Gazetteer) -> re.Pattern:
    entries = gaz.entries
    if gaz.etype is EntityType.SYNTHESIS_ACTION:
        expanded: set[str] = set()
        for e in entries:
            expanded |= _verb_variants(e.lower())
        entries = frozenset(expanded)
    alternation = "|".join(
        re.escape(e).replace(r"\ ", r"\s+") for e in sorted(entries, key=len, reverse=True)
    )
    return re.compile(rf"(?<![A-Za-z0-9])(?:{alternation})(?![A-Za-z0-9])", re.IGNORECASE)


_GAZ_RX_CACHE: dict[tuple[EntityType, frozenset[str]], re.Pattern] = {}


def iter_gazetteer_matches(text: str, gaz: Gazetteer) -> Iterator[tuple[int, int]]:
    key = (gaz.etype, gaz.entries)
    rx = _GAZ_RX_CACHE.get(key)
    if rx is None:
        rx = _GAZ_RX_CACHE[key] = _gazetteer_regex(gaz)
    for m in rx.finditer(text):
        yield m.start(), m.end()


def _mof_code_regex(prefixes: Iterable[str]) -> re.Pattern:
    alternation = "|".join(re.escape(p) for p in sorted(prefixes, key=len, reverse=True))
    return re.compile(rf"(?<![\w\-])(?:{alternation})-\d+(?:\([A-Za-z0-9]{{1,6}}\))?(?![\w\-])")


_FORMULA_TOKEN_RX = re.compile(r"[A-Za-z0-9(\[][A-Za-z0-9()\[\]·.+\-]*")


def find_formula_spans(text: str) -> list[tuple[int, int, bool]]:
    """(start, end, contains_metal) for chemical-formula tokens in text."""
    out = []
    for m in _FORMULA_TOKEN_RX.finditer(text):
        token = m.group()
        end = m.end()
        trimmed = token.rstrip(".,;:-")
        end -= len(token) - len(trimmed)
        if not trimmed or not match_chemical_formula(trimmed):
            continue
        out.append((m.start(), end, bool(formula_elements(trimmed) & METALS)))
    return out


def extract_entities(
    p: Paragraph,
    gazetteers: Sequence[Gazetteer] | None = None,
    config: ExtractorConfig | None = None,
) -> list[EntitySpan]:
    """Recognize entity spans in one paragraph.

    Returns non-overlapping spans sorted by start offset. Overlaps resolve
    longest-match-first, then leftmost, then by TYPE_PRIORITY.
    """
    if gazetteers is None:
        gazetteers = default_gazetteers()
    if config is None:
        config = ExtractorConfig()
    text = p.text
    candidates: set[tuple[int, int, EntityType]] = set()

    mof_prefixes: set[str] = set()
    for gaz in gazetteers:
        if gaz.match_policy == FORMULA_PATTERN:
            mof_prefixes |= set(gaz.entries)
            continue
        for start, end in iter_gazetteer_matches(text, gaz):
            candidates.add((start, end, gaz.etype))

    if config.match_quantities:
        for start, end in find_quantity_spans(text):
            candidates.add((start, end, EntityType.DESCRIPTOR))

    if config.match_formulas:
        for start, end, has_metal in find_formula_spans(text):
            etype = EntityType.METAL_PRECURSOR if has_metal else EntityType.PRECURSOR
            candidates.add((start, end, etype))

    if config.match_mof_codes and mof_prefixes:
        for m in _mof_code_regex(mof_prefixes).finditer(text):
            candidates.add((m.start(), m.end(), EntityType.MOF_COMPOSITION))

    chosen = _resolve_overlaps(candidates)
    return [
        EntitySpan(
            span_id=f"s{i}",
            start=start,
            end=end,
            surface=text[start:end],
            etype=etype,
        )
        for i, (start, end, etype) in enumerate(chosen)
    ]


def _resolve_overlaps(
    candidates: Iterable[tuple[int, int, EntityType]]
) -> list[tuple[int, int, EntityType]]:
    ranked = sorted(
        candidates,
        key=lambda c: (-(c[1] - c[0]), c[0], _PRIORITY_INDEX[c[2]]),
    )
    taken: list[tuple[int, int, EntityType]] = []
    for start, end, etype in ranked:
        if any(start < t_end and t_start < end for t_start, t_end, _ in taken):
            continue
        taken.append((start, end, etype))
    return sorted(taken, key=lambda c: c[0])


def validate_span(span: EntitySpan, text: str) -> list[str]:
    """Problems with a span relative to its paragraph text ([] when fine)."""
    problems = []
    if not (0 <= span.start < span.end <= len(text)):
        problems.append(
            f"span {span.span_id}: offsets [{span.start},{span.end}) out of bounds for text of length {len(text)}"
        )
    elif text[span.start : span.end] != span.surface:
        problems.append(
            f"span {span.span_id}: surface {span.surface!r} != text slice {text[span.start:span.end]!r}"
        )
    if not (0.0 <= span.confidence <= 1.0):
        problems.append(f"span {span.span_id}: confidence {span.confidence} outside [0,1]")
    return problems


# ----------------------------------------------------------------------
# External-model extraction
# ----------------------------------------------------------------------


@dataclass
class ExternalExtraction:
    spans: list[EntitySpan] = field(default_factory=list)
    reports: list[str] = field(default_factory=list)


def parse_external_completion(text: str, completion: str) -> ExternalExtraction:
    """Parse a completion of ``<surface> TAB <type-label>`` lines into spans.

    Each surface is located at its first occurrence not already consumed by
    an earlier line; unlocatable surfaces and unknown labels are reported,
    never silently dropped.
    """
    result = ExternalExtraction()
    consumed: list[tuple[int, int]] = []
    accepted: list[tuple[int, int, EntityType]] = []
    for lineno, line in enumerate(completion.splitlines(), start=1):
        if not line.strip():
            continue
        if "\t" not in line:
            raise MalformedCompletion(f"completion line {lineno} has no TAB separator: {line!r}")
        surface, _, label = line.partition("\t")
        surface = surface.strip()
        label = label.strip()
        if not surface or not label:
            raise MalformedCompletion(f"completion line {lineno} missing surface or label")
        try:
            etype = resolve_entity_type(label)
        except UnknownEntityType:
            result.reports.append(f"line {lineno}: unknown label {label!r}")
            continue
        pos = _find_unconsumed(text, surface, consumed)
        if pos is None:
            result.reports.append(f"line {lineno}: surface {surface!r} not found in paragraph")
            continue
        consumed.append((pos, pos + len(surface)))
        accepted.append((pos, pos + len(surface), etype))
    accepted.sort(key=lambda c: c[0])
    result.spans = [
        EntitySpan(
            span_id=f"s{i}",
            start=start,
            end=end,
            surface=text[start:end],
            etype=etype,
            provenance="external-model",
        )
        for i, (start, end, etype) in enumerate(accepted)
    ]
    return result


def _find_unconsumed(text: str, surface: str, consumed: list[tuple[int, int]]) -> int | None:
    idx = 0
    while True:
        i = text.find(surface, idx)
        if i < 0:
            return None
        end = i + len(surface)
        if not any(i < c_end and c_start < end for c_start, c_end in consumed):
            return i
        idx = i + 1


def extract_external(p: Paragraph, template, client) -> ExternalExtraction:
    """Run the external completion client with an NER prompt template.

    Raises TransportError (propagated from the client) or
    MalformedCompletion; otherwise returns located spans plus reports.
    """
    from .classify import render_prompt  # local import: avoids cycle at module load

    prompt = render_prompt(template, p)
    completion = client.complete(prompt)
    return parse_external_completion(p.text, completion)
