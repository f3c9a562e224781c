import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mofcodex import extract
from mofcodex.corpus import Paragraph
from mofcodex.errors import MalformedCompletion, UnparseableQuantity
from mofcodex.extract import (
    Dimension,
    Gazetteer,
    extract_entities,
    match_chemical_formula,
    parse_quantity,
)
from mofcodex.schema import EntityType


def _p(text, doi="10.5555/t1", index=0):
    return Paragraph(doi=doi, index=index, text=text)


# ----------------------------------------------------------------------
# quantities
# ----------------------------------------------------------------------


def test_parse_quantity_duration():
    q = parse_quantity("2 hours")
    assert q.dimension is Dimension.DURATION
    assert q.value == 2 * 3600
    assert q.unit == "s"
    assert q.original == "2 hours"


def test_parse_quantity_room_temperature():
    q = parse_quantity("room temperature")
    assert q.dimension is Dimension.QUALITATIVE
    assert q.qualitative_tag == "room-temperature"
    assert q.value is None and q.unit is None


def test_parse_quantity_zero_volume():
    q = parse_quantity("0 mL")
    assert (q.value, q.unit, q.dimension) == (0.0, "L", Dimension.VOLUME)


def test_parse_quantity_rejects_nonsense():
    with pytest.raises(UnparseableQuantity):
        parse_quantity("banana")
    with pytest.raises(UnparseableQuantity):
        parse_quantity("12 bananas")


def test_unit_conversions_exact():
    assert parse_quantity("25 °C").value == 25 + 273.15
    assert parse_quantity("1 h").value == 3600.0
    assert parse_quantity("1 mmol").value == 0.001
    assert parse_quantity("1 atm").value == 101325.0
    assert parse_quantity("500 mg").value == 0.5
    assert parse_quantity("250 µL").value == 250e-6


def test_parse_quantity_range_midpoint():
    q = parse_quantity("100–120 °C")
    assert q.value == pytest.approx((373.15 + 393.15) / 2, abs=0)
    assert q.value_range == (100 + 273.15, 120 + 273.15)


def test_parse_quantity_reparse_stability():
    for s in ["2 hours", "0.5 M", "room temperature", "100-120 °C", "3 days", "7"]:
        q = parse_quantity(s)
        assert parse_quantity(q.original) == q


@given(
    st.integers(min_value=0, max_value=10_000),
    st.sampled_from(["°C", "K", "h", "min", "s", "g", "mg", "mL", "L", "mmol", "mol", "bar", "atm", "M"]),
)
def test_parse_quantity_number_unit_roundtrip(n, unit):
    s = f"{n} {unit}"
    q = parse_quantity(s)
    assert q.dimension is not Dimension.QUALITATIVE
    assert parse_quantity(q.original) == q


def test_dimensionless_bare_number():
    q = parse_quantity("7")
    assert q.dimension is Dimension.DIMENSIONLESS
    assert q.unit == "" and q.value == 7.0


# ----------------------------------------------------------------------
# formulas
# ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "s,expected",
    [
        ("Zn(NO3)2·6H2O", True),
        ("H2O", True),
        ("and", False),
        ("HCl", True),
        ("ZrCl4", True),
        ("In", False),  # bare single element reads as prose
        ("He", False),
        ("CuSO4", True),
        ("[Cu(H2O)4]2+", True),
        ("Al(NO3)3·9H2O", True),
        ("DMF", False),  # D is not an element symbol here
        ("MOF-5", False),  # codes are not formulas
        ("the", False),
        ("", False),
    ],
)
def test_match_chemical_formula(s, expected):
    assert match_chemical_formula(s) is expected


def test_formula_elements_metal_detection():
    assert extract.formula_elements("Zn(NO3)2·6H2O") & extract.METALS
    assert not (extract.formula_elements("H2O") & extract.METALS)


# ----------------------------------------------------------------------
# gazetteers and extraction
# ----------------------------------------------------------------------


def test_verb_variants_cover_common_inflections():
    v = extract._verb_variants("ultrasonicate")
    assert {"ultrasonicate", "ultrasonicated", "ultrasonicating"} <= v
    assert {"dry", "dried", "dries", "drying"} <= extract._verb_variants("dry")
    assert {"stir", "stirred", "stirring"} <= extract._verb_variants("stir")
    assert "washed" in extract._verb_variants("wash")


def test_load_gazetteer_skips_comments(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("# comment\nvial\n\nautoclave\n", encoding="utf-8")
    g = extract.load_gazetteer(f, EntityType.VESSEL)
    assert g.entries == frozenset({"vial", "autoclave"})


def test_empty_gazetteer_rejected():
    with pytest.raises(ValueError):
        Gazetteer(etype=EntityType.VESSEL, entries=frozenset())


def test_extract_canonical_action_and_descriptor():
    spans = extract_entities(_p("The mixture was ultrasonicated for 2 hours."))
    got = [(s.surface, s.etype) for s in spans]
    assert ("ultrasonicated", EntityType.SYNTHESIS_ACTION) in got
    assert ("2 hours", EntityType.DESCRIPTOR) in got


def test_extract_no_cues_yields_nothing():
    assert extract_entities(_p("hello")) == []


def test_extract_typed_spans_from_gazetteers():
    spans = extract_entities(_p("dissolved in DMF in a Teflon-lined autoclave with HCl"))
    types = {s.surface: s.etype for s in spans}
    assert types["dissolved"] is EntityType.SYNTHESIS_ACTION
    assert types["DMF"] is EntityType.SOLVENT_PRECURSOR
    assert types["Teflon-lined autoclave"] is EntityType.VESSEL
    assert types["HCl"] is EntityType.ACID


def test_extract_metal_formula_and_mof_code():
    spans = extract_entities(_p("Zn(NO3)2·6H2O gave MOF-5 and also MIL-53(Al) formed."))
    types = {s.surface: s.etype for s in spans}
    assert types["Zn(NO3)2·6H2O"] is EntityType.METAL_PRECURSOR
    assert types["MOF-5"] is EntityType.MOF_COMPOSITION
    assert types["MIL-53(Al)"] is EntityType.MOF_COMPOSITION


def test_extract_plain_formula_without_metal_is_precursor():
    spans = extract_entities(_p("The vial contained NH4F as mineralizer."))
    types = {s.surface: s.etype for s in spans}
    assert types["NH4F"] is EntityType.PRECURSOR


def test_extract_longest_match_wins():
    spans = extract_entities(_p("heated under reflux in a Teflon-lined autoclave"))
    surfaces = {s.surface for s in spans}
    assert "under reflux" in surfaces
    assert "reflux" not in surfaces
    assert "Teflon-lined autoclave" in surfaces
    assert "autoclave" not in surfaces


def test_extract_deterministic():
    p = _p("Zn(NO3)2·6H2O was dissolved in DMF at 120 °C for 24 h in an autoclave to give MOF-5.")
    a = extract_entities(p)
    b = extract_entities(p)
    assert a == b


_WORDS = st.sampled_from(
    ["the", "mixture", "was", "heated", "stirred", "DMF", "water", "autoclave",
     "vial", "2 hours", "120 °C", "room temperature", "Zn(NO3)2·6H2O", "HCl",
     "MOF-5", "cooled", "overnight", "and", "then", "slowly", "hello."]
)


@settings(max_examples=60, deadline=None)
@given(st.lists(_WORDS, min_size=1, max_size=25))
def test_extract_spans_sorted_nonoverlapping_inbounds(words):
    text = " ".join(words)
    spans = extract_entities(_p(text))
    prev_end = 0
    for s in spans:
        assert 0 <= s.start < s.end <= len(text)
        assert s.start >= prev_end
        prev_end = s.end
        assert text[s.start : s.end] == s.surface


# ----------------------------------------------------------------------
# external completion parsing
# ----------------------------------------------------------------------


def test_parse_external_completion_locates_offsets():
    text = "The mixture was ultrasonicated for 2 hours."
    result = extract.parse_external_completion(text, "ultrasonicated\tsynthesis action\n")
    assert len(result.spans) == 1
    s = result.spans[0]
    assert (s.start, s.end) == (text.index("ultrasonicated"), text.index("ultrasonicated") + len("ultrasonicated"))
    assert s.etype is EntityType.SYNTHESIS_ACTION
    assert s.provenance == "external-model"
    assert result.reports == []


def test_parse_external_completion_reports_absent_surface():
    result = extract.parse_external_completion("nothing here", "ultrasonicated\tSynthesisAction")
    assert result.spans == []
    assert len(result.reports) == 1
    assert "not found" in result.reports[0]


def test_parse_external_completion_reports_unknown_label():
    result = extract.parse_external_completion("some text", "some\tpressure cooker")
    assert result.spans == []
    assert len(result.reports) == 1
    assert "unknown label" in result.reports[0]


def test_parse_external_completion_requires_tab():
    with pytest.raises(MalformedCompletion):
        extract.parse_external_completion("abc", "no separator line")


def test_parse_external_completion_first_unconsumed_occurrence():
    text = "washed then washed again"
    result = extract.parse_external_completion(
        text, "washed\tSynthesisAction\nwashed\tSynthesisAction"
    )
    assert [s.start for s in result.spans] == [0, 12]
