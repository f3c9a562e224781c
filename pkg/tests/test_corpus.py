import pytest
from hypothesis import given
from hypothesis import strategies as st

from mofcodex import corpus
from mofcodex.corpus import ArticleDocument
from mofcodex.errors import ArticleFormatError, FileUnreadable, MalformedDoi


def test_normalize_doi_strips_resolver_and_lowercases():
    assert corpus.normalize_doi("https://doi.org/10.1021/JA0001") == "10.1021/ja0001"
    assert corpus.normalize_doi("doi:10.1021/ja0001") == "10.1021/ja0001"
    assert corpus.normalize_doi("  10.1021/ja0001 ") == "10.1021/ja0001"


def test_normalize_doi_identity_on_canonical():
    assert corpus.normalize_doi("10.1021/ja0001") == "10.1021/ja0001"


@pytest.mark.parametrize("bad", ["not-a-doi", "", "11.1021/x", "10.1021", "doi:"])
def test_normalize_doi_rejects(bad):
    with pytest.raises(MalformedDoi):
        corpus.normalize_doi(bad)


@given(st.sampled_from([
    "10.1021/ja0001", "https://doi.org/10.1021/JA0001", "DOI: 10.5555/A.B-1",
    "http://dx.doi.org/10.999/zz(1)x",
]))
def test_normalize_doi_idempotent(raw):
    once = corpus.normalize_doi(raw)
    assert corpus.normalize_doi(once) == once


def test_load_doi_list_dedup_and_comments(tmp_path):
    f = tmp_path / "dois.txt"
    f.write_text("# header\n10.1021/ja0001\n10.1021/JA0001\n10.5555/x1\n", encoding="utf-8")
    dois, warnings = corpus.load_doi_list(f)
    assert dois == {"10.1021/ja0001", "10.5555/x1"}
    assert warnings == []


def test_load_doi_list_empty(tmp_path):
    f = tmp_path / "dois.txt"
    f.write_text("", encoding="utf-8")
    dois, warnings = corpus.load_doi_list(f)
    assert dois == set()
    assert warnings == []


def test_load_doi_list_reports_malformed_line(tmp_path):
    f = tmp_path / "dois.txt"
    f.write_text("10.1021/ja0001\nnot-a-doi\n", encoding="utf-8")
    dois, warnings = corpus.load_doi_list(f)
    assert len(dois) == 1
    assert len(warnings) == 1
    assert "2" in warnings[0]  # line number


def test_load_doi_list_unreadable(tmp_path):
    with pytest.raises(FileUnreadable):
        corpus.load_doi_list(tmp_path / "absent.txt")


def _doc(doi, body=""):
    return ArticleDocument(doi=doi, title="t", body=body)


def test_filter_by_doi_keeps_members_in_order():
    articles = [_doc(f"10.1/{i}") for i in range(5)]
    reference = {"10.1/1", "10.1/3"}
    kept = corpus.filter_by_doi(articles, reference)
    assert [a.doi for a in kept] == ["10.1/1", "10.1/3"]


def test_filter_by_doi_empty_reference():
    assert corpus.filter_by_doi([_doc("10.1/0")], set()) == []


def test_filter_by_doi_identity_when_all_match():
    articles = [_doc(f"10.1/{i}") for i in range(3)]
    assert corpus.filter_by_doi(articles, {a.doi for a in articles}) == articles


def test_filter_by_doi_idempotent():
    articles = [_doc(f"10.1/{i}") for i in range(6)]
    reference = {"10.1/0", "10.1/4", "10.1/5"}
    once = corpus.filter_by_doi(articles, reference)
    assert corpus.filter_by_doi(once, reference) == once
    assert all(a in articles for a in once)


def test_segment_paragraphs_blank_line_split():
    doc = _doc("10.1/a", body="A\n\nB")
    paras = corpus.segment_paragraphs(doc)
    assert [(p.index, p.text) for p in paras] == [(0, "A"), (1, "B")]


def test_segment_paragraphs_single_segment():
    paras = corpus.segment_paragraphs(_doc("10.1/a", body="A"))
    assert [(p.index, p.text) for p in paras] == [(0, "A")]


def test_segment_paragraphs_collapses_repeated_blank_lines():
    paras = corpus.segment_paragraphs(_doc("10.1/a", body="A\n\n\n\nB"))
    assert len(paras) == 2


@given(st.lists(st.text(alphabet="ab \n", max_size=30), max_size=6))
def test_segment_paragraphs_indices_dense_and_reconstruct(segments):
    body = "\n\n".join(segments)
    paras = corpus.segment_paragraphs(_doc("10.1/a", body=body))
    assert [p.index for p in paras] == list(range(len(paras)))
    for p in paras:
        assert p.text == p.text.strip()
        assert "\n" not in p.text
    # joining reconstructs the normalized body
    import re
    normalized = [re.sub(r"\s+", " ", s).strip() for s in re.split(r"\n\s*\n", body)]
    normalized = [s for s in normalized if s]
    assert [p.text for p in paras] == normalized


def test_read_article_front_matter(tmp_path):
    f = tmp_path / "a.txt"
    f.write_text("doi: https://doi.org/10.1021/JA77\ntitle: Hello\n\nBody one.\n\nBody two.\n",
                 encoding="utf-8")
    doc = corpus.read_article(f)
    assert doc.doi == "10.1021/ja77"
    assert doc.title == "Hello"
    assert len(corpus.segment_paragraphs(doc)) == 2


def test_read_article_missing_doi(tmp_path):
    f = tmp_path / "a.txt"
    f.write_text("title: Hello\n\nBody.\n", encoding="utf-8")
    with pytest.raises(ArticleFormatError):
        corpus.read_article(f)


def test_iter_article_paths_sorted(tmp_path):
    (tmp_path / "b.txt").write_text("x", encoding="utf-8")
    (tmp_path / "a.txt").write_text("x", encoding="utf-8")
    names = [p.name for p in corpus.iter_article_paths(tmp_path)]
    assert names == ["a.txt", "b.txt"]
    with pytest.raises(FileUnreadable):
        list(corpus.iter_article_paths(tmp_path / "nope"))
