import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import (  # noqa: E402
    GoldParagraph,
    gold_to_annotated,
    parse_markup,
    write_doi_list,
    write_fixture_articles,
)


@pytest.fixture(scope="session")
def gold_corpus() -> list[GoldParagraph]:
    return parse_markup()


@pytest.fixture(scope="session")
def gold_annotated(gold_corpus):
    return {gp.key: gold_to_annotated(gp) for gp in gold_corpus}


@pytest.fixture()
def articles_dir(tmp_path, gold_corpus):
    return write_fixture_articles(tmp_path / "articles", gold_corpus)


@pytest.fixture()
def doi_list_file(tmp_path, gold_corpus):
    dois = sorted({gp.doi for gp in gold_corpus})
    return write_doi_list(tmp_path / "mof_dois.txt", dois)
