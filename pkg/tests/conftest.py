import pytest

from citebench import synthetic
from citebench.corpus import Article, build_citation_graph, prefilter


def make_article(ident, *, title="a plain title", abstract="an abstract long enough to pass filters",
                 year=2015, fields=(), cites=()):
    return Article(ident, title, abstract, year, frozenset(fields), frozenset(cites))


@pytest.fixture(scope="session")
def synth_prefiltered():
    """Prefiltered 3k-article synthetic corpus with its citation graph."""
    corpus = synthetic.generate_corpus(3000, seed=7)
    graph = build_citation_graph(corpus)
    kept = prefilter(corpus, graph).corpus
    return kept, build_citation_graph(kept)


@pytest.fixture(scope="session")
def synth10k():
    """Prefiltered 10k-article synthetic corpus (acceptance scale)."""
    corpus = synthetic.generate_corpus(10_000, seed=42)
    graph = build_citation_graph(corpus)
    kept = prefilter(corpus, graph).corpus
    return kept, build_citation_graph(kept)
