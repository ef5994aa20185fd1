# -*- coding: utf-8 -*-

import pytest

from propclass.corpus import CorpusConfig, Proposal, generate_corpus
from propclass.idgraph import build_graph, collect_topic_stats
from propclass.taxonomy import load_taxonomy, synthetic_taxonomy

SMALL_TAXONOMY = dict(
    depth=3,
    nodes=[
        dict(code="C", level=1),
        dict(code="C09", level=2),
        dict(code="F", level=1),
        dict(code="F06", level=2),
        dict(code="F0601", level=3),
        dict(code="F0602", level=3),
    ],
)


def make_proposal(id, labels, keywords=("alpha", "beta"), text="deep mining algorithm"):
    return Proposal(id, text, list(keywords), text, text, labels)


@pytest.fixture(scope="session")
def small_taxonomy():
    return load_taxonomy(SMALL_TAXONOMY)


@pytest.fixture(scope="session")
def fixture_taxonomy():
    return synthetic_taxonomy(letters=2, branching=3, depth=4)


@pytest.fixture(scope="session")
def micro_taxonomy():
    return synthetic_taxonomy(letters=2, branching=2, depth=3)


@pytest.fixture(scope="session")
def micro_corpus(micro_taxonomy):
    cfg = CorpusConfig(seed=3, size=24, vocab_per_discipline=6, keyword_count=3, interdisciplinary_rate=0.25)
    return generate_corpus(micro_taxonomy, cfg)


@pytest.fixture(scope="session")
def micro_graph(micro_corpus, micro_taxonomy):
    return build_graph(collect_topic_stats(micro_corpus, micro_taxonomy))
