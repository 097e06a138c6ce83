import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gentnow import sentiment, textprep

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def lexicon():
    return sentiment.load_lexicon()


@pytest.fixture(scope="session")
def dictionary():
    return textprep.LocationDictionary.default()


def make_disjoint_corpus(n_groups, n_docs, vocab_per=6, doc_len=15, seed=0,
                         prefix="g"):
    """Docs drawn from one of ``n_groups`` disjoint vocabularies, round-robin."""
    rng = np.random.default_rng(seed)
    vocabs = [[f"{prefix}{g}w{i}" for i in range(vocab_per)] for g in range(n_groups)]
    docs = []
    for d in range(n_docs):
        v = vocabs[d % n_groups]
        docs.append([v[rng.integers(vocab_per)] for _ in range(doc_len)])
    return docs, vocabs


@pytest.fixture(scope="session")
def two_topic_corpus():
    return make_disjoint_corpus(2, 60, vocab_per=6, doc_len=20, seed=1)
