import csv
from pathlib import Path

import pytest

from tempoprune.corpus import Corpus, Document
from tempoprune.index import build_index
from tempoprune.synth import random_corpus, two_burst_corpus, two_burst_queries
from tempoprune.timewindows import TimeWindow

DATA_DIR = Path(__file__).parent / "data"

# Mirrors tests/data/gen_baseline_oracle.py; regenerate the CSV when touching this.
TOY5_TOKENS = {
    "d1": ["apple", "apple", "banana", "cherry"],
    "d2": ["apple", "banana", "banana", "durian"],
    "d3": ["apple", "apple", "cherry", "cherry"],
    "d4": ["banana", "durian", "durian", "elderberry"],
    "d5": ["apple", "banana", "cherry", "durian", "elderberry", "elderberry"],
}
TOY5_DAYS = {"d1": 100, "d2": 200, "d3": 300, "d4": 400, "d5": 500}


@pytest.fixture(scope="session")
def toy5_corpus() -> Corpus:
    docs = [
        Document(
            doc_id=d,
            tokens=list(tokens),
            time_part=frozenset({TimeWindow.instant(TOY5_DAYS[d])}),
        )
        for d, tokens in sorted(TOY5_TOKENS.items())
    ]
    return Corpus(documents=docs)


@pytest.fixture(scope="session")
def toy5_index(toy5_corpus):
    return build_index(toy5_corpus)


@pytest.fixture(scope="session")
def baseline_oracle() -> dict:
    """Committed spreadsheet oracle rows keyed by (term, doc_id)."""
    rows = {}
    with open(DATA_DIR / "baseline_oracle.csv", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows[(row["term"], row["doc_id"])] = row
    return rows


@pytest.fixture(scope="session")
def rand_corpus():
    return random_corpus(n_docs=300, seed=11)


@pytest.fixture(scope="session")
def rand_index(rand_corpus):
    return build_index(rand_corpus)


@pytest.fixture(scope="session")
def burst_setup():
    corpus, spec = two_burst_corpus()
    index = build_index(corpus)
    queries, qrels = two_burst_queries(spec)
    return corpus, spec, index, queries, qrels
