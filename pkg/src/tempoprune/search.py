"""BM25 retrieval with boolean temporal filtering.

Exclusive queries carry explicit time windows and drop every document
whose time part misses all of them; inclusive queries leave dates to the
text tokens.  Collection statistics are the ones frozen at build time, so
rankings over a pruned index reflect pruning only through the missing
postings.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import date

from .errors import QueryError
from .index import InvertedIndex
from .timewindows import TimeWindow, any_intersect, day_number, parse_day

K1 = 2.0
B = 0.75
DEFAULT_DEPTH = 1000


@dataclass
class Query:
    qid: str
    terms: list[str]
    time_constraint: frozenset[TimeWindow] | None = None
    kind: str = "inclusive"

    def __post_init__(self) -> None:
        if self.kind not in ("inclusive", "exclusive"):
            raise QueryError(f"unknown query kind {self.kind!r}")
        if self.kind == "exclusive" and not self.time_constraint:
            raise QueryError(f"exclusive query {self.qid!r} needs a time constraint")


@dataclass
class RankedResult:
    qid: str
    hits: list[tuple[str, float]] = field(default_factory=list)

    def doc_ids(self) -> list[str]:
        return [d for d, _ in self.hits]


def _idf(index: InvertedIndex, term: str) -> float:
    # Unfloored; goes negative for terms in more than half the collection.
    df = index.stats.df[term]
    return math.log((index.stats.n_docs - df + 0.5) / (df + 0.5))


def _tf_part(tf: int, dlen: int, avgdl: float) -> float:
    return tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * dlen / avgdl))


def bm25_score(index: InvertedIndex, terms: list[str], doc_id: str) -> float:
    """BM25 with k1=2.0, b=0.75.  Query terms count with multiplicity;
    terms missing from the document (or the whole index) contribute 0."""
    if doc_id not in index.stats.doc_len:
        raise QueryError(f"unknown document {doc_id!r}")
    dlen = index.stats.doc_len[doc_id]
    avgdl = index.stats.avgdl
    score = 0.0
    for term, count in sorted(Counter(terms).items()):
        plist = index.lists.get(term)
        if plist is None:
            continue
        tf = next((p.tf for p in plist.postings if p.doc_id == doc_id), 0)
        if tf == 0:
            continue
        score += count * _idf(index, term) * _tf_part(tf, dlen, avgdl)
    return score


def temporal_match(index: InvertedIndex, doc_id: str, constraint: frozenset[TimeWindow]) -> bool:
    windows = index.doc_times.get(doc_id, frozenset())
    return any_intersect(constraint, windows)


def run_query(index: InvertedIndex, query: Query, depth: int = DEFAULT_DEPTH) -> RankedResult:
    """Term-at-a-time BM25; exclusive queries then keep only documents whose
    time part intersects some query window.  Top `depth` by (score desc,
    doc_id asc)."""
    if depth < 1:
        raise QueryError(f"depth must be >= 1, got {depth}")
    if not query.terms:
        raise QueryError(f"query {query.qid!r} has no terms")
    acc: dict[str, float] = {}
    avgdl = index.stats.avgdl
    for term, count in sorted(Counter(query.terms).items()):
        plist = index.lists.get(term)
        if plist is None:
            continue
        idf = _idf(index, term)
        for p in plist.postings:
            w = count * idf * _tf_part(p.tf, index.stats.doc_len[p.doc_id], avgdl)
            acc[p.doc_id] = acc.get(p.doc_id, 0.0) + w
    candidates = acc.items()
    if query.kind == "exclusive":
        candidates = (
            (d, s) for d, s in candidates if temporal_match(index, d, query.time_constraint)
        )
    ranked = sorted(candidates, key=lambda e: (-e[1], e[0]))[:depth]
    return RankedResult(qid=query.qid, hits=ranked)


def parse_time_spec(spec: str) -> TimeWindow:
    """Time window from a CLI string.

    Four comma-separated fields set b_lo,b_hi,e_lo,e_hi directly, each a
    day number or an ISO date.  The shorthands YYYY, YYYY-MM, and
    YYYY-MM-DD give the certain window spanning that year, month, or day.
    """
    text = spec.strip()
    if "," in text:
        fields = [f.strip() for f in text.split(",")]
        if len(fields) != 4:
            raise QueryError(f"expected 4 comma-separated fields, got {len(fields)}: {spec!r}")
        days = [_parse_day_field(f) for f in fields]
        try:
            return TimeWindow(*days)
        except ValueError as exc:
            raise QueryError(str(exc)) from exc
    parts = text.split("-")
    try:
        if len(parts) == 1:
            year = int(parts[0])
            return TimeWindow.certain(day_number(date(year, 1, 1)), day_number(date(year, 12, 31)))
        if len(parts) == 2:
            year, month = int(parts[0]), int(parts[1])
            start = day_number(date(year, month, 1))
            if month == 12:
                end = day_number(date(year + 1, 1, 1)) - 1
            else:
                end = day_number(date(year, month + 1, 1)) - 1
            return TimeWindow.certain(start, end)
        if len(parts) == 3:
            return TimeWindow.instant(parse_day(text))
    except ValueError as exc:
        raise QueryError(f"bad time spec {spec!r}: {exc}") from exc
    raise QueryError(f"bad time spec {spec!r}")


def _parse_day_field(field_text: str) -> int:
    if "-" in field_text.lstrip("-"):
        try:
            return parse_day(field_text)
        except ValueError as exc:
            raise QueryError(f"bad day field {field_text!r}") from exc
    try:
        return int(field_text)
    except ValueError as exc:
        raise QueryError(f"bad day field {field_text!r}") from exc


def trec_run_lines(result: RankedResult, tag: str = "tempoprune") -> list[str]:
    return [
        f"{result.qid} Q0 {doc} {rank} {score:.6f} {tag}"
        for rank, (doc, score) in enumerate(result.hits, start=1)
    ]
