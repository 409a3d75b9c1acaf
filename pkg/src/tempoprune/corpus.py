"""Time-stamped document collections: tokenization and corpus I/O."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from html import unescape
from pathlib import Path

from .errors import CorpusFormatError
from .timewindows import TimeWindow, day_number

log = logging.getLogger(__name__)

# Classic 33-word English stop set (the Lucene default).
STOPWORDS = frozenset(
    """a an and are as at be but by for if in into is it no not of on or such
    that the their then there these they this to was will with""".split()
)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str, stop_words: bool = True) -> list[str]:
    """Lowercase Unicode-alphanumeric tokens; digits kept, no stemming."""
    tokens = _TOKEN_RE.findall(text.lower())
    if stop_words:
        tokens = [t for t in tokens if t not in STOPWORDS]
    return tokens


@dataclass
class Document:
    doc_id: str
    tokens: list[str]
    time_part: frozenset[TimeWindow] = field(default_factory=frozenset)


@dataclass
class Corpus:
    documents: list[Document]
    day_epoch: str = "1970-01-01"
    n_malformed: int = 0

    def by_id(self) -> dict[str, Document]:
        return {d.doc_id: d for d in self.documents}

    def window_hull(self) -> tuple[int, int] | None:
        """Smallest [day, day] span covering every document window, if any."""
        lo = hi = None
        for doc in self.documents:
            for w in doc.time_part:
                lo = w.b_lo if lo is None else min(lo, w.b_lo)
                hi = w.e_hi if hi is None else max(hi, w.e_hi)
        if lo is None:
            return None
        return lo, hi


def parse_corpus(path, fmt: str = "jsonl", stop_words: bool = True) -> Corpus:
    """Parse a corpus file.  Malformed records are counted, not dropped silently."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if fmt == "jsonl":
        docs, bad = _parse_jsonl(text, stop_words)
    elif fmt == "trec":
        docs, bad = _parse_trec_sgml(text, stop_words)
    else:
        raise CorpusFormatError(f"unknown corpus format {fmt!r}")
    if not docs:
        raise CorpusFormatError(f"no parseable documents in {path}")
    if bad:
        log.warning("%s: %d malformed record(s) skipped", path, bad)
    return Corpus(documents=docs, n_malformed=bad)


def _parse_jsonl(text: str, stop_words: bool) -> tuple[list[Document], int]:
    docs: list[Document] = []
    seen: set[str] = set()
    bad = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            doc_id = rec["id"]
            body = rec["text"]
            if not isinstance(doc_id, str) or not isinstance(body, str):
                raise ValueError("id and text must be strings")
            if doc_id in seen:
                raise ValueError(f"duplicate doc id {doc_id!r}")
            windows = frozenset(TimeWindow.from_iso(w) for w in rec.get("time", []))
        except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
            bad += 1
            log.debug("malformed jsonl record: %s", exc)
            continue
        seen.add(doc_id)
        docs.append(Document(doc_id, tokenize(body, stop_words), windows))
    return docs, bad


_DOC_RE = re.compile(r"<DOC>(.*?)</DOC>", re.DOTALL)
_TAG_RES = {name: re.compile(rf"<{name}>(.*?)</{name}>", re.DOTALL) for name in ("DOCNO", "DATE", "TEXT")}
_INNER_TAG_RE = re.compile(r"<[^>]+>")
_LONG_DATE_RE = re.compile(r"([A-Z][a-z]+ +\d{1,2}, +\d{4})")
_ISO_DATE_RE = re.compile(r"(\d{4}-\d{2}-\d{2})")

_MONTHS = {m: i + 1 for i, m in enumerate(
    ["January", "February", "March", "April", "May", "June", "July",
     "August", "September", "October", "November", "December"])}


def _parse_trec_date(raw: str) -> int | None:
    """Publication day number from a DATE tag, or None if unrecognizable."""
    m = _ISO_DATE_RE.search(raw)
    if m:
        from datetime import date

        try:
            return day_number(date.fromisoformat(m.group(1)))
        except ValueError:
            return None
    m = _LONG_DATE_RE.search(raw)
    if m:
        from datetime import date

        month_name, rest = m.group(1).split(" ", 1)
        day_s, year_s = rest.replace(",", "").split()
        month = _MONTHS.get(month_name)
        if month is None:
            return None
        try:
            return day_number(date(int(year_s), month, int(day_s)))
        except ValueError:
            return None
    return None


def _parse_trec_sgml(text: str, stop_words: bool) -> tuple[list[Document], int]:
    docs: list[Document] = []
    seen: set[str] = set()
    bad = 0
    for block in _DOC_RE.findall(text):
        docno = _TAG_RES["DOCNO"].search(block)
        body = _TAG_RES["TEXT"].search(block)
        if docno is None or body is None:
            bad += 1
            continue
        doc_id = docno.group(1).strip()
        if not doc_id or doc_id in seen:
            bad += 1
            continue
        raw = unescape(_INNER_TAG_RE.sub(" ", body.group(1)))
        tokens = tokenize(raw, stop_words)
        windows: frozenset[TimeWindow] = frozenset()
        date_tag = _TAG_RES["DATE"].search(block)
        if date_tag is not None:
            day = _parse_trec_date(_INNER_TAG_RE.sub(" ", date_tag.group(1)))
            if day is not None:
                # publication date: a degenerate certain window
                windows = frozenset({TimeWindow.instant(day)})
        seen.add(doc_id)
        docs.append(Document(doc_id, tokens, windows))
    return docs, bad


def write_corpus(corpus: Corpus, path) -> None:
    """Canonical JSONL dump; windows re-emitted as ISO dates, tokens as text."""
    lines = []
    for doc in corpus.documents:
        rec: dict = {"id": doc.doc_id, "text": " ".join(doc.tokens)}
        if doc.time_part:
            rec["time"] = [w.to_iso() for w in sorted(doc.time_part)]
        lines.append(json.dumps(rec, sort_keys=True, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
