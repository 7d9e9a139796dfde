"""Paper corpus ingestion, indexing, and title keyword statistics.

The corpus file format is line-delimited UTF-8 with tab-separated fields in
fixed order::

    paper_id <TAB> year <TAB> venue <TAB> title <TAB> author1|author2|...

Author names are separated by ``|`` and must not contain tabs, pipes, or
newlines.  Venue strings are compared after case-folding and whitespace
normalization, which is applied once at parse time.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, Sequence

FIELD_SEP = "\t"
AUTHOR_SEP = "|"

MIN_YEAR = 1900
MAX_YEAR = 2100

_TOKEN_RE = re.compile(r"[0-9a-z]+")


class CorpusError(ValueError):
    """Raised for corpus-level violations that invalidate the whole input."""


@dataclass(frozen=True)
class RecordError:
    """A single malformed input line, kept for the ingestion report."""

    line_no: int
    message: str
    line: str

    def __str__(self) -> str:
        return f"line {self.line_no}: {self.message}"


@dataclass(frozen=True)
class PaperRecord:
    """One publication: identifier, title, venue, year, ordered author names."""

    paper_id: str
    title: str
    venue: str
    year: int
    authors: tuple[str, ...]

    def validate(self) -> None:
        if not self.paper_id or re.search(r"[\s,|]", self.paper_id):
            raise ValueError(f"invalid paper_id {self.paper_id!r}")
        if not (MIN_YEAR <= self.year <= MAX_YEAR):
            raise ValueError(f"year {self.year} outside [{MIN_YEAR}, {MAX_YEAR}]")
        if not self.authors:
            raise ValueError("empty author list")
        seen = set()
        for name in self.authors:
            if not name or name != name.strip():
                raise ValueError(f"author name {name!r} is empty or untrimmed")
            if re.search(r"[\t\n|]", name):
                raise ValueError(f"author name {name!r} contains a reserved character")
            if name in seen:
                raise ValueError(f"duplicate author name {name!r} in one paper")
            seen.add(name)
        if re.search(r"[\t\n]", self.venue) or re.search(r"[\t\n]", self.title):
            raise ValueError("venue/title must not contain tabs or newlines")


def normalize_venue(venue: str) -> str:
    """Case-fold and collapse whitespace; no further canonicalization."""
    return " ".join(venue.split()).casefold()


def tokenize(title: str) -> list[str]:
    """Lowercase alphanumeric tokens of length >= 2, split on everything else."""
    return [t for t in _TOKEN_RE.findall(title.casefold()) if len(t) >= 2]


def load_stopwords(path=None) -> frozenset[str]:
    """Load a one-token-per-line stopword file; default is the bundled English list."""
    if path is None:
        text = resources.files("collabnet.data").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def extract_keywords(
    title: str, stopwords: frozenset[str], frequent_words: frozenset[str]
) -> Counter:
    """Keyword multiset of a title: tokens minus stopwords minus frequent words."""
    return Counter(
        t for t in tokenize(title) if t not in stopwords and t not in frequent_words
    )


def parse_record_line(line: str) -> PaperRecord:
    parts = line.rstrip("\n").split(FIELD_SEP)
    if len(parts) != 5:
        raise ValueError(f"expected 5 tab-separated fields, got {len(parts)}")
    pid, year_s, venue, title, authors_s = parts
    try:
        year = int(year_s)
    except ValueError:
        raise ValueError(f"year {year_s!r} is not an integer") from None
    authors = tuple(a.strip() for a in authors_s.split(AUTHOR_SEP))
    record = PaperRecord(
        paper_id=pid.strip(),
        title=title,
        venue=normalize_venue(venue),
        year=year,
        authors=authors,
    )
    record.validate()
    return record


def format_record(record: PaperRecord) -> str:
    return FIELD_SEP.join(
        (
            record.paper_id,
            str(record.year),
            record.venue,
            record.title,
            AUTHOR_SEP.join(record.authors),
        )
    )


def write_corpus(records: Iterable[PaperRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(format_record(record) + "\n")


class CorpusIndex:
    """Immutable index over a parsed corpus.

    Holds the records, the name-to-papers inverse map, and the corpus-level
    frequency tables used by the similarity features: ``word_freq`` counts the
    titles containing each retained keyword (document frequency) and
    ``venue_freq`` counts papers per venue.
    """

    def __init__(
        self,
        records: Sequence[PaperRecord],
        stopwords: frozenset[str],
        freq_cutoff: float = 0.05,
    ):
        if not (0.0 < freq_cutoff <= 1.0):
            raise ValueError(f"freq_cutoff {freq_cutoff} outside (0, 1]")
        self.stopwords = stopwords
        self.freq_cutoff = freq_cutoff
        self.papers: dict[str, PaperRecord] = {}
        name_to_papers: dict[str, set[str]] = {}
        for record in records:
            if record.paper_id in self.papers:
                raise CorpusError(f"duplicate paper_id {record.paper_id!r}")
            self.papers[record.paper_id] = record
            for name in record.authors:
                name_to_papers.setdefault(name, set()).add(record.paper_id)
        self.name_to_papers: dict[str, frozenset[str]] = {
            name: frozenset(pids) for name, pids in name_to_papers.items()
        }

        # Raw document frequency over all tokens decides which words count as
        # "frequent"; the retained-keyword table excludes them afterwards.
        df: Counter = Counter()
        for record in self.papers.values():
            df.update(set(tokenize(record.title)))
        n = len(self.papers)
        self.frequent_words = frozenset(
            w for w, c in df.items() if c > freq_cutoff * n
        )
        self.word_freq: dict[str, int] = {
            w: c
            for w, c in df.items()
            if w not in self.stopwords and w not in self.frequent_words
        }
        self.venue_freq: dict[str, int] = dict(
            Counter(r.venue for r in self.papers.values())
        )
        self._keyword_cache: dict[str, tuple[str, ...]] = {}

    @property
    def n_papers(self) -> int:
        return len(self.papers)

    def keywords_for(self, paper_id: str) -> tuple[str, ...]:
        """Retained keyword multiset of one title, as a tuple with repeats."""
        cached = self._keyword_cache.get(paper_id)
        if cached is None:
            bag = extract_keywords(
                self.papers[paper_id].title, self.stopwords, self.frequent_words
            )
            cached = tuple(sorted(bag.elements()))
            self._keyword_cache[paper_id] = cached
        return cached

    def keyword_bag(self, paper_ids: Iterable[str]) -> Counter:
        """Multiset of (keyword, year) pairs over a set of papers."""
        bag: Counter = Counter()
        for pid in paper_ids:
            year = self.papers[pid].year
            for kw in self.keywords_for(pid):
                bag[(kw, year)] += 1
        return bag

    def add_record(self, record: PaperRecord) -> None:
        """Register one new paper without refreshing corpus statistics.

        Used by incremental disambiguation: the new paper needs keyword and
        venue profiles, while the frequency tables keep the values the model
        was fitted against.
        """
        if record.paper_id in self.papers:
            raise CorpusError(f"duplicate paper_id {record.paper_id!r}")
        record.validate()
        self.papers[record.paper_id] = record
        for name in record.authors:
            self.name_to_papers[name] = self.name_to_papers.get(name, frozenset()) | {
                record.paper_id
            }

    def same_records(self, other: "CorpusIndex") -> bool:
        return self.papers == other.papers


def parse_corpus(
    lines: Iterable[str],
    stopwords: frozenset[str] | None = None,
    freq_cutoff: float = 0.05,
) -> tuple[CorpusIndex, list[RecordError]]:
    """Parse a line-delimited corpus into an index plus a record-error report.

    Malformed lines (bad field count, bad year, empty author list, duplicate
    names within one list) are collected, not silently dropped.  A duplicate
    ``paper_id`` is a hard error because it invalidates every downstream count.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    records: list[PaperRecord] = []
    errors: list[RecordError] = []
    seen_ids: dict[str, int] = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = parse_record_line(line)
        except ValueError as exc:
            errors.append(RecordError(line_no, str(exc), line.rstrip("\n")))
            continue
        if record.paper_id in seen_ids:
            raise CorpusError(
                f"duplicate paper_id {record.paper_id!r} "
                f"(lines {seen_ids[record.paper_id]} and {line_no})"
            )
        seen_ids[record.paper_id] = line_no
        records.append(record)
    return CorpusIndex(records, stopwords, freq_cutoff), errors


def parse_corpus_file(
    path, stopwords: frozenset[str] | None = None, freq_cutoff: float = 0.05
) -> tuple[CorpusIndex, list[RecordError]]:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh, stopwords, freq_cutoff)


def build_frequency_tables(index: CorpusIndex) -> tuple[dict[str, int], dict[str, int]]:
    """Recompute the keyword document-frequency and venue tables from scratch.

    Exists as an independent recount of the tables the index maintains; the two
    must always agree.
    """
    df: Counter = Counter()
    venues: Counter = Counter()
    for record in index.papers.values():
        df.update(set(index.keywords_for(record.paper_id)))
        venues[record.venue] += 1
    return dict(df), dict(venues)
