import pytest

from collabnet.corpus import CorpusIndex, PaperRecord, load_stopwords


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords()


def make_record(pid, authors, title="graph mining", venue="venue a", year=2005):
    record = PaperRecord(
        paper_id=pid, title=title, venue=venue, year=year, authors=tuple(authors)
    )
    record.validate()
    return record


def make_index(records, freq_cutoff=1.0, stopword_set=frozenset()):
    # cutoff 1.0 keeps every token: document frequency can never exceed N.
    return CorpusIndex(list(records), stopword_set, freq_cutoff)


@pytest.fixture
def record_factory():
    return make_record


@pytest.fixture
def index_factory():
    return make_index
