import datetime

import pytest

from tagbase.citations import parse_zotero_export
from tagbase.database import create_database, parse_cell
from tagbase.schema import parse_categories
from tagbase.tagging import assign

METHODS_TABLE = (
    "StudyType,Region,PubDate,Rating\r\n"
    "single,multi,date,text\r\n"
    "Field,Arctic,,\r\n"
    "Lab,Atlantic,,\r\n"
    "Model,Pacific,,\r\n"
)
NOTES_TABLE = "Summary\r\nnote\r\n"

EXPORT_CSV = (
    "Key,Item Type,Author,Publication Year,Title,Publication Title,DOI,Url,"
    "Abstract Note,Date Added\r\n"
    'ABCD1234,journalArticle,"Smith, Jane; Doe, John",2019,Arctic drift revisited,'
    "Polar Science,10.1000/a1,https://example.org/a1,Long abstract one,"
    "2020-01-02 10:00:00\r\n"
    'EFGH5678,journalArticle,"Wu, Li",2021,Laboratory melt rates,'
    "Cryosphere,10.1000/b2,,Second abstract,2021-03-04 11:00:00\r\n"
    'IJKL9012,bookSection,"Ade, Kofi",2015,Modelling basin exchange,'
    "Ocean Mixing,,,"
    '"Abstract with, comma and ""quotes""",2019-05-06 12:00:00\r\n'
).encode("utf-8")


@pytest.fixture
def methods_schema():
    return parse_categories({"Methods": METHODS_TABLE, "Notes": NOTES_TABLE})


@pytest.fixture
def small_export():
    return parse_zotero_export(EXPORT_CSV)


@pytest.fixture
def empty_db(methods_schema, small_export):
    return create_database(small_export, methods_schema)


@pytest.fixture
def tagged_db(empty_db, methods_schema):
    db = empty_db

    def set_cell(key, tag, text):
        return assign(db, key, tag, parse_cell(text, methods_schema.tag(tag)))

    db = set_cell("ABCD1234", "StudyType", "Field")
    db = set_cell("ABCD1234", "Region", "Arctic; Pacific")
    db = set_cell("ABCD1234", "PubDate", "2019-06-01")
    db = set_cell("ABCD1234", "Summary", "Drift stations\nwith two lines")
    db = set_cell("EFGH5678", "StudyType", "Lab")
    db = set_cell("EFGH5678", "Region", "Atlantic")
    db = set_cell("EFGH5678", "Rating", "excellent")
    return db


@pytest.fixture
def fixed_instant():
    return datetime.datetime(2026, 8, 23, 12, 0, 0, tzinfo=datetime.timezone.utc)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    lines = []
    for status_key, flag in (("passed", "PASS"), ("failed", "FAIL")):
        for rep in terminalreporter.stats.get(status_key, []):
            if "test_acceptance.py" in rep.nodeid and rep.when == "call":
                lines.append((rep.nodeid.split("::")[-1], flag))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, flag in sorted(lines):
            terminalreporter.write_line(f"{flag}: {name}")
