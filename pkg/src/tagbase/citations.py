"""Parsing of Zotero CSV exports and matching signatures for re-keying.

A Zotero export is a UTF-8 CSV (RFC 4180 quoting, embedded newlines allowed
inside quoted fields) whose first row is the header. Every reference carries
the unique key Zotero generated for it; that key is the primary key of the
whole system.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field

from . import errors

REQUIRED_COLUMNS = ("Key", "Item Type", "Author", "Title")

# Export header name -> CitationRecord attribute, for the columns we map.
FIELD_BY_COLUMN = {
    "Key": "key",
    "Item Type": "item_type",
    "Author": "author",
    "Title": "title",
    "Publication Year": "publication_year",
    "Publication Title": "publication_title",
    "DOI": "doi",
    "Url": "url",
    "Abstract Note": "abstract",
    "Date Added": "date_added",
}


@dataclass
class CitationRecord:
    key: str
    item_type: str = ""
    author: str = ""
    title: str = ""
    publication_year: str = ""
    publication_title: str = ""
    doi: str = ""
    url: str = ""
    abstract: str = ""
    date_added: str = ""
    extras: dict[str, str] = field(default_factory=dict)

    def column_value(self, column: str) -> str:
        attr = FIELD_BY_COLUMN.get(column)
        if attr is not None:
            return getattr(self, attr)
        return self.extras.get(column, "")


@dataclass
class ZoteroExport:
    header: list[str]
    records: list[CitationRecord]

    def keys(self) -> list[str]:
        return [r.key for r in self.records]

    def by_key(self) -> dict[str, CitationRecord]:
        return {r.key: r for r in self.records}


def parse_zotero_export(data: bytes) -> ZoteroExport:
    """Parse export bytes; order preserved, key uniqueness enforced."""
    text = data.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise errors.MalformedCsv(1, "empty file") from None
    header = [h.strip() for h in header]
    for required in REQUIRED_COLUMNS:
        if required not in header:
            raise errors.MissingRequiredColumn(required)

    records: list[CitationRecord] = []
    first_row_of: dict[str, int] = {}
    for rownum, row in enumerate(reader, start=2):
        if not any(cell.strip() for cell in row):
            continue  # blank line
        if len(row) > len(header):
            raise errors.MalformedCsv(rownum, "more fields than header columns")
        row = row + [""] * (len(header) - len(row))
        values = dict(zip(header, row))
        key = values.get("Key", "")
        if not key:
            raise errors.MalformedCsv(rownum, "empty Key")
        if key in first_row_of:
            raise errors.DuplicateKey(key, (first_row_of[key], rownum))
        first_row_of[key] = rownum

        record = CitationRecord(key=key)
        for column, value in values.items():
            attr = FIELD_BY_COLUMN.get(column)
            if attr is not None:
                setattr(record, attr, value)
            else:
                record.extras[column] = value
        records.append(record)
    return ZoteroExport(header=header, records=records)


def serialize_export(export: ZoteroExport) -> bytes:
    """Re-render an export; quoting only where needed, CRLF line ends."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(export.header)
    for record in export.records:
        writer.writerow([record.column_value(col) for col in export.header])
    return buf.getvalue().encode("utf-8")


# --- matching signatures (used by relink) ---

_DOI_PREFIX = "https://doi.org/"


def normalize_doi(doi: str) -> str:
    doi = doi.strip().lower()
    if doi.startswith(_DOI_PREFIX):
        doi = doi[len(_DOI_PREFIX):]
    return doi


def doi_signature(record: CitationRecord) -> str | None:
    doi = normalize_doi(record.doi)
    return f"doi:{doi}" if doi else None


def title_year_signature(record: CitationRecord) -> str | None:
    title = re.sub(r"[^0-9a-z]+", " ", record.title.lower()).strip()
    if not title:
        return None
    year = record.publication_year.strip()
    return f"ty:{title} {year}".rstrip()


@dataclass
class MatchIndex:
    """Signature -> key lookup over an export, DOI signatures first."""

    by_signature: dict[str, str]
    ambiguous: dict[str, tuple[str, ...]]
    unmatchable: tuple[str, ...]


def citation_match_index(export: ZoteroExport, strict: bool = True) -> MatchIndex:
    """Build the match index; with strict=True a signature collision raises."""
    candidates: dict[str, list[str]] = {}
    unmatchable: list[str] = []
    for record in export.records:
        signatures = [
            s
            for s in (doi_signature(record), title_year_signature(record))
            if s is not None
        ]
        if not signatures:
            unmatchable.append(record.key)
            continue
        for sig in signatures:
            candidates.setdefault(sig, []).append(record.key)

    by_signature: dict[str, str] = {}
    ambiguous: dict[str, tuple[str, ...]] = {}
    for sig, keys in candidates.items():
        if len(keys) == 1:
            by_signature[sig] = keys[0]
        else:
            if strict:
                raise errors.AmbiguousSignature(sig, tuple(keys))
            ambiguous[sig] = tuple(keys)
    return MatchIndex(
        by_signature=by_signature,
        ambiguous=ambiguous,
        unmatchable=tuple(unmatchable),
    )
