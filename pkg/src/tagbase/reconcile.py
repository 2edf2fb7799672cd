"""Keeping a database aligned with its Zotero library and with other taggers.

sync: add/remove rows against a fresh export, refresh citation columns.
diff: compare two database snapshots cell by cell.
merge: combine per-tagger databases that share one schema.
relink: re-key a database against a different library's export by DOI or
normalized title+year.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum

from . import errors
from .citations import (
    CitationRecord,
    ZoteroExport,
    citation_match_index,
    doi_signature,
    title_year_signature,
)
from .database import EMPTY, Row, TagDatabase, serialize_cell
from .schema import CITATION_COLUMNS


def _citation_from_record(record: CitationRecord) -> dict[str, str]:
    return {
        col: record.column_value(col) for col in CITATION_COLUMNS if col != "Key"
    }


# --- sync ---

@dataclass
class SyncReport:
    added: tuple[str, ...] = ()
    removed: dict[str, Row] = field(default_factory=dict)   # full dropped rows
    citation_updated: dict[str, dict[str, tuple[str, str]]] = field(
        default_factory=dict
    )  # key -> column -> (old, new)

    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.citation_updated)


def sync(db: TagDatabase, export: ZoteroExport) -> tuple[TagDatabase, SyncReport]:
    """Make the database's key set equal the export's, preserving all tags.

    Surviving rows keep their position and tag cells but take refreshed
    citation columns; new keys are appended with Empty tags; dropped rows
    are carried whole inside the report.
    """
    export_records = export.by_key()
    tag_names = db.schema.tag_names()

    added: list[str] = []
    removed: dict[str, Row] = {}
    updated: dict[str, dict[str, tuple[str, str]]] = {}
    rows: dict[str, Row] = {}

    for key, row in db.rows.items():
        record = export_records.get(key)
        if record is None:
            removed[key] = row.copy()
            continue
        fresh = _citation_from_record(record)
        changes = {
            col: (row.citation.get(col, ""), fresh[col])
            for col in fresh
            if fresh[col] != row.citation.get(col, "")
        }
        if changes:
            updated[key] = changes
        rows[key] = Row(citation=fresh, tags=dict(row.tags))

    for record in export.records:
        if record.key not in db.rows:
            added.append(record.key)
            rows[record.key] = Row(
                citation=_citation_from_record(record),
                tags={name: EMPTY for name in tag_names},
            )

    report = SyncReport(
        added=tuple(added), removed=removed, citation_updated=updated
    )
    return TagDatabase(schema=db.schema, rows=rows), report


# --- diff ---

@dataclass
class DiffReport:
    keys_only_in_a: tuple[str, ...] = ()
    keys_only_in_b: tuple[str, ...] = ()
    changed_cells: tuple[tuple[str, str, str, str], ...] = ()  # key, column, a, b
    columns_only_in_a: tuple[str, ...] = ()
    columns_only_in_b: tuple[str, ...] = ()

    def is_empty(self) -> bool:
        return not (
            self.keys_only_in_a
            or self.keys_only_in_b
            or self.changed_cells
            or self.columns_only_in_a
            or self.columns_only_in_b
        )


def diff(db_a: TagDatabase, db_b: TagDatabase) -> DiffReport:
    """Cell-level comparison on serialized values over shared columns."""
    header_a, header_b = db_a.header(), db_b.header()
    shared = [c for c in header_a if c in header_b and c != "Key"]

    only_a = tuple(k for k in db_a.rows if k not in db_b.rows)
    only_b = tuple(k for k in db_b.rows if k not in db_a.rows)

    changed: list[tuple[str, str, str, str]] = []
    for key in db_a.rows:
        if key not in db_b.rows:
            continue
        for column in shared:
            va = db_a.cell_text(key, column)
            vb = db_b.cell_text(key, column)
            if va != vb:
                changed.append((key, column, va, vb))

    return DiffReport(
        keys_only_in_a=only_a,
        keys_only_in_b=only_b,
        changed_cells=tuple(changed),
        columns_only_in_a=tuple(c for c in header_a if c not in header_b),
        columns_only_in_b=tuple(c for c in header_b if c not in header_a),
    )


# --- merge ---

class MergePolicy(Enum):
    ERROR = "error"
    FIRST_WINS = "first"
    LAST_WINS = "last"


@dataclass
class MergeReport:
    source_row_counts: tuple[int, ...] = ()
    duplicates: tuple[tuple[str, int, str], ...] = ()  # key, winning source index, policy

    def is_empty(self) -> bool:
        return not self.duplicates


def merge(
    dbs: list[TagDatabase], policy: MergePolicy = MergePolicy.ERROR
) -> tuple[TagDatabase, MergeReport]:
    """Row union in first-occurrence order; duplicate keys resolved whole-row."""
    if len(dbs) < 2:
        raise ValueError("merge needs at least two databases")
    header = dbs[0].header()
    for i, other in enumerate(dbs[1:], start=2):
        if other.header() != header:
            ours = set(header)
            theirs = set(other.header())
            raise errors.ColumnSetMismatch(
                f"database {i} differs: missing {sorted(ours - theirs)}, "
                f"extra {sorted(theirs - ours)}"
            )

    owner: dict[str, int] = {}
    for i, db in enumerate(dbs):
        for key in db.rows:
            if key in owner:
                continue
            owner[key] = i
    conflicts = {
        key
        for key in owner
        if sum(1 for db in dbs if key in db.rows) > 1
    }
    if conflicts and policy is MergePolicy.ERROR:
        raise errors.DuplicateKeyConflict(tuple(sorted(conflicts)))

    duplicates: list[tuple[str, int, str]] = []
    rows: dict[str, Row] = {}
    for i, db in enumerate(dbs):
        for key, row in db.rows.items():
            if key not in rows:
                rows[key] = row.copy()
                continue
            if policy is MergePolicy.LAST_WINS:
                rows[key] = row.copy()
    for key in sorted(conflicts):
        winner = (
            owner[key]
            if policy is MergePolicy.FIRST_WINS
            else max(i for i, db in enumerate(dbs) if key in db.rows)
        )
        duplicates.append((key, winner, policy.value))

    report = MergeReport(
        source_row_counts=tuple(len(db.rows) for db in dbs),
        duplicates=tuple(duplicates),
    )
    return TagDatabase(schema=dbs[0].schema, rows=rows), report


# --- relink ---

@dataclass
class RelinkReport:
    matched: tuple[tuple[str, str, str], ...] = ()  # old key, new key, doi|title-year
    unmatched_rows: tuple[str, ...] = ()
    unmatched_records: tuple[str, ...] = ()
    ambiguous: tuple[str, ...] = ()                 # signatures left unresolved


def relink(
    db: TagDatabase, export: ZoteroExport
) -> tuple[TagDatabase, RelinkReport]:
    """Re-key rows onto a new library's export; tags are never touched.

    DOI signatures are tried before title+year; ambiguous signatures and
    double-claimed export records are reported, not guessed. Export records
    nothing matched are NOT added (that is sync's job).
    """
    index = citation_match_index(export, strict=False)
    export_records = export.by_key()

    matched: list[tuple[str, str, str]] = []
    ambiguous: set[str] = set(index.ambiguous)
    claimed: set[str] = set()
    rows: dict[str, Row] = {}
    unmatched_rows: list[str] = []

    for key, row in db.rows.items():
        probe = CitationRecord(
            key=key,
            title=row.citation.get("Title", ""),
            publication_year=row.citation.get("Publication Year", ""),
            doi=row.citation.get("DOI", ""),
        )
        new_key = None
        matched_by = ""
        for kind, sig in (
            ("doi", doi_signature(probe)),
            ("title-year", title_year_signature(probe)),
        ):
            if sig is None:
                continue
            if sig in index.ambiguous:
                ambiguous.add(sig)
                continue
            candidate = index.by_signature.get(sig)
            if candidate is None:
                continue
            if candidate in claimed:
                # two database rows resolve to the same export record
                ambiguous.add(sig)
                continue
            new_key, matched_by = candidate, kind
            break

        if new_key is None:
            unmatched_rows.append(key)
            rows[key] = row.copy()
            continue
        claimed.add(new_key)
        matched.append((key, new_key, matched_by))
        rows[new_key] = Row(
            citation=_citation_from_record(export_records[new_key]),
            tags=dict(row.tags),
        )

    if len(rows) != len(db.rows):
        # an unmatched old key collided with a claimed new key
        duplicate = next(
            k for k in unmatched_rows if k in claimed
        )
        raise errors.DuplicateKey(duplicate)

    report = RelinkReport(
        matched=tuple(matched),
        unmatched_rows=tuple(unmatched_rows),
        unmatched_records=tuple(
            k for k in export_records if k not in claimed
        ),
        ambiguous=tuple(sorted(ambiguous)),
    )
    return TagDatabase(schema=db.schema, rows=rows), report


# --- schema-free file variants ---
#
# diff and merge also exist directly over CSV payloads, for callers that
# have the files but not the categories bundle. Cells are compared and
# copied as text, which matches the typed versions because cell
# serialization is canonical.

def _read_csv_rows(data: bytes) -> tuple[list[str], dict[str, list[str]]]:
    text = data.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise errors.MissingKeyColumn() from None
    if "Key" not in header:
        raise errors.MissingKeyColumn()
    key_idx = header.index("Key")

    rows: dict[str, list[str]] = {}
    for rownum, raw in enumerate(reader, start=2):
        if not any(cell.strip() for cell in raw):
            continue
        if len(raw) > len(header):
            raise errors.MalformedCsv(rownum, "more fields than header columns")
        raw = raw + [""] * (len(header) - len(raw))
        key = raw[key_idx]
        if not key:
            raise errors.MalformedCsv(rownum, "empty Key")
        if key in rows:
            raise errors.DuplicateKey(key)
        rows[key] = raw
    return header, rows


def diff_csv(a: bytes, b: bytes) -> DiffReport:
    """Textual cell-level diff of two database CSV payloads."""
    header_a, rows_a = _read_csv_rows(a)
    header_b, rows_b = _read_csv_rows(b)
    shared = [c for c in header_a if c in header_b and c != "Key"]
    idx_a = {c: header_a.index(c) for c in shared}
    idx_b = {c: header_b.index(c) for c in shared}

    changed: list[tuple[str, str, str, str]] = []
    for key, raw in rows_a.items():
        other = rows_b.get(key)
        if other is None:
            continue
        for column in shared:
            va, vb = raw[idx_a[column]], other[idx_b[column]]
            if va != vb:
                changed.append((key, column, va, vb))

    return DiffReport(
        keys_only_in_a=tuple(k for k in rows_a if k not in rows_b),
        keys_only_in_b=tuple(k for k in rows_b if k not in rows_a),
        changed_cells=tuple(changed),
        columns_only_in_a=tuple(c for c in header_a if c not in header_b),
        columns_only_in_b=tuple(c for c in header_b if c not in header_a),
    )


def merge_csv(
    payloads: list[bytes], policy: MergePolicy = MergePolicy.ERROR
) -> tuple[bytes, MergeReport]:
    """Merge database CSV payloads sharing one column set; returns merged CSV."""
    if len(payloads) < 2:
        raise ValueError("merge needs at least two databases")
    tables = [_read_csv_rows(p) for p in payloads]
    header = tables[0][0]
    for i, (other_header, _) in enumerate(tables[1:], start=2):
        if other_header != header:
            ours, theirs = set(header), set(other_header)
            raise errors.ColumnSetMismatch(
                f"database {i} differs: missing {sorted(ours - theirs)}, "
                f"extra {sorted(theirs - ours)}"
            )

    owner: dict[str, int] = {}
    for i, (_, rows) in enumerate(tables):
        for key in rows:
            owner.setdefault(key, i)
    conflicts = {
        key
        for key in owner
        if sum(1 for _, rows in tables if key in rows) > 1
    }
    if conflicts and policy is MergePolicy.ERROR:
        raise errors.DuplicateKeyConflict(tuple(sorted(conflicts)))

    merged: dict[str, list[str]] = {}
    for _, rows in tables:
        for key, raw in rows.items():
            if key not in merged:
                merged[key] = raw
            elif policy is MergePolicy.LAST_WINS:
                merged[key] = raw

    duplicates = []
    for key in sorted(conflicts):
        winner = (
            owner[key]
            if policy is MergePolicy.FIRST_WINS
            else max(i for i, (_, rows) in enumerate(tables) if key in rows)
        )
        duplicates.append((key, winner, policy.value))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for raw in merged.values():
        writer.writerow(raw)
    report = MergeReport(
        source_row_counts=tuple(len(rows) for _, rows in tables),
        duplicates=tuple(duplicates),
    )
    return buf.getvalue().encode("utf-8"), report
