"""The tag database: one CSV row per paper, citation columns plus tag cells.

Databases are value-semantic snapshots; every operation returns a new value
and never mutates its input. Persistence is plain CSV with a UTC timestamp
baked into the filename on every save, so older versions are never
overwritten.
"""

from __future__ import annotations

import csv
import datetime
import io
import re
from dataclasses import dataclass, field

from . import errors
from .citations import ZoteroExport
from .schema import (
    CITATION_COLUMNS,
    CategoriesSchema,
    SchemaDelta,
    TagDefinition,
    TagKind,
    schema_diff,
)

MULTI_SEPARATOR = "; "


# --- cell values ---

class CellValue:
    """Base for the tagged cell variants below."""

    __slots__ = ()


@dataclass(frozen=True)
class Empty(CellValue):
    pass


@dataclass(frozen=True)
class SingleOption(CellValue):
    option: str


@dataclass(frozen=True)
class MultiOptions(CellValue):
    options: tuple[str, ...]


@dataclass(frozen=True)
class DateValue(CellValue):
    value: datetime.date


@dataclass(frozen=True)
class TextValue(CellValue):
    text: str


@dataclass(frozen=True)
class NoteValue(CellValue):
    text: str


EMPTY = Empty()

_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}$")


def serialize_cell(cell: CellValue) -> str:
    if isinstance(cell, Empty):
        return ""
    if isinstance(cell, SingleOption):
        return cell.option
    if isinstance(cell, MultiOptions):
        return MULTI_SEPARATOR.join(cell.options)
    if isinstance(cell, DateValue):
        return cell.value.isoformat()
    if isinstance(cell, (TextValue, NoteValue)):
        return cell.text
    raise TypeError(f"not a cell value: {cell!r}")


def parse_cell(text: str, tag: TagDefinition) -> CellValue:
    """Parse a serialized cell against a tag definition.

    Raises UnknownOption for values outside a selection tag's option list
    and InvalidCellValue for malformed dates.
    """
    if text == "":
        return EMPTY
    if tag.kind is TagKind.SINGLE:
        if text not in tag.options:
            raise errors.UnknownOption(tag.name, text)
        return SingleOption(text)
    if tag.kind is TagKind.MULTI:
        members = [part.strip() for part in text.split(";")]
        members = [m for m in members if m]
        for member in members:
            if member not in tag.options:
                raise errors.UnknownOption(tag.name, member)
        if not members:
            return EMPTY
        return canonical_multi(members, tag)
    if tag.kind is TagKind.DATE:
        if not _DATE_RE.fullmatch(text):
            raise errors.InvalidCellValue("", tag.name, text, "expected YYYY-MM-DD")
        try:
            return DateValue(datetime.date.fromisoformat(text))
        except ValueError:
            raise errors.InvalidCellValue(
                "", tag.name, text, "not a real calendar date"
            ) from None
    if tag.kind is TagKind.TEXT:
        return TextValue(text)
    return NoteValue(text)


def canonical_multi(members, tag: TagDefinition) -> CellValue:
    """Dedupe and order members by the tag's option order; empty -> EMPTY."""
    ordered = tuple(opt for opt in tag.options if opt in set(members))
    return MultiOptions(ordered) if ordered else EMPTY


def validate_cell(cell: CellValue, tag: TagDefinition) -> None:
    """Check a typed cell against its tag definition; raises on violation."""
    if isinstance(cell, Empty):
        return
    kind_of_variant = {
        SingleOption: TagKind.SINGLE,
        MultiOptions: TagKind.MULTI,
        DateValue: TagKind.DATE,
        TextValue: TagKind.TEXT,
        NoteValue: TagKind.NOTE,
    }
    expected = kind_of_variant.get(type(cell))
    if expected is None:
        raise TypeError(f"not a cell value: {cell!r}")
    if expected is not tag.kind:
        raise errors.KindMismatch(tag.name, type(cell).__name__)
    if isinstance(cell, SingleOption):
        if cell.option not in tag.options:
            raise errors.UnknownOption(tag.name, cell.option)
    elif isinstance(cell, MultiOptions):
        if not cell.options:
            raise errors.InvalidCellValue("", tag.name, "", "empty multi-select set")
        seen = set()
        for opt in cell.options:
            if opt not in tag.options:
                raise errors.UnknownOption(tag.name, opt)
            if opt in seen:
                raise errors.InvalidCellValue(
                    "", tag.name, serialize_cell(cell), f"duplicate member {opt!r}"
                )
            seen.add(opt)
        in_schema_order = tuple(o for o in tag.options if o in seen)
        if cell.options != in_schema_order:
            raise errors.InvalidCellValue(
                "", tag.name, serialize_cell(cell), "members out of option order"
            )
    elif isinstance(cell, (TextValue, NoteValue)):
        if cell.text == "":
            raise errors.InvalidCellValue(
                "", tag.name, "", "empty text; use the Empty cell instead"
            )


# --- rows and the database ---

@dataclass
class Row:
    citation: dict[str, str]          # citation column name -> value, Key excluded
    tags: dict[str, CellValue]        # tag name -> cell

    def copy(self) -> "Row":
        return Row(citation=dict(self.citation), tags=dict(self.tags))


@dataclass(eq=False)
class TagDatabase:
    schema: CategoriesSchema
    rows: dict[str, Row]              # insertion-ordered, key -> row

    @property
    def schema_fingerprint(self) -> str:
        return self.schema.fingerprint

    @property
    def citation_columns(self) -> tuple[str, ...]:
        return CITATION_COLUMNS

    def header(self) -> tuple[str, ...]:
        """Column order of the CSV form: Key, citation, tags, then notes."""
        return (
            CITATION_COLUMNS
            + self.schema.data_tag_names()
            + self.schema.note_names()
        )

    def keys(self) -> list[str]:
        return list(self.rows)

    def row(self, key: str) -> Row:
        row = self.rows.get(key)
        if row is None:
            raise errors.UnknownKey(key)
        return row

    def cell_text(self, key: str, column: str) -> str:
        """Serialized value of any column of a row (Key included)."""
        row = self.row(key)
        if column == "Key":
            return key
        if column in CITATION_COLUMNS:
            return row.citation.get(column, "")
        if column in row.tags:
            return serialize_cell(row.tags[column])
        raise errors.UnknownColumn(column)

    def copy(self) -> "TagDatabase":
        return TagDatabase(
            schema=self.schema, rows={k: r.copy() for k, r in self.rows.items()}
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TagDatabase):
            return NotImplemented
        return (
            self.schema == other.schema
            and list(self.rows) == list(other.rows)
            and all(
                self.rows[k].citation == other.rows[k].citation
                and self.rows[k].tags == other.rows[k].tags
                for k in self.rows
            )
        )


@dataclass
class ConformReport:
    tags_added: tuple[str, ...] = ()
    tags_removed: tuple[tuple[str, int], ...] = ()     # (name, non-empty cells dropped)
    cells_invalidated: tuple[tuple[str, str, str], ...] = ()  # (key, tag, value)
    policy: str = "quarantine"
    delta: SchemaDelta | None = None

    def is_empty(self) -> bool:
        return (
            not self.tags_added
            and not self.tags_removed
            and not self.cells_invalidated
            and (self.delta is None or self.delta.is_empty())
        )


# --- operations ---

def create_database(export: ZoteroExport, schema: CategoriesSchema) -> TagDatabase:
    """One row per export record, export order, every tag cell Empty."""
    _check_collisions(schema)
    tag_names = schema.tag_names()
    rows: dict[str, Row] = {}
    for record in export.records:
        rows[record.key] = Row(
            citation={
                col: record.column_value(col)
                for col in CITATION_COLUMNS
                if col != "Key"
            },
            tags={name: EMPTY for name in tag_names},
        )
    return TagDatabase(schema=schema, rows=rows)


def _check_collisions(schema: CategoriesSchema) -> None:
    for tag in schema.tags():
        if tag.name in CITATION_COLUMNS:
            raise errors.ColumnNameCollision(tag.name)


def timestamp_filename(base_name: str, now: datetime.datetime) -> str:
    if now.tzinfo is not None:
        now = now.astimezone(datetime.timezone.utc)
    return f"{base_name}_{now:%Y%m%d}T{now:%H%M%S}Z.csv"


_FILENAME_RE = re.compile(r"(?s)(.*)_(\d{8})T(\d{6})Z\.csv$")


def parse_timestamp_filename(filename: str) -> tuple[str, datetime.datetime]:
    """Recover (base name, UTC instant) from a generated filename."""
    m = _FILENAME_RE.fullmatch(filename)
    if m is None:
        raise ValueError(f"not a timestamped database filename: {filename!r}")
    stamp = datetime.datetime.strptime(m.group(2) + m.group(3), "%Y%m%d%H%M%S")
    return m.group(1), stamp.replace(tzinfo=datetime.timezone.utc)


def save_database(
    db: TagDatabase, base_name: str, now: datetime.datetime
) -> tuple[str, bytes]:
    """Serialize to CSV; the filename carries the save instant in UTC."""
    if not base_name or "/" in base_name or "\\" in base_name:
        raise ValueError(f"base name {base_name!r} must not contain path separators")
    header = db.header()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for key, row in db.rows.items():
        out = [key]
        out.extend(row.citation.get(col, "") for col in CITATION_COLUMNS[1:])
        for name in header[len(CITATION_COLUMNS):]:
            out.append(serialize_cell(row.tags.get(name, EMPTY)))
        writer.writerow(out)
    return timestamp_filename(base_name, now), buf.getvalue().encode("utf-8")


def load_database(
    data: bytes, schema: CategoriesSchema, strict: bool = False
) -> tuple[TagDatabase, ConformReport]:
    """Load a database CSV and conform it to the given schema.

    Unknown columns are dropped (reported with their non-empty cell count),
    missing schema tags come back Empty, and cell values that do not
    validate are quarantined into the report unless strict=True.
    """
    _check_collisions(schema)
    text = data.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        file_header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise errors.MissingKeyColumn() from None
    if "Key" not in file_header:
        raise errors.MissingKeyColumn()
    key_idx = file_header.index("Key")

    tag_names = set(schema.tag_names())
    unknown = [
        c
        for c in file_header
        if c not in tag_names and c not in CITATION_COLUMNS
    ]
    missing_tags = tuple(n for n in schema.tag_names() if n not in file_header)

    rows: dict[str, Row] = {}
    invalidated: list[tuple[str, str, str]] = []
    dropped: dict[str, int] = {c: 0 for c in unknown}
    for rownum, raw in enumerate(reader, start=2):
        if not any(cell.strip() for cell in raw):
            continue
        if len(raw) > len(file_header):
            raise errors.MalformedCsv(rownum, "more fields than header columns")
        raw = raw + [""] * (len(file_header) - len(raw))
        key = raw[key_idx]
        if not key:
            raise errors.MalformedCsv(rownum, "empty Key")
        if key in rows:
            raise errors.DuplicateKey(key)
        values = dict(zip(file_header, raw))

        citation = {
            col: values.get(col, "") for col in CITATION_COLUMNS if col != "Key"
        }
        tags: dict[str, CellValue] = {}
        for tag in schema.tags():
            raw_value = values.get(tag.name, "")
            try:
                tags[tag.name] = parse_cell(raw_value, tag)
            except (errors.UnknownOption, errors.InvalidCellValue) as exc:
                if strict:
                    raise errors.InvalidCellValue(
                        key, tag.name, raw_value, str(exc)
                    ) from None
                invalidated.append((key, tag.name, raw_value))
                tags[tag.name] = EMPTY
        for col in unknown:
            if values.get(col, ""):
                dropped[col] += 1
        rows[key] = Row(citation=citation, tags=tags)

    report = ConformReport(
        tags_added=missing_tags,
        tags_removed=tuple((c, dropped[c]) for c in unknown),
        cells_invalidated=tuple(invalidated),
        policy="strict" if strict else "quarantine",
    )
    return TagDatabase(schema=schema, rows=rows), report


def conform(
    db: TagDatabase, new_schema: CategoriesSchema, strict: bool = False
) -> tuple[TagDatabase, ConformReport]:
    """Re-shape a database in memory to an evolved schema.

    Same semantics as load-time conforming: every surviving cell is
    re-validated through its serialized form, so a kind change keeps values
    that still parse and quarantines the rest. Idempotent.
    """
    _check_collisions(new_schema)
    delta = schema_diff(db.schema, new_schema)
    old_tags = set(db.schema.tag_names())
    removed = tuple(n for n in db.schema.tag_names() if n not in set(new_schema.tag_names()))

    invalidated: list[tuple[str, str, str]] = []
    dropped = {name: 0 for name in removed}
    rows: dict[str, Row] = {}
    for key, row in db.rows.items():
        tags: dict[str, CellValue] = {}
        for tag in new_schema.tags():
            if tag.name not in old_tags:
                tags[tag.name] = EMPTY
                continue
            serialized = serialize_cell(row.tags.get(tag.name, EMPTY))
            try:
                tags[tag.name] = parse_cell(serialized, tag)
            except (errors.UnknownOption, errors.InvalidCellValue) as exc:
                if strict:
                    raise errors.InvalidCellValue(
                        key, tag.name, serialized, str(exc)
                    ) from None
                invalidated.append((key, tag.name, serialized))
                tags[tag.name] = EMPTY
        for name in removed:
            if not isinstance(row.tags.get(name, EMPTY), Empty):
                dropped[name] += 1
        rows[key] = Row(citation=dict(row.citation), tags=tags)

    report = ConformReport(
        tags_added=delta.added_tags,
        tags_removed=tuple((n, dropped[n]) for n in removed),
        cells_invalidated=tuple(invalidated),
        policy="strict" if strict else "quarantine",
        delta=delta,
    )
    return TagDatabase(schema=new_schema, rows=rows), report


def validate_database(db: TagDatabase) -> None:
    """Post-hoc structural check: every cell valid against the schema."""
    tag_defs = {t.name: t for t in db.schema.tags()}
    for key, row in db.rows.items():
        if set(row.tags) != set(tag_defs):
            raise errors.InvalidCellValue(
                key, "", "", "row tag slots do not match the schema"
            )
        for name, cell in row.tags.items():
            validate_cell(cell, tag_defs[name])
