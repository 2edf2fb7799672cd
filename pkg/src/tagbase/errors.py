"""Exception types shared across the package.

Every error carries enough structured context for the CLI and the HTTP
service to render it without string-parsing; ``.name`` is the stable
machine-readable identifier used in JSON error bodies.
"""

from __future__ import annotations


class TagbaseError(Exception):
    """Base class for all domain errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


# --- categories schema ---

class UnknownKindKeyword(TagbaseError):
    def __init__(self, cell: str, group: str = "", tag: str = ""):
        self.cell = cell
        self.group = group
        self.tag = tag
        where = f" (group {group!r}, tag {tag!r})" if tag else ""
        super().__init__(f"unknown tag kind keyword {cell!r}{where}")


class DuplicateTagName(TagbaseError):
    def __init__(self, tag_name: str):
        self.tag_name = tag_name
        super().__init__(f"tag name {tag_name!r} defined more than once")


class DuplicateGroupName(TagbaseError):
    def __init__(self, group: str):
        self.group = group
        super().__init__(f"group name {group!r} defined more than once")


class DuplicateOption(TagbaseError):
    def __init__(self, tag: str, option: str):
        self.tag = tag
        self.option = option
        super().__init__(f"option {option!r} listed more than once for tag {tag!r}")


class OptionContainsSeparator(TagbaseError):
    def __init__(self, tag: str, option: str):
        self.tag = tag
        self.option = option
        super().__init__(
            f"option {option!r} of tag {tag!r} contains ';', which is reserved "
            "for joining multi-select values"
        )


class MissingOptions(TagbaseError):
    def __init__(self, tag: str):
        self.tag = tag
        super().__init__(f"selection tag {tag!r} defines no options")


class NonBlankOptionRow(TagbaseError):
    def __init__(self, tag: str, cell: str = ""):
        self.tag = tag
        self.cell = cell
        super().__init__(
            f"tag {tag!r} is not a selection kind but has option cells (first: {cell!r})"
        )


class InvalidOption(TagbaseError):
    def __init__(self, tag: str, option: str, reason: str = ""):
        self.tag = tag
        self.option = option
        self.reason = reason
        msg = f"invalid option {option!r} for tag {tag!r}"
        super().__init__(msg + (f": {reason}" if reason else ""))


class InvalidTagName(TagbaseError):
    def __init__(self, tag_name: str, reason: str):
        self.tag_name = tag_name
        self.reason = reason
        super().__init__(f"invalid tag name {tag_name!r}: {reason}")


class EmptyGroup(TagbaseError):
    def __init__(self, group: str):
        self.group = group
        super().__init__(f"group {group!r} defines no tags")


class EmptySchema(TagbaseError):
    def __init__(self) -> None:
        super().__init__("schema defines no tags")


class MalformedCategories(TagbaseError):
    def __init__(self, group: str, reason: str):
        self.group = group
        self.reason = reason
        super().__init__(f"categories table {group!r}: {reason}")


# --- Zotero export parsing ---

class MissingRequiredColumn(TagbaseError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"export is missing required column {column!r}")


class DuplicateKey(TagbaseError):
    def __init__(self, key: str, rows: tuple[int, ...] = ()):
        self.key = key
        self.rows = rows
        at = f" (rows {', '.join(map(str, rows))})" if rows else ""
        super().__init__(f"duplicate key {key!r}{at}")


class MalformedCsv(TagbaseError):
    def __init__(self, row: int, reason: str = ""):
        self.row = row
        self.reason = reason
        super().__init__(f"malformed CSV at row {row}" + (f": {reason}" if reason else ""))


class AmbiguousSignature(TagbaseError):
    def __init__(self, signature: str, keys: tuple[str, ...]):
        self.signature = signature
        self.keys = keys
        super().__init__(
            f"signature {signature!r} matches multiple records: {', '.join(keys)}"
        )


# --- database ---

class ColumnNameCollision(TagbaseError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"tag name {column!r} collides with a citation column")


class MissingKeyColumn(TagbaseError):
    def __init__(self) -> None:
        super().__init__('database CSV has no "Key" column')


class InvalidCellValue(TagbaseError):
    """Raised on strict loads/conforms instead of quarantining the cell."""

    def __init__(self, key: str, tag: str, value: str, reason: str = ""):
        self.key = key
        self.tag = tag
        self.value = value
        self.reason = reason
        msg = f"row {key!r}, tag {tag!r}: invalid value {value!r}"
        super().__init__(msg + (f" ({reason})" if reason else ""))


# --- tagging ---

class UnknownKey(TagbaseError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"no row with key {key!r}")


class UnknownTag(TagbaseError):
    def __init__(self, tag: str):
        self.tag = tag
        super().__init__(f"no tag named {tag!r}")


class KindMismatch(TagbaseError):
    def __init__(self, tag: str, got: str):
        self.tag = tag
        self.got = got
        super().__init__(f"value kind {got!r} does not match the kind of tag {tag!r}")


class UnknownOption(TagbaseError):
    def __init__(self, tag: str, option: str):
        self.tag = tag
        self.option = option
        super().__init__(f"{option!r} is not an option of tag {tag!r}")


# --- reconcile ---

class ColumnSetMismatch(TagbaseError):
    def __init__(self, details: str):
        self.details = details
        super().__init__(f"databases have different column sets: {details}")


class DuplicateKeyConflict(TagbaseError):
    def __init__(self, keys: tuple[str, ...]):
        self.keys = keys
        super().__init__(
            f"duplicate keys across merged databases: {', '.join(sorted(keys))}"
        )


# --- filter language / query ---

class ParseError(TagbaseError):
    def __init__(self, position: int, expected: tuple[str, ...], found: str = ""):
        self.position = position
        self.expected = expected
        self.found = found
        what = found if found else "end of input"
        super().__init__(
            f"parse error at position {position}: found {what}, "
            f"expected {' or '.join(expected)}"
        )


class UnknownColumn(TagbaseError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"no column named {column!r}")


class KindNotTabulable(TagbaseError):
    def __init__(self, tag: str, kind: str = ""):
        self.tag = tag
        self.kind = kind
        super().__init__(
            f"tag {tag!r} cannot be cross-tabulated"
            + (f" (kind {kind})" if kind else "")
        )


# --- report ---

class UnknownNote(TagbaseError):
    def __init__(self, note: str):
        self.note = note
        super().__init__(f"no note field named {note!r}")


class MalformedRequest(TagbaseError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"malformed request: {reason}")


# --- service / workspace ---

class UnknownDatabase(TagbaseError):
    def __init__(self, name: str):
        self.database = name
        super().__init__(f"no database named {name!r}")


class DuplicateDatabase(TagbaseError):
    def __init__(self, name: str):
        self.database = name
        super().__init__(f"a database named {name!r} already exists")


class InvalidDatabaseName(TagbaseError):
    def __init__(self, name: str):
        self.database = name
        super().__init__(
            f"invalid database name {name!r}: use letters, digits, '-' or '_'"
        )


class LockTimeout(TagbaseError):
    def __init__(self, name: str):
        self.database = name
        super().__init__(f"database {name!r} is busy; writer lock not acquired in time")


class StorageError(TagbaseError):
    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"storage failure: {reason}")


class SchemaMismatch(TagbaseError):
    def __init__(self, details: str):
        self.details = details
        super().__init__(f"databases were built against different schemas: {details}")


class UnknownVersion(TagbaseError):
    def __init__(self, filename: str):
        self.filename = filename
        super().__init__(f"no saved snapshot named {filename!r}")
