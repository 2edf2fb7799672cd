"""The user-authored categories schema: tag groups, kinds, options, notes.

The canonical machine format is a bundle of per-group CSV tables (one table
per group; row 1 tag names, row 2 kind keywords, rows 3+ options for
selection kinds). A multi-sheet workbook with the same per-sheet layout is
accepted as an equivalent input; hidden sheets are ignored.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Union

from . import errors
from ._xlsx import read_workbook_tables

# Citation columns every database carries; tag names may not shadow them.
CITATION_COLUMNS = (
    "Key",
    "Item Type",
    "Author",
    "Publication Year",
    "Title",
    "Publication Title",
    "DOI",
    "Url",
    "Abstract Note",
    "Date Added",
)

# Pseudo-option shown for untagged rows in counts and cross-tabs.
NONE_LABEL = "(none)"


class TagKind(Enum):
    SINGLE = "single"
    MULTI = "multi"
    DATE = "date"
    TEXT = "text"
    NOTE = "note"

    @property
    def is_selection(self) -> bool:
        return self in (TagKind.SINGLE, TagKind.MULTI)


# Accepted kind keywords, matched case-insensitively with whitespace collapsed.
KIND_KEYWORDS = {
    "single": TagKind.SINGLE,
    "single selection": TagKind.SINGLE,
    "multi": TagKind.MULTI,
    "multi-selection": TagKind.MULTI,
    "multi selection": TagKind.MULTI,
    "date": TagKind.DATE,
    "text": TagKind.TEXT,
    "text field": TagKind.TEXT,
    "note": TagKind.NOTE,
    "notes": TagKind.NOTE,
}


def _normalize_keyword(cell: str) -> str:
    return " ".join(cell.split()).lower()


@dataclass(frozen=True)
class TagDefinition:
    name: str
    kind: TagKind
    options: tuple[str, ...] = ()
    group: str = ""


@dataclass(frozen=True)
class CategoriesSchema:
    """Ordered tag groups plus a content fingerprint of the canonical form."""

    groups: tuple[tuple[str, tuple[TagDefinition, ...]], ...]
    fingerprint: str = ""

    @staticmethod
    def build(groups: Iterable[tuple[str, Iterable[TagDefinition]]]) -> "CategoriesSchema":
        """Validate and fingerprint; the only route that guarantees invariants."""
        frozen = tuple((g, tuple(tags)) for g, tags in groups)
        schema = CategoriesSchema(groups=frozen, fingerprint="")
        schema.validate()
        return CategoriesSchema(groups=frozen, fingerprint=_fingerprint(frozen))

    def validate(self) -> None:
        seen_groups: set[str] = set()
        seen_tags: set[str] = set()
        total = 0
        for group, tags in self.groups:
            if group in seen_groups:
                raise errors.DuplicateGroupName(group)
            seen_groups.add(group)
            if not tags:
                raise errors.EmptyGroup(group)
            for tag in tags:
                _validate_tag(tag)
                if tag.name in seen_tags:
                    raise errors.DuplicateTagName(tag.name)
                if tag.name in CITATION_COLUMNS:
                    raise errors.ColumnNameCollision(tag.name)
                seen_tags.add(tag.name)
                total += 1
        if total == 0:
            raise errors.EmptySchema()

    # --- lookups ---

    def tags(self) -> tuple[TagDefinition, ...]:
        return tuple(t for _, group_tags in self.groups for t in group_tags)

    def tag_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tags())

    def data_tag_names(self) -> tuple[str, ...]:
        """Tag columns in save order: every non-note kind, schema order."""
        return tuple(t.name for t in self.tags() if t.kind is not TagKind.NOTE)

    def note_names(self) -> tuple[str, ...]:
        return tuple(t.name for t in self.tags() if t.kind is TagKind.NOTE)

    def find(self, name: str) -> TagDefinition | None:
        for t in self.tags():
            if t.name == name:
                return t
        return None

    def tag(self, name: str) -> TagDefinition:
        found = self.find(name)
        if found is None:
            raise errors.UnknownTag(name)
        return found


def _validate_tag(tag: TagDefinition) -> None:
    if not tag.name or not tag.name.strip():
        raise errors.InvalidTagName(tag.name, "empty name")
    if "\n" in tag.name or "\r" in tag.name:
        raise errors.InvalidTagName(tag.name, "contains a newline")
    if tag.kind.is_selection:
        if not tag.options:
            raise errors.MissingOptions(tag.name)
        seen: set[str] = set()
        for opt in tag.options:
            _validate_option(tag.name, opt)
            if opt in seen:
                raise errors.DuplicateOption(tag.name, opt)
            seen.add(opt)
    elif tag.options:
        raise errors.NonBlankOptionRow(tag.name, tag.options[0])


def validate_option_string(tag_name: str, option: str) -> None:
    """Shared rules for a single option string (also used by option renames)."""
    _validate_option(tag_name, option)


def _validate_option(tag_name: str, option: str) -> None:
    if not option:
        raise errors.InvalidOption(tag_name, option, "empty option")
    if option != option.strip():
        raise errors.InvalidOption(tag_name, option, "leading/trailing whitespace")
    if ";" in option:
        raise errors.OptionContainsSeparator(tag_name, option)
    if option == NONE_LABEL:
        raise errors.InvalidOption(
            tag_name, option, f"{NONE_LABEL!r} is reserved for untagged rows"
        )


# --- parsing ---

CategoriesSource = Union[str, Path, bytes, Mapping[str, Union[str, bytes]]]


def parse_categories(source: CategoriesSource) -> CategoriesSchema:
    """Parse a categories bundle into a validated schema.

    Accepts a directory of per-group CSV tables (group name = file stem,
    files read in sorted-name order), a .xlsx workbook path, raw workbook
    bytes, or an ordered mapping of group name to CSV table text.
    """
    tables = _load_tables(source)
    groups = []
    for group, rows in tables:
        groups.append((group, tuple(_parse_group_table(group, rows))))
    return CategoriesSchema.build(groups)


def _load_tables(source: CategoriesSource) -> list[tuple[str, list[list[str]]]]:
    if isinstance(source, bytes):
        return read_workbook_tables(source)
    if isinstance(source, Mapping):
        return [(g, _read_csv_table(data)) for g, data in source.items()]
    path = Path(source)
    if path.is_dir():
        tables = []
        for f in sorted(path.glob("*.csv")):
            tables.append((f.stem, _read_csv_table(f.read_bytes())))
        if not tables:
            raise errors.EmptySchema()
        return tables
    if path.suffix.lower() in (".xlsx", ".xlsm"):
        return read_workbook_tables(path.read_bytes())
    raise errors.MalformedCategories(
        str(source), "expected a directory of CSV tables or an .xlsx workbook"
    )


def _read_csv_table(data: Union[str, bytes]) -> list[list[str]]:
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    return [row for row in csv.reader(io.StringIO(data))]


def _parse_group_table(group: str, rows: list[list[str]]) -> list[TagDefinition]:
    if len(rows) < 2:
        raise errors.MalformedCategories(
            group, "needs at least a tag-name row and a kind row"
        )
    width = max(len(r) for r in rows)
    padded = [r + [""] * (width - len(r)) for r in rows]
    names, kinds = padded[0], padded[1]
    option_rows = padded[2:]

    tags: list[TagDefinition] = []
    for col in range(width):
        name = names[col].strip()
        kind_cell = kinds[col].strip()
        below = [r[col] for r in option_rows]
        if not name:
            if kind_cell or any(c.strip() for c in below):
                raise errors.MalformedCategories(
                    group, f"column {col + 1} has content but no tag name"
                )
            continue  # blank trailing column
        if "\n" in name or "\r" in name:
            raise errors.InvalidTagName(name, "contains a newline")
        kind = KIND_KEYWORDS.get(_normalize_keyword(kind_cell))
        if kind is None:
            raise errors.UnknownKindKeyword(kind_cell, group, name)

        if kind.is_selection:
            options: list[str] = []
            for cell in below:
                opt = cell.strip()
                if not opt:
                    continue
                _validate_option(name, opt)
                if opt in options:
                    raise errors.DuplicateOption(name, opt)
                options.append(opt)
            if not options:
                raise errors.MissingOptions(name)
        else:
            for cell in below:
                if cell.strip():
                    raise errors.NonBlankOptionRow(name, cell.strip())
            options = []
        tags.append(TagDefinition(name, kind, tuple(options), group))
    if not tags:
        raise errors.EmptyGroup(group)
    return tags


# --- serialization ---

def serialize_categories(schema: CategoriesSchema) -> dict[str, bytes]:
    """Render each group back to its CSV table form (ordered by schema)."""
    out: dict[str, bytes] = {}
    for group, tags in schema.groups:
        depth = max((len(t.options) for t in tags), default=0)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow([t.name for t in tags])
        writer.writerow([t.kind.value for t in tags])
        for i in range(depth):
            writer.writerow(
                [t.options[i] if i < len(t.options) else "" for t in tags]
            )
        out[group] = buf.getvalue().encode("utf-8")
    return out


def write_categories(schema: CategoriesSchema, directory: Union[str, Path]) -> list[Path]:
    """Write the per-group CSV bundle to a directory; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for group, data in serialize_categories(schema).items():
        if "/" in group or "\\" in group or group.startswith("."):
            raise ValueError(f"group name {group!r} is not a safe filename")
        target = directory / f"{group}.csv"
        target.write_bytes(data)
        paths.append(target)
    return paths


def _fingerprint(groups: tuple[tuple[str, tuple[TagDefinition, ...]], ...]) -> str:
    digest = hashlib.sha256()
    for group, data in serialize_categories(CategoriesSchema(groups, "")).items():
        digest.update(group.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(data)
        digest.update(b"\x00")
    return digest.hexdigest()


# --- diffing ---

@dataclass(frozen=True)
class SchemaDelta:
    added_tags: tuple[str, ...] = ()
    removed_tags: tuple[str, ...] = ()
    kind_changed: tuple[tuple[str, TagKind, TagKind], ...] = ()
    added_options: tuple[tuple[str, str], ...] = ()
    removed_options: tuple[tuple[str, str], ...] = ()

    def is_empty(self) -> bool:
        return not (
            self.added_tags
            or self.removed_tags
            or self.kind_changed
            or self.added_options
            or self.removed_options
        )


def schema_diff(old: CategoriesSchema, new: CategoriesSchema) -> SchemaDelta:
    """Tag/kind/option membership differences between two schemas."""
    old_tags = {t.name: t for t in old.tags()}
    new_tags = {t.name: t for t in new.tags()}

    added = tuple(n for n in new_tags if n not in old_tags)
    removed = tuple(n for n in old_tags if n not in new_tags)
    kind_changed = []
    added_options = []
    removed_options = []
    for name, old_tag in old_tags.items():
        new_tag = new_tags.get(name)
        if new_tag is None:
            continue
        if new_tag.kind is not old_tag.kind:
            kind_changed.append((name, old_tag.kind, new_tag.kind))
        for opt in new_tag.options:
            if opt not in old_tag.options:
                added_options.append((name, opt))
        for opt in old_tag.options:
            if opt not in new_tag.options:
                removed_options.append((name, opt))
    return SchemaDelta(
        added_tags=added,
        removed_tags=removed,
        kind_changed=tuple(kind_changed),
        added_options=tuple(added_options),
        removed_options=tuple(removed_options),
    )
