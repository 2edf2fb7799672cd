"""Assigning, clearing, counting and maintaining tag values on papers."""

from __future__ import annotations

from dataclasses import dataclass

from . import errors
from .database import (
    EMPTY,
    CellValue,
    Empty,
    MultiOptions,
    NoteValue,
    Row,
    SingleOption,
    TagDatabase,
    TextValue,
    canonical_multi,
    validate_cell,
)
from .schema import (
    NONE_LABEL,
    CategoriesSchema,
    SchemaDelta,
    TagDefinition,
    TagKind,
    validate_option_string,
)

# Label used for non-empty cells when counting date/text/note tags.
TAGGED_LABEL = "(tagged)"


def _replace_row_cell(db: TagDatabase, key: str, tag_name: str, cell: CellValue) -> TagDatabase:
    rows = dict(db.rows)
    row = rows[key]
    tags = dict(row.tags)
    tags[tag_name] = cell
    rows[key] = Row(citation=dict(row.citation), tags=tags)
    return TagDatabase(schema=db.schema, rows=rows)


def _normalize(value: CellValue, tag: TagDefinition) -> CellValue:
    """Canonicalize before storing: multi order/dedupe, empty text -> Empty."""
    if isinstance(value, MultiOptions):
        return canonical_multi(value.options, tag)
    if isinstance(value, (TextValue, NoteValue)) and value.text == "":
        return EMPTY
    return value


def assign(db: TagDatabase, key: str, tag_name: str, value: CellValue) -> TagDatabase:
    """Replace one cell; the value variant must match the tag's kind."""
    db.row(key)
    tag = db.schema.tag(tag_name)
    value = _normalize(value, tag)
    validate_cell(value, tag)
    return _replace_row_cell(db, key, tag_name, value)


def toggle_option(db: TagDatabase, key: str, tag_name: str, option: str) -> TagDatabase:
    """Flip one option of a multi-select cell; an emptied set becomes Empty."""
    row = db.row(key)
    tag = db.schema.tag(tag_name)
    if tag.kind is not TagKind.MULTI:
        raise errors.KindMismatch(tag_name, tag.kind.value)
    if option not in tag.options:
        raise errors.UnknownOption(tag_name, option)
    current = row.tags.get(tag_name, EMPTY)
    members = set(current.options) if isinstance(current, MultiOptions) else set()
    if option in members:
        members.discard(option)
    else:
        members.add(option)
    return _replace_row_cell(db, key, tag_name, canonical_multi(members, tag))


def clear(db: TagDatabase, key: str, tag_name: str) -> TagDatabase:
    db.row(key)
    db.schema.tag(tag_name)
    return _replace_row_cell(db, key, tag_name, EMPTY)


@dataclass
class OptionCounts:
    """Per-tag label counts over a row subset.

    Selection tags count every option plus "(none)" for untagged rows;
    date/text/note tags report only "(tagged)" vs "(none)".
    """

    rows_counted: int
    tags: dict[str, dict[str, int]]


def option_counts(
    db: TagDatabase,
    schema: CategoriesSchema,
    filter_keys: set[str] | None = None,
) -> OptionCounts:
    if filter_keys is None:
        keys = list(db.rows)
    else:
        for key in filter_keys:
            if key not in db.rows:
                raise errors.UnknownKey(key)
        keys = [k for k in db.rows if k in filter_keys]

    counts: dict[str, dict[str, int]] = {}
    for tag in schema.tags():
        if tag.kind.is_selection:
            labels = tag.options + (NONE_LABEL,)
        else:
            labels = (TAGGED_LABEL, NONE_LABEL)
        per_tag = {label: 0 for label in labels}
        for key in keys:
            cell = db.rows[key].tags.get(tag.name, EMPTY)
            if isinstance(cell, Empty):
                per_tag[NONE_LABEL] += 1
            elif isinstance(cell, SingleOption):
                per_tag[cell.option] += 1
            elif isinstance(cell, MultiOptions):
                for opt in cell.options:
                    per_tag[opt] += 1
            else:
                per_tag[TAGGED_LABEL] += 1
        counts[tag.name] = per_tag
    return OptionCounts(rows_counted=len(keys), tags=counts)


def replace_option(
    db: TagDatabase,
    schema: CategoriesSchema,
    tag_name: str,
    old: str,
    new: str,
) -> tuple[TagDatabase, int, SchemaDelta]:
    """Rename (or merge) a tag option across schema and every cell.

    Returns the updated database (with its schema's option list already
    renamed), the number of cells modified, and the SchemaDelta the caller
    needs to mirror into the categories file.
    """
    tag = schema.tag(tag_name)
    if not tag.kind.is_selection:
        raise errors.KindMismatch(tag_name, tag.kind.value)
    if old not in tag.options:
        raise errors.UnknownOption(tag_name, old)
    validate_option_string(tag_name, new)
    if old == new:
        return db, 0, SchemaDelta()

    merging = new in tag.options
    if merging:
        new_options = tuple(o for o in tag.options if o != old)
    else:
        new_options = tuple(new if o == old else o for o in tag.options)
    new_tag = TagDefinition(tag.name, tag.kind, new_options, tag.group)
    new_schema = CategoriesSchema.build(
        (
            (group, tuple(new_tag if t.name == tag_name else t for t in tags))
            for group, tags in schema.groups
        )
    )

    changed = 0
    rows: dict[str, Row] = {}
    for key, row in db.rows.items():
        cell = row.tags.get(tag_name, EMPTY)
        replacement = None
        if isinstance(cell, SingleOption) and cell.option == old:
            replacement = SingleOption(new)
        elif isinstance(cell, MultiOptions) and old in cell.options:
            members = {new if o == old else o for o in cell.options}
            replacement = canonical_multi(members, new_tag)
        if replacement is None:
            rows[key] = row
        else:
            tags = dict(row.tags)
            tags[tag_name] = replacement
            rows[key] = Row(citation=dict(row.citation), tags=tags)
            changed += 1

    delta = SchemaDelta(
        added_options=() if merging else ((tag_name, new),),
        removed_options=((tag_name, old),),
    )
    return TagDatabase(schema=new_schema, rows=rows), changed, delta


def delete_tag_data(db: TagDatabase, tag_name: str) -> TagDatabase:
    """Blank every cell of one tag; the column itself stays."""
    db.schema.tag(tag_name)
    rows = {}
    for key, row in db.rows.items():
        tags = dict(row.tags)
        tags[tag_name] = EMPTY
        rows[key] = Row(citation=dict(row.citation), tags=tags)
    return TagDatabase(schema=db.schema, rows=rows)
