"""JSON-friendly views of the core result types.

The HTTP service and the CLI's --json mode both go through these
functions, so a given operation yields structurally identical results on
either surface.
"""

from __future__ import annotations

from typing import Any

from .database import ConformReport, Row, TagDatabase, serialize_cell
from .query import CrossTab
from .reconcile import DiffReport, MergeReport, RelinkReport, SyncReport
from .schema import CategoriesSchema, SchemaDelta
from .tagging import OptionCounts


def schema_json(schema: CategoriesSchema) -> dict[str, Any]:
    return {
        "fingerprint": schema.fingerprint,
        "groups": [
            {
                "name": group_name,
                "tags": [
                    {
                        "name": tag.name,
                        "kind": tag.kind.value,
                        "options": list(tag.options),
                    }
                    for tag in tags
                ],
            }
            for group_name, tags in schema.groups
        ],
    }


def row_json(key: str, row: Row) -> dict[str, Any]:
    return {
        "key": key,
        "citation": dict(row.citation),
        "tags": {name: serialize_cell(value) for name, value in row.tags.items()},
    }


def database_rows_json(db: TagDatabase, keys: list[str]) -> list[dict[str, Any]]:
    return [row_json(key, db.rows[key]) for key in keys]


def counts_json(counts: OptionCounts) -> dict[str, Any]:
    return {
        "rows_counted": counts.rows_counted,
        "tags": {tag: dict(labels) for tag, labels in counts.tags.items()},
    }


def crosstab_json(table: CrossTab) -> dict[str, Any]:
    return {
        "row_tag": table.row_tag,
        "col_tag": table.col_tag,
        "row_labels": list(table.row_labels),
        "col_labels": list(table.col_labels),
        "counts": [list(row) for row in table.counts],
        "filtered_row_count": table.filtered_row_count,
    }


def schema_delta_json(delta: SchemaDelta) -> dict[str, Any]:
    return {
        "added_tags": list(delta.added_tags),
        "removed_tags": list(delta.removed_tags),
        "kind_changed": [
            [name, old.value, new.value] for name, old, new in delta.kind_changed
        ],
        "added_options": [list(pair) for pair in delta.added_options],
        "removed_options": [list(pair) for pair in delta.removed_options],
    }


def sync_report_json(report: SyncReport) -> dict[str, Any]:
    return {
        "added": list(report.added),
        "removed": [row_json(key, row) for key, row in report.removed.items()],
        "citation_updated": {
            key: {col: [old, new] for col, (old, new) in changes.items()}
            for key, changes in report.citation_updated.items()
        },
    }


def conform_report_json(report: ConformReport) -> dict[str, Any]:
    return {
        "policy": report.policy,
        "tags_added": list(report.tags_added),
        "tags_removed": [[name, count] for name, count in report.tags_removed],
        "cells_invalidated": [
            {"key": key, "tag": tag, "value": value}
            for key, tag, value in report.cells_invalidated
        ],
        "schema_delta": schema_delta_json(report.delta) if report.delta else None,
    }


def diff_report_json(report: DiffReport) -> dict[str, Any]:
    return {
        "keys_only_in_a": list(report.keys_only_in_a),
        "keys_only_in_b": list(report.keys_only_in_b),
        "columns_only_in_a": list(report.columns_only_in_a),
        "columns_only_in_b": list(report.columns_only_in_b),
        "changed_cells": [
            {"key": key, "column": column, "a": a, "b": b}
            for key, column, a, b in report.changed_cells
        ],
    }


def merge_report_json(report: MergeReport) -> dict[str, Any]:
    return {
        "source_row_counts": list(report.source_row_counts),
        "duplicates": [
            {"key": key, "winner_index": winner, "policy": policy}
            for key, winner, policy in report.duplicates
        ],
    }


def relink_report_json(report: RelinkReport) -> dict[str, Any]:
    return {
        "matched": [
            {"old_key": old, "new_key": new, "matched_by": by}
            for old, new, by in report.matched
        ],
        "unmatched_rows": list(report.unmatched_rows),
        "unmatched_records": list(report.unmatched_records),
        "ambiguous": list(report.ambiguous),
    }
