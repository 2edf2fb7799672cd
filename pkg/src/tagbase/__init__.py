"""Link a Zotero reference library to your own tagging schema.

The database is a plain CSV with one row per paper: a fixed block of
citation columns copied from the export, then one column per tag defined
in a user-authored categories schema. Everything here operates on
in-memory snapshot values; saving always writes a new timestamped file.
"""

from .citations import ZoteroExport, parse_zotero_export
from .database import (
    ConformReport,
    Row,
    TagDatabase,
    conform,
    create_database,
    load_database,
    parse_cell,
    save_database,
    serialize_cell,
)
from .errors import TagbaseError
from .query import CrossTab, crosstab, eval_filter, export_table, parse_filter
from .reconcile import (
    DiffReport,
    MergePolicy,
    MergeReport,
    RelinkReport,
    SyncReport,
    diff,
    merge,
    relink,
    sync,
)
from .report import ReportSpec, build_report
from .schema import (
    CategoriesSchema,
    TagDefinition,
    TagKind,
    parse_categories,
    schema_diff,
    serialize_categories,
    write_categories,
)
from .tagging import (
    OptionCounts,
    assign,
    clear,
    option_counts,
    replace_option,
    toggle_option,
)

__version__ = "0.1.0"

__all__ = [
    "CategoriesSchema",
    "ConformReport",
    "CrossTab",
    "DiffReport",
    "MergePolicy",
    "MergeReport",
    "OptionCounts",
    "RelinkReport",
    "ReportSpec",
    "Row",
    "SyncReport",
    "TagDatabase",
    "TagDefinition",
    "TagKind",
    "TagbaseError",
    "ZoteroExport",
    "assign",
    "build_report",
    "clear",
    "conform",
    "create_database",
    "crosstab",
    "diff",
    "eval_filter",
    "export_table",
    "load_database",
    "merge",
    "option_counts",
    "parse_categories",
    "parse_cell",
    "parse_filter",
    "parse_zotero_export",
    "relink",
    "replace_option",
    "save_database",
    "schema_diff",
    "serialize_categories",
    "serialize_cell",
    "sync",
    "toggle_option",
    "write_categories",
]
