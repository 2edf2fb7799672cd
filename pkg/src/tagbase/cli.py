"""Command-line front end.

Every mutating command writes a fresh timestamped CSV next to its input
(or in the working directory for commands that create a database) and
prints the created filename; inputs are never modified in place. Read
commands print their data on stdout and accept --json for a
machine-readable envelope. Exit codes: 0 success, 1 validation or parse
error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

from . import errors, jsonio
from .citations import parse_zotero_export
from .database import (
    ConformReport,
    TagDatabase,
    load_database,
    parse_cell,
    parse_timestamp_filename,
    save_database,
    timestamp_filename,
)
from .database import create_database as build_database
from .query import crosstab, eval_filter, export_table, parse_filter
from .reconcile import MergePolicy, diff_csv, merge_csv, relink, sync
from .report import ReportSpec, build_report
from .schema import parse_categories, write_categories
from .tagging import assign, clear, option_counts, replace_option, toggle_option

_ONE_SECOND = datetime.timedelta(seconds=1)


class _ArgumentParser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 2 for I/O."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# --- shared plumbing ---

def _load(db_path: str, categories_path: str) -> tuple[TagDatabase, ConformReport]:
    schema = parse_categories(categories_path)
    db, report = load_database(Path(db_path).read_bytes(), schema)
    _warn_conform(report)
    return db, report


def _warn_conform(report: ConformReport) -> None:
    for name, count in report.tags_removed:
        print(
            f"note: column {name!r} is not in the schema; "
            f"dropped ({count} non-empty cells)",
            file=sys.stderr,
        )
    for key, tag, value in report.cells_invalidated:
        print(
            f"note: {key}/{tag}: value {value!r} does not fit the schema; cleared",
            file=sys.stderr,
        )


def _base_of(args, db_flag: str = "db") -> str:
    out = getattr(args, "out", None)
    if out:
        return out
    name = Path(getattr(args, db_flag)).name
    try:
        base, _ = parse_timestamp_filename(name)
    except ValueError:
        base = Path(name).stem
    return base


def _write_snapshot(db: TagDatabase, base: str, directory: Path) -> Path:
    instant = datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0)
    while (directory / timestamp_filename(base, instant)).exists():
        instant += _ONE_SECOND
    filename, payload = save_database(db, base, instant)
    path = directory / filename
    with open(path, "xb") as f:
        f.write(payload)
    return path


def _write_payload(payload: bytes, base: str, directory: Path) -> Path:
    instant = datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0)
    while (directory / timestamp_filename(base, instant)).exists():
        instant += _ONE_SECOND
    path = directory / timestamp_filename(base, instant)
    with open(path, "xb") as f:
        f.write(payload)
    return path


def _emit(args, result, text_renderer) -> None:
    """Print result as JSON envelope or through the plain-text renderer."""
    if getattr(args, "json", False):
        print(json.dumps({"ok": True, "result": result}, indent=2))
    else:
        text_renderer(result)


def _parse_filter_flag(text: str | None):
    if text is None or not text.strip():
        return None
    return parse_filter(text)


# --- subcommand handlers ---

def _cmd_new(args) -> int:
    schema = parse_categories(args.categories)
    export = parse_zotero_export(Path(args.export).read_bytes())
    db = build_database(export, schema)
    path = _write_snapshot(db, args.out, Path.cwd())
    print(path.name)
    return 0


def _cmd_tag(args) -> int:
    db, _ = _load(args.db, args.categories)
    if args.action == "set":
        if args.value is None:
            raise errors.MalformedRequest("tag set needs --value")
        tag = db.schema.tag(args.tag)
        if args.value == "":
            db = clear(db, args.key, args.tag)
        else:
            db = assign(db, args.key, args.tag, parse_cell(args.value, tag))
    elif args.action == "clear":
        db = clear(db, args.key, args.tag)
    else:  # toggle
        if args.value is None:
            raise errors.MalformedRequest("tag toggle needs --value <option>")
        db = toggle_option(db, args.key, args.tag, args.value)
    path = _write_snapshot(db, _base_of(args), Path(args.db).resolve().parent)
    print(path.name)
    return 0


def _cmd_sync(args) -> int:
    db, _ = _load(args.db, args.categories)
    export = parse_zotero_export(Path(args.export).read_bytes())
    new_db, report = sync(db, export)
    path = _write_snapshot(new_db, _base_of(args), Path(args.db).resolve().parent)
    for key in report.added:
        print(f"added {key}", file=sys.stderr)
    for key in report.removed:
        print(f"removed {key}", file=sys.stderr)
    for key, changes in report.citation_updated.items():
        cols = ", ".join(sorted(changes))
        print(f"updated {key}: {cols}", file=sys.stderr)
    print(path.name)
    return 0


def _cmd_diff(args) -> int:
    report = diff_csv(Path(args.a).read_bytes(), Path(args.b).read_bytes())

    def render(result) -> None:
        for key in result["keys_only_in_a"]:
            print(f"only in a: {key}")
        for key in result["keys_only_in_b"]:
            print(f"only in b: {key}")
        for col in result["columns_only_in_a"]:
            print(f"column only in a: {col}")
        for col in result["columns_only_in_b"]:
            print(f"column only in b: {col}")
        for cell in result["changed_cells"]:
            print(
                f"changed {cell['key']}/{cell['column']}: "
                f"{cell['a']!r} -> {cell['b']!r}"
            )
        if report.is_empty():
            print("identical")

    _emit(args, jsonio.diff_report_json(report), render)
    return 0


def _cmd_merge(args) -> int:
    payloads = [Path(f).read_bytes() for f in args.files]
    merged, report = merge_csv(payloads, MergePolicy(args.policy))
    path = _write_payload(merged, args.out, Path.cwd())
    for key, winner, policy in report.duplicates:
        print(
            f"duplicate {key}: kept copy from input {winner + 1} ({policy})",
            file=sys.stderr,
        )
    print(path.name)
    return 0


def _cmd_conform(args) -> int:
    schema = parse_categories(args.categories)
    db, report = load_database(
        Path(args.db).read_bytes(), schema, strict=args.strict
    )
    for name in report.tags_added:
        print(f"added tag column {name!r}", file=sys.stderr)
    _warn_conform(report)
    path = _write_snapshot(db, _base_of(args), Path(args.db).resolve().parent)
    print(path.name)
    return 0


def _cmd_replace_option(args) -> int:
    db, _ = _load(args.db, args.categories)
    new_db, changed, delta = replace_option(
        db, db.schema, args.tag, args.old, args.new
    )
    print(f"cells changed: {changed}", file=sys.stderr)
    if args.categories_out:
        write_categories(new_db.schema, args.categories_out)
        print(f"updated categories written to {args.categories_out}", file=sys.stderr)
    elif not delta.is_empty():
        print(
            "note: update the categories bundle to match "
            f"(option {args.old!r} -> {args.new!r} on tag {args.tag!r})",
            file=sys.stderr,
        )
    path = _write_snapshot(new_db, _base_of(args), Path(args.db).resolve().parent)
    print(path.name)
    return 0


def _cmd_counts(args) -> int:
    db, _ = _load(args.db, args.categories)
    expr = _parse_filter_flag(args.filter)
    keys = set(eval_filter(db, expr)) if expr is not None else None
    counts = option_counts(db, db.schema, keys)

    def render(result) -> None:
        print(f"rows counted: {result['rows_counted']}")
        for tag, labels in result["tags"].items():
            print(f"{tag}:")
            for label, count in labels.items():
                print(f"  {label}: {count}")

    _emit(args, jsonio.counts_json(counts), render)
    return 0


def _cmd_crosstab(args) -> int:
    db, _ = _load(args.db, args.categories)
    table = crosstab(
        db, db.schema, args.rows, args.cols, _parse_filter_flag(args.filter)
    )

    def render(result) -> None:
        labels = result["col_labels"]
        width = max(len(label) for label in result["row_labels"] + [""])
        print(" " * width + "  " + "  ".join(labels))
        for row_label, counts in zip(result["row_labels"], result["counts"]):
            cells = "  ".join(
                str(n).rjust(len(label)) for label, n in zip(labels, counts)
            )
            print(row_label.ljust(width) + "  " + cells)

    _emit(args, jsonio.crosstab_json(table), render)
    return 0


def _cmd_filter(args) -> int:
    db, _ = _load(args.db, args.categories)
    expr = parse_filter(args.expr)
    columns = args.columns if args.columns else list(db.header())
    data = export_table(db, columns, expr)
    if getattr(args, "json", False):
        keys = eval_filter(db, expr)
        result = {
            "total": len(keys),
            "rows": jsonio.database_rows_json(db, keys),
        }
        print(json.dumps({"ok": True, "result": result}, indent=2))
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    return 0


def _cmd_relink(args) -> int:
    db, _ = _load(args.db, args.categories)
    export = parse_zotero_export(Path(args.export).read_bytes())
    new_db, report = relink(db, export)
    for old, new, by in report.matched:
        print(f"matched {old} -> {new} ({by})", file=sys.stderr)
    for key in report.unmatched_rows:
        print(f"unmatched row {key}", file=sys.stderr)
    for sig in report.ambiguous:
        print(f"ambiguous signature {sig}", file=sys.stderr)
    path = _write_snapshot(new_db, _base_of(args), Path(args.db).resolve().parent)
    print(path.name)
    return 0


def _cmd_report(args) -> int:
    db, _ = _load(args.db, args.categories)
    spec_text = args.spec
    if not spec_text.lstrip().startswith("{"):
        spec_text = Path(spec_text).read_text(encoding="utf-8")
    try:
        spec = ReportSpec.from_json(spec_text)
    except (ValueError, KeyError, TypeError) as exc:
        raise errors.MalformedRequest(f"bad report spec: {exc}") from None
    html = build_report(db, db.schema, spec)
    Path(args.out).write_bytes(html)
    print(args.out)
    return 0


def _cmd_serve(args) -> int:
    from .service import run_server

    try:
        run_server(
            args.workspace,
            host=args.bind,
            port=args.port,
            static_dir=args.static,
            allow_remote=args.allow_remote,
        )
    except KeyboardInterrupt:
        pass
    return 0


# --- parser wiring ---

def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="tagbase",
        description="Tag and explore a reference library exported from Zotero.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_db_flags(p, out: bool = True):
        p.add_argument("--db", required=True, help="database CSV file")
        p.add_argument(
            "--categories", required=True,
            help="categories bundle: directory of per-group CSVs or an .xlsx file",
        )
        if out:
            p.add_argument(
                "--out", help="base name for the written file "
                "(default: derived from --db)",
            )

    p = sub.add_parser("new", help="create a database from a Zotero export")
    p.add_argument("--export", required=True)
    p.add_argument("--categories", required=True)
    p.add_argument("--out", required=True, help="base name of the new database")
    p.set_defaults(func=_cmd_new)

    p = sub.add_parser("tag", help="set, clear, or toggle one tag cell")
    p.add_argument("action", choices=("set", "clear", "toggle"))
    add_db_flags(p)
    p.add_argument("--key", required=True)
    p.add_argument("--tag", required=True)
    p.add_argument("--value", help="serialized value, or the option to toggle")
    p.set_defaults(func=_cmd_tag)

    p = sub.add_parser("sync", help="align the row set with a fresh export")
    add_db_flags(p)
    p.add_argument("--export", required=True)
    p.set_defaults(func=_cmd_sync)

    p = sub.add_parser("diff", help="compare two database files cell by cell")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_diff)

    p = sub.add_parser("merge", help="combine databases that share one schema")
    p.add_argument("--out", required=True)
    p.add_argument(
        "--policy", default="error",
        choices=[policy.value for policy in MergePolicy],
    )
    p.add_argument("files", nargs="+", help="database CSV files (two or more)")
    p.set_defaults(func=_cmd_merge)

    p = sub.add_parser("conform", help="re-shape a database to an evolved schema")
    add_db_flags(p)
    p.add_argument("--strict", action="store_true",
                   help="fail instead of clearing cells the schema rejects")
    p.set_defaults(func=_cmd_conform)

    p = sub.add_parser("replace-option", help="rename or merge a tag option")
    add_db_flags(p)
    p.add_argument("--tag", required=True)
    p.add_argument("--old", required=True)
    p.add_argument("--new", required=True)
    p.add_argument("--categories-out",
                   help="directory to write the updated categories bundle")
    p.set_defaults(func=_cmd_replace_option)

    p = sub.add_parser("counts", help="how often every option is used")
    add_db_flags(p, out=False)
    p.add_argument("--filter")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_counts)

    p = sub.add_parser("crosstab", help="counts matrix over two selection tags")
    add_db_flags(p, out=False)
    p.add_argument("--rows", required=True)
    p.add_argument("--cols", required=True)
    p.add_argument("--filter")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_crosstab)

    p = sub.add_parser("filter", help="print matching rows as CSV")
    add_db_flags(p, out=False)
    p.add_argument("--expr", required=True)
    p.add_argument("--columns", nargs="*")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("relink", help="re-key rows against another library's export")
    add_db_flags(p)
    p.add_argument("--export", required=True)
    p.set_defaults(func=_cmd_relink)

    p = sub.add_parser("report", help="build a self-contained HTML report")
    add_db_flags(p, out=False)
    p.add_argument("--spec", required=True,
                   help="report spec JSON, inline or a file path")
    p.add_argument("--out", required=True, help="output HTML path")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--workspace", required=True)
    p.add_argument("--bind", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8600)
    p.add_argument("--static", help="directory of web UI assets to serve at /")
    p.add_argument("--allow-remote", action="store_true")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.TagbaseError as exc:
        _print_error(args, exc.name, str(exc))
        return 1
    except (ValueError, json.JSONDecodeError) as exc:
        _print_error(args, "ValueError", str(exc))
        return 1
    except OSError as exc:
        _print_error(args, "IOError", str(exc))
        return 2


def _print_error(args, name: str, detail: str) -> None:
    if getattr(args, "json", False):
        print(json.dumps({"ok": False, "error": {"name": name, "detail": detail}}))
    else:
        print(f"{name}: {detail}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
