"""Local HTTP service over a workspace directory.

A workspace holds one subdirectory per database: the categories bundle,
every timestamped CSV snapshot, and a meta.json naming the current
snapshot. Mutations serialize through a per-database writer lock and
follow a strict persistence order: write the new CSV (never overwriting),
then swap meta.json atomically. A crash between the two steps leaves the
previous snapshot current.

Reads never take the writer lock; they operate on an immutable state
snapshot grabbed once per request.
"""

import datetime
import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from fastapi import Body, FastAPI, File, Form, Query, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import HTMLResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from . import errors, jsonio
from .citations import ZoteroExport, parse_zotero_export
from .database import (
    TagDatabase,
    conform,
    create_database,
    load_database,
    parse_cell,
    parse_timestamp_filename,
    save_database,
    timestamp_filename,
)
from .query import FilterExpr, crosstab, eval_filter, export_table, parse_filter
from .reconcile import MergePolicy, diff, merge, relink, sync
from .report import ReportSpec, build_report
from .schema import CategoriesSchema, parse_categories, write_categories
from .tagging import assign as assign_tag
from .tagging import clear, option_counts, replace_option

_NAME_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9_-]{0,63}$")
_ONE_SECOND = datetime.timedelta(seconds=1)
META_FILENAME = "meta.json"


def _utc_now() -> datetime.datetime:
    return datetime.datetime.now(datetime.timezone.utc).replace(microsecond=0)


@dataclass(frozen=True)
class _State:
    """Immutable view of one database; replaced wholesale on commit."""

    db: TagDatabase
    schema: CategoriesSchema
    current: str
    categories_dir: str


@dataclass
class _Mutation:
    """What a mutation wants persisted and returned."""

    db: TagDatabase
    result: Any = None
    schema: CategoriesSchema | None = None          # set only when it changed
    sidecars: list[tuple[str, TagDatabase]] = field(default_factory=list)


class DatabaseEntry:
    def __init__(self, name: str, directory: Path, state: _State,
                 last_instant: datetime.datetime | None):
        self.name = name
        self.directory = directory
        self.state = state
        self.lock = threading.Lock()
        self.last_instant = last_instant


class Workspace:
    """Registry of databases under one root directory."""

    def __init__(self, root: str | Path, lock_timeout: float = 10.0):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.lock_timeout = lock_timeout
        # test seam: called with a stage label during persistence
        self.fault_hook: Callable[[str], None] | None = None
        self._registry_lock = threading.Lock()
        self.entries: dict[str, DatabaseEntry] = {}
        self._discover()

    # --- lookups ---

    def names(self) -> list[str]:
        return sorted(self.entries)

    def entry(self, name: str) -> DatabaseEntry:
        entry = self.entries.get(name)
        if entry is None:
            raise errors.UnknownDatabase(name)
        return entry

    def state(self, name: str) -> _State:
        return self.entry(name).state

    # --- startup ---

    def _discover(self) -> None:
        for meta_path in sorted(self.root.glob(f"*/{META_FILENAME}")):
            directory = meta_path.parent
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            name = meta["base"]
            categories_dir = meta["categories"]
            groups = meta["groups"]
            source = {
                g: (directory / categories_dir / f"{g}.csv").read_bytes()
                for g in groups
            }
            schema = parse_categories(source)
            data = (directory / meta["current"]).read_bytes()
            db, _ = load_database(data, schema)
            state = _State(
                db=db,
                schema=schema,
                current=meta["current"],
                categories_dir=categories_dir,
            )
            self.entries[name] = DatabaseEntry(
                name, directory, state, _latest_instant(directory, name)
            )

    # --- creation ---

    def create(self, name: str, export: ZoteroExport,
               schema: CategoriesSchema) -> DatabaseEntry:
        db = create_database(export, schema)
        return self.register(name, db, schema)

    def register(self, name: str, db: TagDatabase,
                 schema: CategoriesSchema) -> DatabaseEntry:
        """Persist a database value as a brand-new workspace entry."""
        if not _NAME_RE.fullmatch(name):
            raise errors.InvalidDatabaseName(name)
        with self._registry_lock:
            if name in self.entries:
                raise errors.DuplicateDatabase(name)
            directory = self.root / name
            try:
                directory.mkdir(parents=True, exist_ok=False)
            except FileExistsError:
                raise errors.DuplicateDatabase(name) from None
            except OSError as exc:
                raise errors.StorageError(str(exc)) from exc
            entry = DatabaseEntry(
                name,
                directory,
                _State(db=db, schema=schema, current="", categories_dir=""),
                last_instant=None,
            )
            with entry.lock:
                self._persist_and_commit(entry, _Mutation(db=db, schema=schema))
            self.entries[name] = entry
            return entry

    # --- mutation pipeline ---

    def mutate(self, name: str, fn: Callable[[_State], _Mutation]) -> tuple[Any, str]:
        """Run fn under the writer lock, persist, commit; returns (result, filename)."""
        entry = self.entry(name)
        if not entry.lock.acquire(timeout=self.lock_timeout):
            raise errors.LockTimeout(name)
        try:
            outcome = fn(entry.state)
            filename = self._persist_and_commit(entry, outcome)
            return outcome.result, filename
        finally:
            entry.lock.release()

    def _persist_and_commit(self, entry: DatabaseEntry, outcome: _Mutation) -> str:
        """Write snapshot + sidecars + categories, swap meta, then commit memory.

        Nothing in memory changes until every write succeeded, so any
        failure leaves the previous state current (on disk and in memory).
        """
        schema = outcome.schema or entry.state.schema
        instant = _utc_now()
        if entry.last_instant is not None and entry.last_instant >= instant:
            instant = entry.last_instant + _ONE_SECOND
        # never overwrite an existing snapshot, even an orphan from a crash
        while (entry.directory / timestamp_filename(entry.name, instant)).exists():
            instant += _ONE_SECOND

        try:
            filename, payload = save_database(outcome.db, entry.name, instant)
            with open(entry.directory / filename, "xb") as f:
                f.write(payload)
            for suffix, side_db in outcome.sidecars:
                side_name, side_payload = save_database(
                    side_db, f"{entry.name}_{suffix}", instant
                )
                (entry.directory / side_name).write_bytes(side_payload)

            categories_dir = entry.state.categories_dir
            if outcome.schema is not None or not categories_dir:
                categories_dir = f"categories_{schema.fingerprint[:12]}"
                target = entry.directory / categories_dir
                if not target.is_dir():
                    write_categories(schema, target)

            if self.fault_hook is not None:
                self.fault_hook("before-meta-swap")

            _write_meta(
                entry.directory,
                {
                    "base": entry.name,
                    "current": filename,
                    "categories": categories_dir,
                    "groups": [g for g, _ in schema.groups],
                    "schema_fingerprint": schema.fingerprint,
                    "saved_at": instant.isoformat(),
                },
            )
        except OSError as exc:
            raise errors.StorageError(str(exc)) from exc

        entry.state = _State(
            db=outcome.db,
            schema=schema,
            current=filename,
            categories_dir=categories_dir,
        )
        entry.last_instant = instant
        return filename

    # --- version listing ---

    def versions(self, name: str) -> list[str]:
        """Snapshot filenames for one database, newest first."""
        entry = self.entry(name)
        stamped = []
        for path in entry.directory.glob("*.csv"):
            try:
                base, instant = parse_timestamp_filename(path.name)
            except ValueError:
                continue
            if base == name:
                stamped.append((instant, path.name))
        stamped.sort(reverse=True)
        return [filename for _, filename in stamped]


def _latest_instant(directory: Path, base: str) -> datetime.datetime | None:
    latest = None
    for path in directory.glob("*.csv"):
        try:
            file_base, instant = parse_timestamp_filename(path.name)
        except ValueError:
            continue
        if file_base == base and (latest is None or instant > latest):
            latest = instant
    return latest


def _write_meta(directory: Path, meta: dict[str, Any]) -> None:
    tmp = directory / (META_FILENAME + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(json.dumps(meta, indent=2) + "\n")
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, directory / META_FILENAME)


# --- request helpers shared by the HTTP layer ---

def categories_from_uploads(uploads: list[tuple[str, bytes]]):
    """Turn uploaded categories files into a parse_categories source.

    A single .xlsx file is passed through as workbook bytes; otherwise each
    file is one group's CSV table, group name taken from the file stem, in
    upload order.
    """
    if not uploads:
        raise errors.MalformedRequest("no categories file provided")
    if len(uploads) == 1 and uploads[0][0].lower().endswith((".xlsx", ".xlsm")):
        return uploads[0][1]
    mapping: dict[str, bytes] = {}
    for filename, data in uploads:
        stem = Path(filename).stem
        if not stem:
            raise errors.MalformedRequest(f"categories file {filename!r} has no name")
        if stem in mapping:
            raise errors.DuplicateGroupName(stem)
        mapping[stem] = data
    return mapping


def apply_tag_patch(state: _State, key: str, payload: dict[str, str]) -> _Mutation:
    """Assign serialized cell values to one row; empty string clears."""
    db = state.db
    db.row(key)
    for tag_name, text in payload.items():
        if not isinstance(text, str):
            raise errors.MalformedRequest(
                f"tag {tag_name!r}: value must be a string"
            )
        tag = state.schema.tag(tag_name)
        if text == "":
            db = clear(db, key, tag_name)
        else:
            db = assign_tag(db, key, tag_name, parse_cell(text, tag))
    return _Mutation(db=db, result=jsonio.row_json(key, db.rows[key]))


def parse_filter_param(text: str | None) -> FilterExpr | None:
    if text is None or not text.strip():
        return None
    return parse_filter(text)


def _filtered_keys(state: _State, filter_text: str | None) -> list[str]:
    expr = parse_filter_param(filter_text)
    if expr is None:
        return state.db.keys()
    return eval_filter(state.db, expr)


def database_meta_json(name: str, state: _State) -> dict[str, Any]:
    return {
        "name": name,
        "current": state.current,
        "rows": len(state.db.rows),
        "schema_fingerprint": state.schema.fingerprint,
        "columns": list(state.db.header()),
    }


# --- the FastAPI application ---

_STATUS_BY_ERROR: tuple[tuple[type, int], ...] = (
    (errors.UnknownDatabase, 404),
    (errors.UnknownKey, 404),
    (errors.LockTimeout, 409),
    (errors.DuplicateDatabase, 409),
    (errors.StorageError, 500),
)


def error_status(exc: errors.TagbaseError) -> int:
    for exc_type, status in _STATUS_BY_ERROR:
        if isinstance(exc, exc_type):
            return status
    return 400


def create_app(workspace: Workspace, static_dir: "str | Path | None" = None):
    app = FastAPI(title="tagbase", docs_url=None, redoc_url=None, openapi_url=None)

    @app.exception_handler(errors.TagbaseError)
    async def _domain_error(request: Request, exc: errors.TagbaseError):
        return JSONResponse(
            status_code=error_status(exc),
            content={"error": exc.name, "detail": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": "ValidationError", "detail": str(exc)},
        )

    @app.exception_handler(Exception)
    async def _unexpected_error(request: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"error": "InternalError", "detail": str(exc)},
        )

    def _read_uploads(files: list[UploadFile]) -> list[tuple[str, bytes]]:
        return [(f.filename or "", f.file.read()) for f in files]

    @app.post("/api/databases", status_code=201)
    def create_database_endpoint(
        name: str = Form(...),
        export: UploadFile = File(...),
        categories: list[UploadFile] = File(...),
    ):
        schema = parse_categories(
            categories_from_uploads(_read_uploads(categories))
        )
        parsed = parse_zotero_export(export.file.read())
        entry = workspace.create(name, parsed, schema)
        return database_meta_json(name, entry.state)

    @app.get("/api/databases")
    def list_databases():
        return {
            "databases": [
                database_meta_json(name, workspace.state(name))
                for name in workspace.names()
            ]
        }

    @app.get("/api/databases/{name}")
    def get_database(name: str):
        state = workspace.state(name)
        meta = database_meta_json(name, state)
        meta["schema"] = jsonio.schema_json(state.schema)
        return meta

    @app.get("/api/databases/{name}/rows")
    def get_rows(
        name: str,
        filter: str | None = Query(default=None),
        offset: int = Query(default=0, ge=0),
        limit: int = Query(default=100, ge=1),
    ):
        state = workspace.state(name)
        keys = _filtered_keys(state, filter)
        page = keys[offset:offset + limit]
        return {
            "total": len(keys),
            "offset": offset,
            "limit": limit,
            "rows": jsonio.database_rows_json(state.db, page),
        }

    @app.get("/api/databases/{name}/rows/{key}")
    def get_row(name: str, key: str):
        state = workspace.state(name)
        return jsonio.row_json(key, state.db.row(key))

    @app.patch("/api/databases/{name}/rows/{key}/tags")
    def patch_row_tags(name: str, key: str, payload: dict[str, str] = Body(...)):
        result, _ = workspace.mutate(
            name, lambda state: apply_tag_patch(state, key, payload)
        )
        return result

    @app.post("/api/databases/{name}/sync")
    def sync_endpoint(name: str, export: UploadFile = File(...)):
        parsed = parse_zotero_export(export.file.read())

        def fn(state: _State) -> _Mutation:
            new_db, report = sync(state.db, parsed)
            sidecars = []
            if report.removed:
                removed_db = TagDatabase(schema=state.schema, rows=dict(report.removed))
                sidecars.append(("removed", removed_db))
            return _Mutation(
                db=new_db,
                result=jsonio.sync_report_json(report),
                sidecars=sidecars,
            )

        result, filename = workspace.mutate(name, fn)
        result["current"] = filename
        return result

    @app.post("/api/databases/{name}/conform")
    def conform_endpoint(
        name: str,
        categories: list[UploadFile] = File(...),
        strict: bool = Form(default=False),
    ):
        new_schema = parse_categories(
            categories_from_uploads(_read_uploads(categories))
        )

        def fn(state: _State) -> _Mutation:
            new_db, report = conform(state.db, new_schema, strict=strict)
            return _Mutation(
                db=new_db,
                schema=new_schema,
                result=jsonio.conform_report_json(report),
            )

        result, filename = workspace.mutate(name, fn)
        result["current"] = filename
        return result

    @app.post("/api/databases/{name}/replace-option")
    def replace_option_endpoint(name: str, payload: dict = Body(...)):
        try:
            tag = payload["tag"]
            old = payload["old"]
            new = payload["new"]
        except KeyError as exc:
            raise errors.MalformedRequest(f"missing field {exc.args[0]!r}") from None

        def fn(state: _State) -> _Mutation:
            new_db, changed, delta = replace_option(
                state.db, state.schema, tag, old, new
            )
            return _Mutation(
                db=new_db,
                schema=new_db.schema,
                result={
                    "cells_changed": changed,
                    "schema_delta": jsonio.schema_delta_json(delta),
                },
            )

        result, filename = workspace.mutate(name, fn)
        result["current"] = filename
        return result

    @app.post("/api/merge", status_code=201)
    def merge_endpoint(payload: dict = Body(...)):
        try:
            names = list(payload["names"])
            policy_text = payload["policy"]
            out = payload["out"]
        except KeyError as exc:
            raise errors.MalformedRequest(f"missing field {exc.args[0]!r}") from None
        try:
            policy = MergePolicy(policy_text)
        except ValueError:
            raise errors.MalformedRequest(
                f"unknown merge policy {policy_text!r}"
            ) from None
        states = [workspace.state(n) for n in names]
        fingerprints = {s.schema.fingerprint for s in states}
        if len(fingerprints) > 1:
            raise errors.SchemaMismatch(
                "all merged databases must share one categories schema"
            )
        merged, report = merge([s.db for s in states], policy)
        entry = workspace.register(out, merged, states[0].schema)
        return {
            "database": database_meta_json(out, entry.state),
            "report": jsonio.merge_report_json(report),
        }

    @app.post("/api/databases/{name}/relink")
    def relink_endpoint(name: str, export: UploadFile = File(...)):
        parsed = parse_zotero_export(export.file.read())

        def fn(state: _State) -> _Mutation:
            new_db, report = relink(state.db, parsed)
            return _Mutation(db=new_db, result=jsonio.relink_report_json(report))

        result, filename = workspace.mutate(name, fn)
        result["current"] = filename
        return result

    @app.get("/api/databases/{name}/counts")
    def counts_endpoint(name: str, filter: str | None = Query(default=None)):
        state = workspace.state(name)
        expr = parse_filter_param(filter)
        keys = set(eval_filter(state.db, expr)) if expr is not None else None
        return jsonio.counts_json(option_counts(state.db, state.schema, keys))

    @app.get("/api/databases/{name}/crosstab")
    def crosstab_endpoint(
        name: str,
        rows: str = Query(...),
        cols: str = Query(...),
        filter: str | None = Query(default=None),
    ):
        state = workspace.state(name)
        table = crosstab(
            state.db, state.schema, rows, cols, parse_filter_param(filter)
        )
        return jsonio.crosstab_json(table)

    @app.get("/api/databases/{name}/diff")
    def diff_endpoint(name: str, against: str = Query(...)):
        entry = workspace.entry(name)
        state = entry.state
        try:
            base, _ = parse_timestamp_filename(against)
        except ValueError:
            raise errors.UnknownVersion(against) from None
        if base != name or not (entry.directory / against).is_file():
            raise errors.UnknownVersion(against)
        snapshot, _ = load_database(
            (entry.directory / against).read_bytes(), state.schema
        )
        return jsonio.diff_report_json(diff(state.db, snapshot))

    @app.get("/api/databases/{name}/table")
    def table_endpoint(
        name: str,
        columns: str | None = Query(default=None),
        filter: str | None = Query(default=None),
    ):
        state = workspace.state(name)
        if columns is None or not columns.strip():
            wanted = list(state.db.header())
        else:
            wanted = [c.strip() for c in columns.split(",") if c.strip()]
        data = export_table(state.db, wanted, parse_filter_param(filter))
        return Response(content=data, media_type="text/csv; charset=utf-8")

    @app.get("/api/databases/{name}/report")
    def report_endpoint(name: str, spec: str = Query(...)):
        state = workspace.state(name)
        try:
            parsed = ReportSpec.from_json(spec)
        except (ValueError, KeyError, TypeError) as exc:
            raise errors.MalformedRequest(f"bad report spec: {exc}") from None
        html = build_report(state.db, state.schema, parsed)
        return HTMLResponse(content=html)

    @app.get("/api/databases/{name}/versions")
    def versions_endpoint(name: str):
        return {
            "current": workspace.state(name).current,
            "versions": workspace.versions(name),
        }

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


LOOPBACK_HOSTS = ("127.0.0.1", "localhost", "::1")


def run_server(
    workspace_dir: str | Path,
    host: str = "127.0.0.1",
    port: int = 8600,
    static_dir: str | Path | None = None,
    allow_remote: bool = False,
) -> None:
    """Start the service; non-loopback binds need allow_remote=True."""
    if host not in LOOPBACK_HOSTS and not allow_remote:
        raise ValueError(
            f"refusing to bind {host!r} without --allow-remote "
            "(this service has no authentication)"
        )
    import uvicorn

    app = create_app(Workspace(workspace_dir), static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
