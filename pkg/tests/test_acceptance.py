"""End-to-end property checks, one test per advertised guarantee.

Each test prints through the terminal-summary hook in conftest.py, giving
a one-line pass/fail verdict per criterion at the end of a pytest run.
"""

import dataclasses
import datetime
import json
import random
import threading
import time
from collections import Counter
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from tagbase import jsonio
from tagbase.citations import (
    CitationRecord,
    ZoteroExport,
    citation_match_index,
    serialize_export,
)
from tagbase.database import (
    MultiOptions,
    TagDatabase,
    create_database,
    load_database,
    parse_timestamp_filename,
    save_database,
    serialize_cell,
    timestamp_filename,
)
from tagbase.query import (
    And,
    Empty,
    Not,
    Or,
    Tagged,
    crosstab,
    eval_filter,
    export_table,
    parse_filter,
    to_text,
)
from tagbase.reconcile import diff, merge, relink, sync
from tagbase.report import ReportSpec, build_report
from tagbase.schema import (
    NONE_LABEL,
    CategoriesSchema,
    TagDefinition,
    TagKind,
    parse_categories,
)
from tagbase.service import Workspace, apply_tag_patch, create_app
from tagbase.tagging import option_counts, replace_option
from tagbase.cli import main as cli_main
from conftest import EXPORT_CSV, METHODS_TABLE, NOTES_TABLE
from filter_oracle import oracle_eval, random_expr, rows_from_csv
from generators import random_database, random_export, random_fill

INSTANT = datetime.datetime(2026, 8, 23, 12, 0, 0, tzinfo=datetime.timezone.utc)


def test_criterion_01_round_trip_suite():
    rng = random.Random(101)
    start = time.perf_counter()
    for _ in range(200):
        db, _ = random_database(rng, max_tags=10, max_rows=50)
        name_a, payload_a = save_database(db, "rt", INSTANT)
        name_b, payload_b = save_database(db, "rt", INSTANT)
        assert (name_a, payload_a) == (name_b, payload_b)
        loaded, report = load_database(payload_a, db.schema)
        assert report.is_empty()
        assert loaded == db
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"200 round-trips took {elapsed:.2f}s"


def test_criterion_02_filter_oracle(fixed_instant):
    # structural precedence: | binds loosest, ! tightest
    a, b, c = Tagged("A"), Empty("B"), Empty("C")
    assert parse_filter("tagged(A) | empty(B) & empty(C)") == Or((a, And((b, c))))
    assert parse_filter("!tagged(A) & empty(B)") == And((Not(a), b))

    # behavioral precedence on a concrete database
    schema = parse_categories({"Methods": METHODS_TABLE, "Notes": NOTES_TABLE})
    from tagbase.citations import parse_zotero_export

    db = create_database(parse_zotero_export(EXPORT_CSV), schema)
    all_keys = list(db.rows)
    # a true, b & c false: a | b & c must match everything
    assert eval_filter(db, parse_filter("tagged(Key) | tagged(Rating) & tagged(Rating)")) == all_keys
    # (!a) & a is always false; the wrong grouping !(a & a) would match all
    assert eval_filter(db, parse_filter("!tagged(Rating) & tagged(Rating)")) == []

    rng = random.Random(202)
    checked = 0
    start = time.perf_counter()
    for _ in range(25):
        db, _ = random_database(rng, max_tags=8, max_rows=40)
        _, payload = save_database(db, "fo", fixed_instant)
        rows = rows_from_csv(payload)
        date_cols = {t.name for t in db.schema.tags() if t.kind is TagKind.DATE}
        multi_cols = {t.name for t in db.schema.tags() if t.kind is TagKind.MULTI}
        for _ in range(20):
            expr = random_expr(rng, db)
            assert eval_filter(db, expr) == oracle_eval(expr, rows, date_cols, multi_cols)
            assert parse_filter(to_text(expr)) == expr
            checked += 1
    elapsed = time.perf_counter() - start
    assert checked == 500
    assert elapsed < 30.0, f"500 oracle comparisons took {elapsed:.2f}s"


def _cell_labels(cell):
    if isinstance(cell, MultiOptions):
        return cell.options
    text = serialize_cell(cell)
    return (text,) if text else (NONE_LABEL,)


def test_criterion_03_crosstab_conservation():
    rng = random.Random(303)
    single_pairs = multi_pairs = marginal_checks = 0
    while min(single_pairs, multi_pairs, marginal_checks) < 20:
        db, _ = random_database(rng, max_tags=9, max_rows=45)
        selection = [t for t in db.schema.tags() if t.kind.is_selection]
        if len(selection) < 2:
            continue
        row_tag, col_tag = rng.sample(selection, 2)
        expr = random_expr(rng, db) if rng.random() < 0.5 else None
        table = crosstab(db, db.schema, row_tag.name, col_tag.name, expr)
        keys = eval_filter(db, expr) if expr is not None else list(db.rows)
        assert table.filtered_row_count == len(keys)

        # brute-force pair counting over the filtered rows
        counter: Counter = Counter()
        for key in keys:
            row = db.rows[key]
            for rl in _cell_labels(row.tags[row_tag.name]):
                for cl in _cell_labels(row.tags[col_tag.name]):
                    counter[(rl, cl)] += 1
        for i, rl in enumerate(table.row_labels):
            for j, cl in enumerate(table.col_labels):
                assert table.counts[i][j] == counter.get((rl, cl), 0)

        if row_tag.kind is TagKind.SINGLE and col_tag.kind is TagKind.SINGLE:
            assert sum(map(sum, table.counts)) == len(keys)
            single_pairs += 1
        if TagKind.MULTI in (row_tag.kind, col_tag.kind):
            multi_pairs += 1

        # a single-valued column tag makes row marginals equal option counts
        if col_tag.kind is TagKind.SINGLE:
            counts = option_counts(db, db.schema, set(keys))
            for i, rl in enumerate(table.row_labels):
                assert sum(table.counts[i]) == counts.tags[row_tag.name][rl]
            marginal_checks += 1


def test_criterion_04_sync_properties():
    rng = random.Random(404)
    for _ in range(25):
        db, export = random_database(rng, max_tags=7, max_rows=40)

        # fixed point on the generating export
        same, report = sync(db, export)
        assert report.is_empty() and same == db

        # randomized add/remove/refresh perturbation
        kept = [r for r in export.records if rng.random() < 0.7]
        kept = [
            dataclasses.replace(r, title=r.title + " v2")
            if rng.random() < 0.2
            else r
            for r in kept
        ]
        extra = random_export(rng, rng.randint(1, 10))
        target = ZoteroExport(list(export.header), kept + list(extra.records))

        synced, report = sync(db, target)
        assert set(synced.rows) == {r.key for r in target.records}
        assert set(report.added) == set(target.by_key()) - set(db.rows)
        assert set(report.removed) == set(db.rows) - set(target.by_key())
        for key in synced.rows:
            if key in db.rows:
                assert synced.rows[key].tags == db.rows[key].tags

        # idempotence
        again, again_report = sync(synced, target)
        assert again_report.is_empty() and again == synced

        # diff/sync coherence
        delta = diff(db, synced)
        assert set(delta.keys_only_in_a) == set(report.removed)
        assert set(delta.keys_only_in_b) == set(report.added)
        diff_changes = {
            (key, column): (a, b) for key, column, a, b in delta.changed_cells
        }
        sync_changes = {
            (key, column): pair
            for key, changes in report.citation_updated.items()
            for column, pair in changes.items()
        }
        assert diff_changes == sync_changes


def test_criterion_05_merge_of_partitions(fixed_instant):
    rng = random.Random(505)
    for _ in range(8):
        db, _ = random_database(rng, max_tags=8, max_rows=60)
        keys = list(db.rows)
        for parts in (2, 3, 5):
            # contiguous chunks reassemble the database exactly
            bounds = [len(keys) * i // parts for i in range(parts + 1)]
            chunks = [
                TagDatabase(
                    schema=db.schema,
                    rows={k: db.rows[k].copy() for k in keys[lo:hi]},
                )
                for lo, hi in zip(bounds, bounds[1:])
            ]
            merged, report = merge(chunks)
            assert report.is_empty()
            assert merged == db
            assert save_database(merged, "m", fixed_instant) == save_database(
                db, "m", fixed_instant
            )

            # scattered split: same rows and cells, order set by the inputs
            spread = [
                TagDatabase(
                    schema=db.schema,
                    rows={k: db.rows[k].copy() for k in keys[i::parts]},
                )
                for i in range(parts)
            ]
            remixed, report = merge(spread)
            assert report.is_empty()
            assert set(remixed.rows) == set(db.rows)
            for key in db.rows:
                assert remixed.rows[key].citation == db.rows[key].citation
                assert remixed.rows[key].tags == db.rows[key].tags


def test_criterion_06_replace_option_conservation():
    rng = random.Random(606)
    merges = renames = forced_both = 0
    while merges < 12 or renames < 12 or forced_both < 8:
        db, _ = random_database(rng, max_tags=7, max_rows=40)
        candidates = [
            t for t in db.schema.tags() if t.kind.is_selection and len(t.options) >= 2
        ]
        if not candidates:
            continue
        tag = rng.choice(candidates)
        old = rng.choice(tag.options)
        if rng.random() < 0.5:
            new = rng.choice([o for o in tag.options if o != old])
        else:
            new = "Swapped"

        if tag.kind is TagKind.MULTI and new in tag.options:
            # plant cells holding both options so the overlap term is real
            rows = dict(db.rows)
            for key in rng.sample(list(rows), min(3, len(rows))):
                row = rows[key].copy()
                members = {old, new}
                row.tags[tag.name] = MultiOptions(
                    tuple(o for o in tag.options if o in members)
                )
                rows[key] = row
                forced_both += 1
            db = TagDatabase(schema=db.schema, rows=rows)

        before = option_counts(db, db.schema).tags[tag.name]
        both = sum(
            1
            for row in db.rows.values()
            if isinstance(row.tags[tag.name], MultiOptions)
            and old in row.tags[tag.name].options
            and new in row.tags[tag.name].options
        )
        after_db, _, _ = replace_option(db, db.schema, tag.name, old, new)
        after = option_counts(after_db, after_db.schema).tags[tag.name]

        assert old not in after
        assert old not in after_db.schema.tag(tag.name).options
        assert after[new] == before[old] + before.get(new, 0) - both
        assert after[NONE_LABEL] == before[NONE_LABEL]
        if new in tag.options:
            merges += 1
        else:
            renames += 1


_KIND_CYCLE = (
    TagKind.SINGLE, TagKind.MULTI, TagKind.SINGLE,
    TagKind.TEXT, TagKind.MULTI, TagKind.DATE,
)


def _scale_schema(rng, n_tags, n_notes, opt_lo, opt_hi):
    groups = [("G0", []), ("G1", []), ("G2", [])]
    for i in range(n_tags):
        kind = _KIND_CYCLE[i % len(_KIND_CYCLE)]
        name = f"T{i:02d}"
        options = (
            tuple(f"{name}_o{j}" for j in range(rng.randint(opt_lo, opt_hi)))
            if kind.is_selection
            else ()
        )
        group = groups[i % 3]
        group[1].append(TagDefinition(name, kind, options, group[0]))
    for j in range(n_notes):
        groups[2][1].append(TagDefinition(f"N{j}", TagKind.NOTE, (), "G2"))
    return CategoriesSchema.build([(g, tuple(ts)) for g, ts in groups])


def _timed(budget, label, fn):
    start = time.perf_counter()
    result = fn()
    elapsed = time.perf_counter() - start
    assert elapsed < budget, f"{label} took {elapsed:.2f}s (budget {budget}s)"
    return result


@pytest.mark.parametrize(
    "rows,tags,notes,opt_lo,opt_hi",
    [(870, 24, 3, 3, 24), (310, 62, 5, 3, 10)],
    ids=["870x24+3", "310x62+5"],
)
def test_criterion_07_large_database_stress(rows, tags, notes, opt_lo, opt_hi):
    rng = random.Random(707)
    schema = _scale_schema(rng, tags, notes, opt_lo, opt_hi)
    export = random_export(rng, rows)

    db = _timed(1.0, "create", lambda: random_fill(
        rng, create_database(export, schema)
    ))
    _, payload = _timed(1.0, "save", lambda: save_database(db, "scale", INSTANT))
    loaded, report = _timed(1.0, "load", lambda: load_database(payload, schema))
    assert report.is_empty() and loaded == db

    multi = next(t for t in schema.tags() if t.kind is TagKind.MULTI)
    single = next(t for t in schema.tags() if t.kind is TagKind.SINGLE)
    expr = parse_filter(
        f'has({multi.name}, "{multi.options[0]}") '
        f'| `Publication Year` >= 2010 & !empty({single.name})'
    )
    keys = _timed(1.0, "filter", lambda: eval_filter(db, expr))
    assert isinstance(keys, list)

    _timed(1.0, "crosstab", lambda: crosstab(db, schema, single.name, multi.name, expr))

    kept = [r for r in export.records if rng.random() < 0.95]
    fresh = [
        CitationRecord(key=f"FRESH{i:03d}", item_type="report",
                       author="New, Ann", title=f"Addition {i}",
                       publication_year="2026")
        for i in range(20)
    ]
    target = ZoteroExport(list(export.header), kept + fresh)
    synced, sync_report = _timed(1.0, "sync", lambda: sync(db, target))
    assert len(sync_report.added) == 20

    spec = ReportSpec(
        tags=[t.name for t in list(schema.tags())[:5]],
        notes=[f"N0"],
        crosstabs=[(single.name, multi.name)],
        include_option_counts=True,
    )
    html = _timed(5.0, "report", lambda: build_report(db, schema, spec, INSTANT))
    assert html.startswith(b"<!DOCTYPE html>")


def test_criterion_08_relink_fidelity():
    rng = random.Random(808)

    # full DOI coverage: every row matches by DOI, tags byte-identical
    export = random_export(rng, 40, doi_rate=1.0)
    schema_db = random_fill(rng, create_database(
        export, _scale_schema(rng, 6, 1, 2, 5)
    ))
    mapping = {r.key: f"RK{i:06d}" for i, r in enumerate(export.records)}
    shuffled = [
        dataclasses.replace(r, key=mapping[r.key]) for r in export.records
    ]
    rng.shuffle(shuffled)
    relinked, report = relink(schema_db, ZoteroExport(list(export.header), shuffled))
    assert len(report.matched) == len(schema_db.rows)
    assert not report.unmatched_rows and not report.ambiguous
    for old, new, how in report.matched:
        assert how == "doi"
        assert mapping[old] == new
        old_cells = {
            t: serialize_cell(schema_db.rows[old].tags[t])
            for t in schema_db.schema.tag_names()
        }
        new_cells = {
            t: serialize_cell(relinked.rows[new].tags[t])
            for t in relinked.schema.tag_names()
        }
        assert old_cells == new_cells

    # no DOIs anywhere: title+year carries every match
    while True:
        export = random_export(rng, 25, doi_rate=0.0)
        if not citation_match_index(export, strict=False).ambiguous:
            break
    db = random_fill(rng, create_database(export, _scale_schema(rng, 4, 0, 2, 4)))
    mapping = {r.key: f"TY{i:06d}" for i, r in enumerate(export.records)}
    target = ZoteroExport(
        list(export.header),
        [dataclasses.replace(r, key=mapping[r.key]) for r in export.records],
    )
    relinked, report = relink(db, target)
    assert len(report.matched) == len(db.rows)
    assert {how for _, _, how in report.matched} == {"title-year"}

    # duplicated title+year: reported ambiguous, never guessed
    twin = dataclasses.replace(target.records[0], key="TWIN0000")
    doubled = ZoteroExport(list(target.header), list(target.records) + [twin])
    _, report = relink(db, doubled)
    victim = next(
        old for old, new in mapping.items() if new == target.records[0].key
    )
    assert victim in report.unmatched_rows
    assert report.ambiguous


def test_criterion_09_timestamp_filenames():
    rng = random.Random(909)
    epoch = datetime.datetime(1990, 1, 1, tzinfo=datetime.timezone.utc)
    instants = [
        epoch + datetime.timedelta(seconds=rng.randrange(4_000_000_000))
        for _ in range(1000)
    ]
    names = [timestamp_filename("db", t) for t in instants]
    for name, instant in zip(names, instants):
        base, parsed = parse_timestamp_filename(name)
        assert base == "db"
        assert parsed == instant
    by_name = sorted(zip(names, instants))
    by_time = sorted(zip(names, instants), key=lambda pair: pair[1])
    assert [p[1] for p in by_name] == [p[1] for p in by_time]


def test_criterion_10_service_parity_crash_safety(tmp_path, monkeypatch, capsysbinary):
    workspace = Workspace(tmp_path / "ws")
    app = create_app(workspace)
    client = TestClient(app)

    response = client.post(
        "/api/databases",
        data={"name": "papers"},
        files=[
            ("export", ("export.csv", EXPORT_CSV, "text/csv")),
            ("categories", ("Methods.csv", METHODS_TABLE.encode(), "text/csv")),
            ("categories", ("Notes.csv", NOTES_TABLE.encode(), "text/csv")),
        ],
    )
    assert response.status_code == 201
    first_version = response.json()["current"]
    client.patch(
        "/api/databases/papers/rows/ABCD1234/tags",
        json={"StudyType": "Field", "Region": "Pacific; Arctic",
              "PubDate": "2019-06-01"},
    )
    client.patch(
        "/api/databases/papers/rows/EFGH5678/tags",
        json={"StudyType": "Lab", "Rating": "fine"},
    )

    # --- read-endpoint parity against the core, on the same state ---
    state = workspace.state("papers")
    db, schema = state.db, state.schema

    body = client.get("/api/databases/papers/rows").json()
    assert body["rows"] == jsonio.database_rows_json(db, list(db.rows))
    assert (
        client.get("/api/databases/papers/rows/ABCD1234").json()
        == jsonio.row_json("ABCD1234", db.rows["ABCD1234"])
    )
    assert (
        client.get("/api/databases/papers").json()["schema"]
        == jsonio.schema_json(schema)
    )
    assert client.get("/api/databases/papers/counts").json() == jsonio.counts_json(
        option_counts(db, schema)
    )
    expr_text = 'has(Region, "Arctic")'
    assert client.get(
        "/api/databases/papers/crosstab",
        params={"rows": "StudyType", "cols": "Region", "filter": expr_text},
    ).json() == jsonio.crosstab_json(
        crosstab(db, schema, "StudyType", "Region", parse_filter(expr_text))
    )
    old_payload = (workspace.root / "papers" / first_version).read_bytes()
    old_db, _ = load_database(old_payload, schema)
    assert client.get(
        "/api/databases/papers/diff", params={"against": first_version}
    ).json() == jsonio.diff_report_json(diff(db, old_db))
    table = client.get(
        "/api/databases/papers/table",
        params={"columns": "Title,Region", "filter": expr_text},
    )
    assert table.content == export_table(db, ["Title", "Region"], parse_filter(expr_text))
    spec = ReportSpec(tags=["StudyType", "Region"], include_option_counts=True)
    served = client.get(
        "/api/databases/papers/report", params={"spec": spec.to_json()}
    ).content
    local = build_report(db, schema, spec)

    def _stable(payload: bytes) -> list[bytes]:
        return [ln for ln in payload.split(b"\n") if b"Generated " not in ln]

    assert _stable(served) == _stable(local)
    versions = client.get("/api/databases/papers/versions").json()
    assert versions["current"] == state.current
    assert versions["versions"] == workspace.versions("papers")

    # --- CLI emits the same bytes/structures as the service ---
    monkeypatch.chdir(tmp_path)
    cats = tmp_path / "cats"
    cats.mkdir()
    (cats / "Methods.csv").write_text(METHODS_TABLE)
    (cats / "Notes.csv").write_text(NOTES_TABLE)
    snapshot = tmp_path / "ws" / "papers" / state.current
    code = cli_main([
        "filter", "--db", str(snapshot), "--categories", str(cats),
        "--expr", expr_text, "--columns", "Title", "Region",
    ])
    assert code == 0
    assert capsysbinary.readouterr().out == table.content
    code = cli_main([
        "counts", "--json", "--db", str(snapshot), "--categories", str(cats),
    ])
    assert code == 0
    envelope = json.loads(capsysbinary.readouterr().out.decode())
    assert envelope["result"] == client.get("/api/databases/papers/counts").json()

    # --- fault injection between CSV write and meta swap ---
    for attempt in range(3):
        before = workspace.state("papers")

        def explode(stage):
            raise RuntimeError(f"injected at {stage}")

        workspace.fault_hook = explode
        with pytest.raises(RuntimeError):
            workspace.mutate(
                "papers",
                lambda s: apply_tag_patch(
                    s, "IJKL9012", {"Rating": f"lost{attempt}"}
                ),
            )
        workspace.fault_hook = None

        assert workspace.state("papers") is before
        reopened = Workspace(tmp_path / "ws")
        again = reopened.state("papers")
        assert again.current == before.current
        assert again.db == before.db
        meta = json.loads(
            (tmp_path / "ws" / "papers" / "meta.json").read_text()
        )
        assert (tmp_path / "ws" / "papers" / meta["current"]).is_file()

        follow_up = client.patch(
            "/api/databases/papers/rows/IJKL9012/tags",
            json={"Rating": f"kept{attempt}"},
        )
        assert follow_up.status_code == 200
    assert (
        client.get("/api/databases/papers/rows/IJKL9012").json()["tags"]["Rating"]
        == "kept2"
    )

    # --- 16 clients x 50 sequential mutations, distinct rows ---
    rng = random.Random(1010)
    storm_export = serialize_export(random_export(rng, 16))
    response = client.post(
        "/api/databases",
        data={"name": "storm"},
        files=[
            ("export", ("export.csv", storm_export, "text/csv")),
            ("categories", ("Methods.csv", METHODS_TABLE.encode(), "text/csv")),
            ("categories", ("Notes.csv", NOTES_TABLE.encode(), "text/csv")),
        ],
    )
    assert response.status_code == 201
    keys = [r["key"] for r in client.get(
        "/api/databases/storm/rows"
    ).json()["rows"]]
    assert len(keys) == 16

    failures: list[str] = []

    def hammer(index: int) -> None:
        mine = TestClient(app)
        for step in range(50):
            value = f"c{index:02d}_s{step:02d}"
            result = mine.patch(
                f"/api/databases/storm/rows/{keys[index]}/tags",
                json={"Rating": value},
            )
            if result.status_code != 200:
                failures.append(f"{value}: {result.status_code}")
                return

    threads = [threading.Thread(target=hammer, args=(i,)) for i in range(16)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert failures == []

    final = client.get("/api/databases/storm/rows").json()["rows"]
    ratings = {row["key"]: row["tags"]["Rating"] for row in final}
    for i, key in enumerate(keys):
        assert ratings[key] == f"c{i:02d}_s49"

    versions = client.get("/api/databases/storm/versions").json()["versions"]
    assert len(versions) == 1 + 16 * 50  # the create plus every mutation
    assert len(set(versions)) == len(versions)

    reopened = Workspace(tmp_path / "ws")
    assert reopened.state("storm").db == workspace.state("storm").db
    assert reopened.state("storm").current == workspace.state("storm").current
