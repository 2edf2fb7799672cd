"""Self-contained HTML reports with user-selected content.

One HTML file, inline styles, no scripts and no external fetches; every
number in a report table is produced by the query/tagging modules rather
than counted here.
"""

from __future__ import annotations

import datetime
import html
import json
from dataclasses import dataclass, field

from . import errors
from .database import TagDatabase, serialize_cell
from .query import FilterExpr, crosstab, eval_filter, parse_filter, to_text
from .schema import CategoriesSchema, TagKind
from .tagging import option_counts

_STYLE = """
body { font-family: Georgia, serif; max-width: 60rem; margin: 2rem auto; color: #222; }
h1 { border-bottom: 2px solid #444; padding-bottom: .3rem; }
table { border-collapse: collapse; margin: 1rem 0; }
th, td { border: 1px solid #999; padding: .25rem .6rem; text-align: left; }
th { background: #eee; }
.paper { margin: 1.2rem 0; padding: .6rem .8rem; border-left: 3px solid #8aa; }
.meta { color: #555; font-size: .9rem; }
dt { font-weight: bold; margin-top: .4rem; }
dd { margin: 0 0 .2rem 1.2rem; white-space: pre-wrap; }
""".strip()


@dataclass
class ReportSpec:
    title: str = "Tag database report"
    filter_text: str = ""
    include_citation: bool = True
    tags: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    crosstabs: list[tuple[str, str]] = field(default_factory=list)
    include_option_counts: bool = False

    def filter_expr(self) -> FilterExpr | None:
        return parse_filter(self.filter_text) if self.filter_text.strip() else None

    def to_json(self) -> str:
        return json.dumps(
            {
                "title": self.title,
                "filter": self.filter_text,
                "include_citation": self.include_citation,
                "tags": self.tags,
                "notes": self.notes,
                "crosstabs": [list(pair) for pair in self.crosstabs],
                "include_option_counts": self.include_option_counts,
            }
        )

    @staticmethod
    def from_json(text: str) -> "ReportSpec":
        data = json.loads(text)
        return ReportSpec(
            title=data.get("title", "Tag database report"),
            filter_text=data.get("filter", "") or "",
            include_citation=bool(data.get("include_citation", True)),
            tags=list(data.get("tags", [])),
            notes=list(data.get("notes", [])),
            crosstabs=[tuple(pair) for pair in data.get("crosstabs", [])],
            include_option_counts=bool(data.get("include_option_counts", False)),
        )


def _validate_spec(schema: CategoriesSchema, spec: ReportSpec) -> None:
    note_names = set(schema.note_names())
    for name in spec.tags:
        schema.tag(name)
    for name in spec.notes:
        if name not in note_names:
            raise errors.UnknownNote(name)


def _first_author_surname(author: str) -> str:
    first = author.split(";")[0].strip()
    return first.split(",")[0].strip().lower()


def _paper_order(db: TagDatabase, keys: list[str]) -> list[str]:
    # stable, so rows without author/year keep their relative order
    def sort_key(key: str):
        row = db.rows[key]
        return (
            _first_author_surname(row.citation.get("Author", "")),
            row.citation.get("Publication Year", ""),
        )

    return sorted(keys, key=sort_key)


def build_report(
    db: TagDatabase,
    schema: CategoriesSchema,
    spec: ReportSpec,
    generated_at: datetime.datetime | None = None,
) -> bytes:
    """Render the report; deterministic for a fixed generated_at."""
    _validate_spec(schema, spec)
    if generated_at is None:
        generated_at = datetime.datetime.now(datetime.timezone.utc)
    if generated_at.tzinfo is not None:
        generated_at = generated_at.astimezone(datetime.timezone.utc)

    filter_expr = spec.filter_expr()
    keys = eval_filter(db, filter_expr) if filter_expr is not None else list(db.rows)

    out: list[str] = []
    esc = html.escape
    out.append("<!DOCTYPE html>")
    out.append('<html lang="en"><head><meta charset="utf-8">')
    out.append(f"<title>{esc(spec.title)}</title>")
    out.append(f"<style>{_STYLE}</style></head><body>")
    out.append(f"<h1>{esc(spec.title)}</h1>")
    out.append('<p class="meta">Generated '
               f"{generated_at:%Y-%m-%d %H:%M:%S} UTC")
    if filter_expr is not None:
        out.append(f" &middot; filter: <code>{esc(to_text(filter_expr))}</code>")
    out.append(f" &middot; {len(keys)} papers</p>")

    if spec.include_option_counts:
        out.append("<h2>Tag option counts</h2>")
        counts = option_counts(db, schema, set(keys) if filter_expr is not None else None)
        for tag in schema.tags():
            per_tag = counts.tags[tag.name]
            out.append(f"<h3>{esc(tag.name)}</h3><table>")
            out.append("<tr><th>Option</th><th>Papers</th></tr>")
            for label, count in per_tag.items():
                out.append(f"<tr><td>{esc(label)}</td><td>{count}</td></tr>")
            out.append("</table>")

    for row_tag, col_tag in spec.crosstabs:
        table = crosstab(db, schema, row_tag, col_tag, filter_expr)
        out.append(f"<h2>{esc(row_tag)} &times; {esc(col_tag)}</h2><table>")
        out.append(
            "<tr><th></th>"
            + "".join(f"<th>{esc(c)}</th>" for c in table.col_labels)
            + "</tr>"
        )
        for label, counts_row in zip(table.row_labels, table.counts):
            out.append(
                f"<tr><th>{esc(label)}</th>"
                + "".join(f"<td>{n}</td>" for n in counts_row)
                + "</tr>"
            )
        out.append("</table>")

    out.append("<h2>Papers</h2>")
    if not keys:
        out.append("<p>0 papers</p>")
    for key in _paper_order(db, keys):
        row = db.rows[key]
        out.append('<div class="paper">')
        if spec.include_citation:
            author = row.citation.get("Author", "")
            year = row.citation.get("Publication Year", "")
            title = row.citation.get("Title", "")
            journal = row.citation.get("Publication Title", "")
            doi = row.citation.get("DOI", "")
            line = esc(author)
            if year:
                line += f" ({esc(year)})"
            line += f". <strong>{esc(title)}</strong>"
            if journal:
                line += f". <em>{esc(journal)}</em>"
            if doi:
                href = esc(f"https://doi.org/{doi}", quote=True)
                line += f'. <a href="{href}">{esc(doi)}</a>'
            out.append(f"<p>{line}</p>")
        out.append(f'<p class="meta">Key: {esc(key)}</p>')
        if spec.tags or spec.notes:
            out.append("<dl>")
            for name in spec.tags:
                value = serialize_cell(row.tags[name])
                out.append(f"<dt>{esc(name)}</dt><dd>{esc(value) or '&mdash;'}</dd>")
            for name in spec.notes:
                value = serialize_cell(row.tags[name])
                out.append(f"<dt>{esc(name)}</dt><dd>{esc(value) or '&mdash;'}</dd>")
            out.append("</dl>")
        out.append("</div>")

    out.append("</body></html>")
    return "\n".join(out).encode("utf-8")
