"""The viewer's search core: filter expressions, cross-tabs, table export.

Filter grammar (R-syntax look-alike, whitespace insignificant):

    expr      := or
    or        := and ("|" and)*
    and       := unary ("&" unary)*
    unary     := "!" unary | primary
    primary   := "(" expr ")" | predicate
    predicate := column cmp literal
               | has(column, string) | contains(column, string)
               | empty(column) | tagged(column)
    column    := [A-Za-z_][A-Za-z0-9_]* or a `backtick-quoted` name
    literal   := "double-quoted string" | decimal number | date YYYY-MM-DD
    cmp       := == | != | < | <= | > | >=

Empty cells make every compare/has/contains predicate false; empty() and
tagged() are the presence tests. Order comparisons are numeric when both
sides parse as numbers, by calendar date on date-kind tag columns, and
lexicographic otherwise; == and != are case-sensitive on strings;
contains() is a case-insensitive substring test on the serialized cell.
"""

from __future__ import annotations

import csv
import datetime
import io
import re
from dataclasses import dataclass

from . import errors
from .database import MultiOptions, TagDatabase, serialize_cell
from .schema import NONE_LABEL, CategoriesSchema, TagKind


# --- AST ---

class FilterExpr:
    __slots__ = ()


@dataclass(frozen=True)
class Literal:
    kind: str  # "string" | "number" | "date"
    text: str  # unescaped content for strings, source text otherwise


@dataclass(frozen=True)
class Or(FilterExpr):
    items: tuple[FilterExpr, ...]


@dataclass(frozen=True)
class And(FilterExpr):
    items: tuple[FilterExpr, ...]


@dataclass(frozen=True)
class Not(FilterExpr):
    operand: FilterExpr


@dataclass(frozen=True)
class Compare(FilterExpr):
    column: str
    op: str
    literal: Literal


@dataclass(frozen=True)
class Has(FilterExpr):
    column: str
    option: str


@dataclass(frozen=True)
class Contains(FilterExpr):
    column: str
    needle: str


@dataclass(frozen=True)
class Empty(FilterExpr):
    column: str


@dataclass(frozen=True)
class Tagged(FilterExpr):
    column: str


PREDICATE_NAMES = ("has", "contains", "empty", "tagged")
_CMP_OPS = ("==", "!=", "<=", ">=", "<", ">")


# --- lexer ---

@dataclass(frozen=True)
class _Token:
    type: str
    text: str
    pos: int


_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}(?![\d-])")
_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "`":
            end = text.find("`", i + 1)
            if end < 0:
                raise errors.ParseError(i, ("a closing backtick",), text[i:i + 10])
            tokens.append(_Token("NAME", text[i + 1:end], i))
            i = end + 1
            continue
        if ch == '"':
            value, i = _lex_string(text, i)
            tokens.append(_Token("STRING", value, i))
            continue
        if ch.isdigit() or (ch == "-" and i + 1 < n and text[i + 1].isdigit()):
            m = _DATE_RE.match(text, i)
            if m:
                tokens.append(_Token("DATE", m.group(), i))
                i = m.end()
                continue
            m = _NUMBER_RE.match(text, i)
            tokens.append(_Token("NUMBER", m.group(), i))
            i = m.end()
            continue
        m = _IDENT_RE.match(text, i)
        if m:
            tokens.append(_Token("IDENT", m.group(), i))
            i = m.end()
            continue
        two = text[i:i + 2]
        if two in ("==", "!=", "<=", ">="):
            tokens.append(_Token("CMP", two, i))
            i += 2
            continue
        if ch in "<>":
            tokens.append(_Token("CMP", ch, i))
            i += 1
            continue
        simple = {"&": "AND", "|": "OR", "!": "NOT", "(": "LPAREN",
                  ")": "RPAREN", ",": "COMMA"}
        if ch in simple:
            tokens.append(_Token(simple[ch], ch, i))
            i += 1
            continue
        raise errors.ParseError(i, ("a valid token",), ch)
    tokens.append(_Token("EOF", "", n))
    return tokens


def _lex_string(text: str, start: int) -> tuple[str, int]:
    out: list[str] = []
    i = start + 1
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text) and text[i + 1] in ('"', "\\"):
            out.append(text[i + 1])
            i += 2
            continue
        if ch == '"':
            return "".join(out), i + 1
        out.append(ch)
        i += 1
    raise errors.ParseError(start, ('a closing "',), text[start:start + 10])


# --- parser ---

class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.type != "EOF":
            self.i += 1
        return tok

    def expect(self, ttype: str, expected: tuple[str, ...]) -> _Token:
        tok = self.peek()
        if tok.type != ttype:
            raise errors.ParseError(tok.pos, expected, tok.text)
        return self.advance()

    def parse_or(self) -> FilterExpr:
        items = [self.parse_and()]
        while self.peek().type == "OR":
            self.advance()
            items.append(self.parse_and())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def parse_and(self) -> FilterExpr:
        items = [self.parse_unary()]
        while self.peek().type == "AND":
            self.advance()
            items.append(self.parse_unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def parse_unary(self) -> FilterExpr:
        if self.peek().type == "NOT":
            self.advance()
            return Not(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> FilterExpr:
        tok = self.peek()
        if tok.type == "LPAREN":
            self.advance()
            inner = self.parse_or()
            self.expect("RPAREN", ("')'",))
            return inner
        if tok.type == "IDENT" and self.peek(1).type == "LPAREN":
            return self.parse_call()
        if tok.type in ("IDENT", "NAME"):
            column = self.parse_column()
            op = self.expect("CMP", ("a comparison operator",))
            literal = self.parse_literal()
            return Compare(column, op.text, literal)
        raise errors.ParseError(
            tok.pos, ("'('", "'!'", "a column name", "a predicate"), tok.text
        )

    def parse_call(self) -> FilterExpr:
        name_tok = self.advance()
        if name_tok.text not in PREDICATE_NAMES:
            raise errors.ParseError(name_tok.pos, PREDICATE_NAMES, name_tok.text)
        self.expect("LPAREN", ("'('",))
        column = self.parse_column()
        if name_tok.text in ("has", "contains"):
            self.expect("COMMA", ("','",))
            arg = self.expect("STRING", ("a quoted string",)).text
            self.expect("RPAREN", ("')'",))
            return Has(column, arg) if name_tok.text == "has" else Contains(column, arg)
        self.expect("RPAREN", ("')'",))
        return Empty(column) if name_tok.text == "empty" else Tagged(column)

    def parse_column(self) -> str:
        tok = self.peek()
        if tok.type in ("IDENT", "NAME"):
            return self.advance().text
        raise errors.ParseError(tok.pos, ("a column name",), tok.text)

    def parse_literal(self) -> Literal:
        tok = self.peek()
        if tok.type == "STRING":
            return Literal("string", self.advance().text)
        if tok.type == "NUMBER":
            return Literal("number", self.advance().text)
        if tok.type == "DATE":
            return Literal("date", self.advance().text)
        raise errors.ParseError(
            tok.pos, ("a quoted string", "a number", "a date (YYYY-MM-DD)"), tok.text
        )


def parse_filter(text: str) -> FilterExpr:
    parser = _Parser(_lex(text))
    expr = parser.parse_or()
    tok = parser.peek()
    if tok.type != "EOF":
        raise errors.ParseError(tok.pos, ("'&'", "'|'", "end of input"), tok.text)
    return expr


# --- pretty printing (canonical form; re-parsing yields an equal AST) ---

def to_text(expr: FilterExpr) -> str:
    if isinstance(expr, Or):
        return " | ".join(
            _parenthesize(item, wrap=isinstance(item, Or)) for item in expr.items
        )
    if isinstance(expr, And):
        return " & ".join(
            _parenthesize(item, wrap=isinstance(item, (Or, And))) for item in expr.items
        )
    if isinstance(expr, Not):
        return "!" + _parenthesize(expr.operand, wrap=isinstance(expr.operand, (Or, And)))
    if isinstance(expr, Compare):
        return f"{_column_text(expr.column)} {expr.op} {_literal_text(expr.literal)}"
    if isinstance(expr, Has):
        return f"has({_column_text(expr.column)}, {_quote(expr.option)})"
    if isinstance(expr, Contains):
        return f"contains({_column_text(expr.column)}, {_quote(expr.needle)})"
    if isinstance(expr, Empty):
        return f"empty({_column_text(expr.column)})"
    if isinstance(expr, Tagged):
        return f"tagged({_column_text(expr.column)})"
    raise TypeError(f"not a filter expression: {expr!r}")


def _parenthesize(expr: FilterExpr, wrap: bool) -> str:
    text = to_text(expr)
    return f"({text})" if wrap else text


def _column_text(column: str) -> str:
    if _IDENT_RE.fullmatch(column):
        return column
    return f"`{column}`"


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _literal_text(literal: Literal) -> str:
    if literal.kind == "string":
        return _quote(literal.text)
    return literal.text


def collect_columns(expr: FilterExpr) -> set[str]:
    if isinstance(expr, (Or, And)):
        out: set[str] = set()
        for item in expr.items:
            out |= collect_columns(item)
        return out
    if isinstance(expr, Not):
        return collect_columns(expr.operand)
    return {expr.column}  # type: ignore[union-attr]


# --- evaluation ---

_NUMERIC_RE = re.compile(r"-?\d+(?:\.\d+)?")


def _as_number(text: str) -> float | None:
    return float(text) if _NUMERIC_RE.fullmatch(text) else None


def _as_date(text: str) -> datetime.date | None:
    if not re.fullmatch(r"\d{4}-\d{2}-\d{2}", text):
        return None
    try:
        return datetime.date.fromisoformat(text)
    except ValueError:
        return None


def _compare(op: str, left, right) -> bool:
    if op == "==":
        return left == right
    if op == "!=":
        return left != right
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    return left >= right


def eval_filter(db: TagDatabase, expr: FilterExpr) -> list[str]:
    """Keys of matching rows, in database row order."""
    header = set(db.header())
    for column in collect_columns(expr):
        if column not in header:
            raise errors.UnknownColumn(column)
    date_columns = {t.name for t in db.schema.tags() if t.kind is TagKind.DATE}
    multi_columns = {t.name for t in db.schema.tags() if t.kind is TagKind.MULTI}
    return [
        key
        for key in db.rows
        if _eval(expr, db, key, date_columns, multi_columns)
    ]


def _eval(
    expr: FilterExpr,
    db: TagDatabase,
    key: str,
    date_columns: set[str],
    multi_columns: set[str],
) -> bool:
    if isinstance(expr, Or):
        return any(_eval(e, db, key, date_columns, multi_columns) for e in expr.items)
    if isinstance(expr, And):
        return all(_eval(e, db, key, date_columns, multi_columns) for e in expr.items)
    if isinstance(expr, Not):
        return not _eval(expr.operand, db, key, date_columns, multi_columns)

    cell = db.cell_text(key, expr.column)
    if isinstance(expr, Empty):
        return cell == ""
    if isinstance(expr, Tagged):
        return cell != ""
    if cell == "":
        return False  # empty cells fail every other predicate

    if isinstance(expr, Compare):
        lit = expr.literal.text
        left, right = _as_number(cell), _as_number(lit)
        if left is not None and right is not None:
            return _compare(expr.op, left, right)
        if expr.column in date_columns:
            dl, dr = _as_date(cell), _as_date(lit)
            if dl is not None and dr is not None:
                return _compare(expr.op, dl, dr)
        return _compare(expr.op, cell, lit)
    if isinstance(expr, Has):
        if expr.column in multi_columns:
            value = db.rows[key].tags[expr.column]
            members = value.options if isinstance(value, MultiOptions) else ()
            return expr.option in members
        return cell == expr.option
    if isinstance(expr, Contains):
        return expr.needle.lower() in cell.lower()
    raise TypeError(f"not a filter expression: {expr!r}")


# --- cross-tabulation ---

@dataclass
class CrossTab:
    row_tag: str
    col_tag: str
    row_labels: tuple[str, ...]
    col_labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]
    filtered_row_count: int

    def cell(self, row_label: str, col_label: str) -> int:
        return self.counts[self.row_labels.index(row_label)][
            self.col_labels.index(col_label)
        ]


def crosstab(
    db: TagDatabase,
    schema: CategoriesSchema,
    row_tag: str,
    col_tag: str,
    filter_expr: FilterExpr | None = None,
) -> CrossTab:
    """Counts matrix over the option sets of two selection tags.

    Each paper contributes one increment per (row option, col option) pair
    in the Cartesian product of its two label sets; an Empty cell counts
    under "(none)".
    """
    row_def = schema.tag(row_tag)
    col_def = schema.tag(col_tag)
    for tag in (row_def, col_def):
        if not tag.kind.is_selection:
            raise errors.KindNotTabulable(tag.name, tag.kind.value)

    keys = eval_filter(db, filter_expr) if filter_expr is not None else list(db.rows)
    row_labels = row_def.options + (NONE_LABEL,)
    col_labels = col_def.options + (NONE_LABEL,)
    grid = [[0] * len(col_labels) for _ in row_labels]
    row_index = {label: i for i, label in enumerate(row_labels)}
    col_index = {label: i for i, label in enumerate(col_labels)}

    for key in keys:
        row = db.rows[key]
        for r in _labels_of(row.tags.get(row_def.name), NONE_LABEL):
            for c in _labels_of(row.tags.get(col_def.name), NONE_LABEL):
                grid[row_index[r]][col_index[c]] += 1

    return CrossTab(
        row_tag=row_tag,
        col_tag=col_tag,
        row_labels=row_labels,
        col_labels=col_labels,
        counts=tuple(tuple(r) for r in grid),
        filtered_row_count=len(keys),
    )


def _labels_of(cell, none_label: str) -> tuple[str, ...]:
    if isinstance(cell, MultiOptions):
        return cell.options
    text = serialize_cell(cell) if cell is not None else ""
    return (text,) if text else (none_label,)


# --- table export ---

def export_table(
    db: TagDatabase,
    columns: list[str],
    filter_expr: FilterExpr | None = None,
) -> bytes:
    """CSV of the filtered rows restricted to the requested columns.

    Key always comes first; cell serialization matches the database CSV.
    """
    header = set(db.header())
    for column in columns:
        if column not in header:
            raise errors.UnknownColumn(column)
    out_columns = ["Key"] + [c for c in columns if c != "Key"]
    keys = eval_filter(db, filter_expr) if filter_expr is not None else list(db.rows)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(out_columns)
    for key in keys:
        writer.writerow([db.cell_text(key, c) for c in out_columns])
    return buf.getvalue().encode("utf-8")
