"""Minimal read-only .xlsx sheet extraction, stdlib only.

Pulls cell text out of each visible sheet: shared strings, inline strings,
numbers and booleans; formulas yield their cached value. Enough for
categories workbooks, not a general spreadsheet reader.
"""

from __future__ import annotations

import zipfile
from io import BytesIO
from xml.etree import ElementTree


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _find(elem, name):
    for child in elem:
        if _local(child.tag) == name:
            return child
    return None


def _text_runs(elem) -> str:
    # concatenation of every <t> descendant covers both plain and rich text
    return "".join(t.text or "" for t in elem.iter() if _local(t.tag) == "t")


def _col_index(ref: str) -> int:
    n = 0
    for ch in ref:
        if ch.isalpha():
            n = n * 26 + (ord(ch.upper()) - ord("A") + 1)
        else:
            break
    return n - 1


def _format_number(raw: str) -> str:
    try:
        value = float(raw)
    except ValueError:
        return raw
    if value.is_integer() and "e" not in raw.lower():
        return str(int(value))
    return raw


def _cell_text(cell, shared: list[str]) -> str:
    ctype = cell.get("t", "n")
    if ctype == "inlineStr":
        is_elem = _find(cell, "is")
        return _text_runs(is_elem) if is_elem is not None else ""
    v = _find(cell, "v")
    raw = v.text or "" if v is not None else ""
    if ctype == "s":
        try:
            return shared[int(raw)]
        except (ValueError, IndexError):
            return ""
    if ctype == "b":
        return "TRUE" if raw == "1" else "FALSE"
    if ctype in ("str", "e"):
        return raw
    return _format_number(raw) if raw else ""


def read_workbook_tables(data: bytes) -> list[tuple[str, list[list[str]]]]:
    """Return (sheet name, rows of cell text) per visible sheet, in workbook order."""
    zf = zipfile.ZipFile(BytesIO(data))

    shared: list[str] = []
    if "xl/sharedStrings.xml" in zf.namelist():
        sst = ElementTree.fromstring(zf.read("xl/sharedStrings.xml"))
        shared = [_text_runs(si) for si in sst if _local(si.tag) == "si"]

    rels: dict[str, str] = {}
    rels_path = "xl/_rels/workbook.xml.rels"
    if rels_path in zf.namelist():
        for rel in ElementTree.fromstring(zf.read(rels_path)):
            rels[rel.get("Id", "")] = rel.get("Target", "")

    workbook = ElementTree.fromstring(zf.read("xl/workbook.xml"))
    sheets_elem = _find(workbook, "sheets")
    if sheets_elem is None:
        return []

    tables: list[tuple[str, list[list[str]]]] = []
    for sheet in sheets_elem:
        if sheet.get("state", "visible") != "visible":
            continue
        name = sheet.get("name", "")
        rid = next((v for k, v in sheet.attrib.items() if _local(k) == "id"), "")
        target = rels.get(rid, "")
        if target.startswith("/"):
            path = target.lstrip("/")
        else:
            path = "xl/" + target
        if path not in zf.namelist():
            continue
        tables.append((name, _read_sheet(zf.read(path), shared)))
    return tables


def _read_sheet(data: bytes, shared: list[str]) -> list[list[str]]:
    root = ElementTree.fromstring(data)
    sheet_data = _find(root, "sheetData")
    if sheet_data is None:
        return []
    by_row: dict[int, list[str]] = {}
    for row in sheet_data:
        if _local(row.tag) != "row":
            continue
        rownum = int(row.get("r", len(by_row) + 1))
        cells: list[str] = []
        next_col = 0
        for cell in row:
            if _local(cell.tag) != "c":
                continue
            ref = cell.get("r")
            col = _col_index(ref) if ref else next_col
            while len(cells) <= col:
                cells.append("")
            cells[col] = _cell_text(cell, shared)
            next_col = col + 1
        by_row[rownum] = cells
    if not by_row:
        return []
    return [by_row.get(i, []) for i in range(1, max(by_row) + 1)]
