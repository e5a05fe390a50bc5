"""Minimal ARFF reader/writer covering the subset used by ASlib scenario files.

Supported: ``@RELATION``, ``@ATTRIBUTE name type`` (NUMERIC / REAL / INTEGER /
STRING / {nominal,values}), ``@DATA`` with comma-separated rows, ``?`` for
missing cells and ``%`` comment lines. Keywords are case-insensitive. Sparse
rows, dates and escape sequences are deliberately out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

NUMERIC = "numeric"
TEXT = "text"
NOMINAL = "nominal"


class ArffError(ValueError):
    """Malformed ARFF input; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str  # NUMERIC, TEXT or NOMINAL
    values: tuple[str, ...] = ()  # nominal domain, empty otherwise


@dataclass(frozen=True)
class RelationTable:
    """Parsed relation: attributes in declaration order, rows in file order.

    Cells are floats for numeric attributes, strings otherwise; ``None``
    encodes a missing value.
    """

    relation_name: str
    attributes: tuple[Attribute, ...]
    rows: tuple[tuple, ...] = field(default_factory=tuple)

    def attribute_index(self, name: str) -> int:
        lowered = name.lower()
        for i, attr in enumerate(self.attributes):
            if attr.name.lower() == lowered:
                return i
        raise KeyError(f"relation {self.relation_name!r} has no attribute {name!r}")

    def column(self, name: str) -> list:
        idx = self.attribute_index(name)
        return [row[idx] for row in self.rows]


def _unquote(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "'\"":
        return token[1:-1]
    return token


def _parse_attribute(rest: str, line_no: int) -> Attribute:
    rest = rest.strip()
    if not rest:
        raise ArffError("@ATTRIBUTE requires a name and a type", line_no)
    if rest[0] in "'\"":
        quote = rest[0]
        end = rest.find(quote, 1)
        if end < 0:
            raise ArffError("unterminated quoted attribute name", line_no)
        name = rest[1:end]
        type_part = rest[end + 1 :].strip()
    else:
        pieces = rest.split(None, 1)
        if len(pieces) != 2:
            raise ArffError("@ATTRIBUTE requires a name and a type", line_no)
        name, type_part = pieces[0], pieces[1].strip()
    if not name:
        raise ArffError("empty attribute name", line_no)
    if type_part.startswith("{"):
        if not type_part.endswith("}"):
            raise ArffError("unterminated nominal specification", line_no)
        values = tuple(_unquote(v) for v in type_part[1:-1].split(","))
        return Attribute(name, NOMINAL, values)
    type_word = type_part.split()[0].lower() if type_part else ""
    if type_word in ("numeric", "real", "integer"):
        return Attribute(name, NUMERIC)
    if type_word == "string":
        return Attribute(name, TEXT)
    raise ArffError(f"unsupported attribute type {type_part!r}", line_no)


def _split_row(line: str) -> list[str]:
    # Commas inside quoted cells are preserved.
    cells: list[str] = []
    buf: list[str] = []
    quote: str | None = None
    for ch in line:
        if quote:
            if ch == quote:
                quote = None
            buf.append(ch)
        elif ch in "'\"":
            quote = ch
            buf.append(ch)
        elif ch == ",":
            cells.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    cells.append("".join(buf))
    return cells


def _parse_cell(token: str, attr: Attribute, line_no: int):
    token = token.strip()
    if token == "?":
        return None
    if attr.kind == NUMERIC:
        try:
            value = float(token)
        except ValueError:
            raise ArffError(
                f"cell {token!r} of numeric attribute {attr.name!r} is not a number",
                line_no,
            ) from None
        if not math.isfinite(value):
            raise ArffError(
                f"cell {token!r} of numeric attribute {attr.name!r} is not finite",
                line_no,
            )
        return value
    return _unquote(token)


def parse_arff(text: str | Iterable[str]) -> RelationTable:
    """Parse ARFF text into a :class:`RelationTable`.

    Raises :class:`ArffError` naming the offending line for malformed headers,
    row arity mismatches and unparseable numeric cells.
    """
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = [line.rstrip("\n") for line in text]

    relation_name: str | None = None
    attributes: list[Attribute] = []
    rows: list[tuple] = []
    in_data = False

    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not in_data:
            keyword = line.split(None, 1)[0].lower()
            rest = line[len(keyword) :].strip()
            if keyword == "@relation":
                relation_name = _unquote(rest)
            elif keyword == "@attribute":
                attributes.append(_parse_attribute(rest, line_no))
            elif keyword == "@data":
                if relation_name is None:
                    raise ArffError("@DATA before @RELATION", line_no)
                if not attributes:
                    raise ArffError("@DATA with no attributes declared", line_no)
                in_data = True
            else:
                raise ArffError(f"unexpected header line {line!r}", line_no)
            continue
        cells = _split_row(line)
        if len(cells) != len(attributes):
            raise ArffError(
                f"row has {len(cells)} cells, expected {len(attributes)}", line_no
            )
        rows.append(
            tuple(
                _parse_cell(cell, attr, line_no)
                for cell, attr in zip(cells, attributes)
            )
        )

    if relation_name is None:
        raise ArffError("missing @RELATION header")
    if not in_data:
        raise ArffError("missing @DATA section")
    return RelationTable(relation_name, tuple(attributes), tuple(rows))


def parse_arff_file(path: str | Path) -> RelationTable:
    return parse_arff(Path(path).read_text())


def _format_cell(value, attr: Attribute) -> str:
    if value is None:
        return "?"
    if attr.kind == NUMERIC:
        return repr(float(value))
    text = str(value)
    if "," in text or " " in text or text == "?":
        return f"'{text}'"
    return text


def dump_arff(table: RelationTable) -> str:
    """Serialize a table back to ARFF; inverse of :func:`parse_arff`."""
    out = [f"@RELATION {table.relation_name}"]
    for attr in table.attributes:
        name = attr.name if " " not in attr.name else f"'{attr.name}'"
        if attr.kind == NUMERIC:
            out.append(f"@ATTRIBUTE {name} NUMERIC")
        elif attr.kind == TEXT:
            out.append(f"@ATTRIBUTE {name} STRING")
        else:
            out.append(f"@ATTRIBUTE {name} {{{','.join(attr.values)}}}")
    out.append("@DATA")
    for row in table.rows:
        out.append(",".join(_format_cell(v, a) for v, a in zip(row, table.attributes)))
    return "\n".join(out) + "\n"
