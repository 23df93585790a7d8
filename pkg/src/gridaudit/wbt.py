"""Plain-text workbook documents.

A document is a line-oriented UTF-8 file: ``%wbt 1`` header, ``#`` comment
lines, then ``prop``, ``sheet``, ``cell``, ``name`` and ``valid`` directives.
Serialization is canonical (props sorted, cells row-major, names alphabetical)
so serializing any parsed workbook is a fixed point and the document hash is
stable.
"""

from __future__ import annotations

import hashlib
import re

from . import formula as fm
from .model import (
    AddressError,
    Cell,
    CellAddress,
    CellRange,
    ModelError,
    NamedRange,
    Sheet,
    ValidationOperator,
    ValidationRule,
    ValidationType,
    Workbook,
    parse_addr_or_range,
)

WBT_VERSION = 1
DEFAULT_SHEET = "Sheet1"

_PROP_KEY_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_-]*$")
_SHEET_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")

STANDARD_PROPS = ("author", "comments", "purpose", "checked-by")


class WbtError(ValueError):
    """Raised for malformed workbook documents."""

    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def _unquote(token: str, line: int) -> str:
    if len(token) < 2 or not token.endswith('"'):
        raise WbtError(f"unterminated string: {token!r}", line)
    body = token[1:-1]
    out: list[str] = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\":
            if i + 1 >= len(body) or body[i + 1] not in ('"', "\\"):
                raise WbtError(f"invalid escape in string: {token!r}", line)
            out.append(body[i + 1])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _split_line(text: str, line: int) -> list[str]:
    """Whitespace-separated tokens; quoted strings keep a leading '\\0' marker."""
    tokens: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        if text[i] == '"' or text.startswith('fmt="', i):
            prefix = ""
            if text[i] != '"':
                prefix = text[i : i + 4]
                i += 4
            start = i
            i += 1
            while i < n:
                if text[i] == "\\":
                    i += 2
                    continue
                if text[i] == '"':
                    i += 1
                    break
                i += 1
            else:
                raise WbtError("unterminated string", line)
            tokens.append(prefix + "\0" + _unquote(text[start:i], line))
        else:
            start = i
            while i < n and not text[i].isspace():
                i += 1
            tokens.append(text[start:i])
    return tokens


def _is_quoted(token: str) -> bool:
    return token.startswith("\0")


def _quoted_value(token: str) -> str:
    return token[1:]


def parse_workbook(text: str) -> Workbook:
    """Parse a workbook document; raises WbtError with a line number."""
    wb = Workbook()
    current: Sheet | None = None
    seen_header = False
    seen_content = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("%"):
            if seen_header or seen_content:
                raise WbtError("misplaced header line", lineno)
            m = re.match(r"^%wbt\s+(\d+)$", line)
            if not m:
                raise WbtError(f"malformed header: {line!r}", lineno)
            if int(m.group(1)) != WBT_VERSION:
                raise WbtError(f"unsupported format version {m.group(1)}", lineno)
            seen_header = True
            continue
        seen_content = True
        tokens = _split_line(line, lineno)
        directive = tokens[0]
        try:
            if directive == "prop":
                _parse_prop(wb, tokens, lineno)
            elif directive == "sheet":
                current = _parse_sheet(wb, tokens, lineno)
            elif directive == "cell":
                if current is None:
                    current = wb.add_sheet(DEFAULT_SHEET)
                _parse_cell(current, tokens, lineno)
            elif directive == "name":
                _parse_name(wb, tokens, lineno)
            elif directive == "valid":
                _parse_valid(wb, tokens, lineno)
            else:
                raise WbtError(f"unknown directive {directive!r}", lineno)
        except (ModelError, AddressError, fm.ParseError) as exc:
            raise WbtError(str(exc), lineno) from exc
    return wb


def _parse_prop(wb: Workbook, tokens: list[str], line: int) -> None:
    if len(tokens) != 3 or _is_quoted(tokens[1]) or not _is_quoted(tokens[2]):
        raise WbtError('prop syntax: prop <key> "<value>"', line)
    key = tokens[1]
    if not _PROP_KEY_RE.match(key):
        raise WbtError(f"invalid property key {key!r}", line)
    if key in wb.props:
        raise WbtError(f"duplicate property {key!r}", line)
    wb.props[key] = _quoted_value(tokens[2])


def _parse_sheet(wb: Workbook, tokens: list[str], line: int) -> Sheet:
    if len(tokens) != 2 or _is_quoted(tokens[1]):
        raise WbtError("sheet syntax: sheet <Name>", line)
    name = tokens[1]
    if not _SHEET_NAME_RE.match(name):
        raise WbtError(f"invalid sheet name {name!r}", line)
    return wb.add_sheet(name)


def _parse_cell(sheet: Sheet, tokens: list[str], line: int) -> None:
    if len(tokens) < 4:
        raise WbtError("cell syntax: cell <addr> <kind> <value> ...", line)
    addr = CellAddress.parse(tokens[1])
    if addr in sheet.cells:
        raise WbtError(f"duplicate cell {addr.text}", line)
    kind = tokens[2]
    fmt = ""
    input_flag = False
    for tok in tokens[4:]:
        if tok.startswith("fmt=") and tok[4:5] == "\0":
            fmt = tok[5:]
        elif tok == "input":
            input_flag = True
        else:
            raise WbtError(f"unexpected token {tok.replace(chr(0), '')!r} on cell line", line)

    value_tok = tokens[3]
    content: float | str | bool | fm.Formula
    if kind == "num":
        if _is_quoted(value_tok):
            raise WbtError("numeric literal must not be quoted", line)
        try:
            content = float(value_tok)
        except ValueError:
            raise WbtError(f"bad numeric literal {value_tok!r}", line) from None
        if content != content or content in (float("inf"), float("-inf")):
            raise WbtError(f"numeric literal must be finite: {value_tok!r}", line)
    elif kind == "text":
        if not _is_quoted(value_tok):
            raise WbtError("text value must be quoted", line)
        content = _quoted_value(value_tok)
    elif kind == "bool":
        if value_tok not in ("true", "false"):
            raise WbtError("bool value must be true or false", line)
        content = value_tok == "true"
    elif kind == "fml":
        if not _is_quoted(value_tok):
            raise WbtError("formula source must be quoted", line)
        if input_flag:
            raise WbtError("formula cells cannot carry the input flag", line)
        content = fm.parse_formula(_quoted_value(value_tok), style=fm.Style.R1C1)
    else:
        raise WbtError(f"unknown cell kind {kind!r}", line)
    sheet.set(Cell(addr, content, format_code=fmt, input_flag=input_flag))


def _parse_name(wb: Workbook, tokens: list[str], line: int) -> None:
    if len(tokens) != 3 or _is_quoted(tokens[1]) or _is_quoted(tokens[2]):
        raise WbtError("name syntax: name <Identifier> <Sheet>!<ref>", line)
    target = fm.parse_reference(tokens[2], style=fm.Style.R1C1)
    wb.define_name(NamedRange(tokens[1], target))


def _parse_valid(wb: Workbook, tokens: list[str], line: int) -> None:
    if len(tokens) not in (5, 6):
        raise WbtError(
            "valid syntax: valid <addr-or-range> <value-type> <operator> <formula1> [<formula2>]",
            line,
        )
    target = parse_addr_or_range(tokens[1])
    vtype = ValidationType.from_token(tokens[2])
    op = ValidationOperator.from_token(tokens[3])
    f1 = _quoted_value(tokens[4]) if _is_quoted(tokens[4]) else tokens[4]
    f2 = None
    if len(tokens) == 6:
        f2 = _quoted_value(tokens[5]) if _is_quoted(tokens[5]) else tokens[5]
    wb.validations.append(ValidationRule(target, vtype, op, f1, f2))


# ---------------------------------------------------------------------------
# Serialization


def _value_token(value: str) -> str:
    if value == "" or any(ch.isspace() for ch in value) or value.startswith('"'):
        return _quote(value)
    return value


def _cell_line(cell: Cell) -> str:
    parts = ["cell", cell.address.text]
    if isinstance(cell.content, fm.Formula):
        parts += ["fml", _quote(cell.content.source)]
    elif isinstance(cell.content, bool):
        parts += ["bool", "true" if cell.content else "false"]
    elif isinstance(cell.content, str):
        parts += ["text", _quote(cell.content)]
    else:
        parts += ["num", fm.number_text(cell.content)]
    if cell.format_code:
        parts.append("fmt=" + _quote(cell.format_code))
    if cell.input_flag:
        parts.append("input")
    return " ".join(parts)


def serialize_workbook(wb: Workbook) -> str:
    """Canonical document text; a fixed point under parse/serialize."""
    lines = [f"%wbt {WBT_VERSION}"]
    for key in sorted(wb.props):
        lines.append(f"prop {key} {_quote(wb.props[key])}")
    for sheet in wb.sheets:
        lines.append(f"sheet {sheet.name}")
        for addr in sheet.occupied():
            lines.append(_cell_line(sheet.cells[addr]))
    for nr in wb.sorted_names():
        lines.append(f"name {nr.name} {fm.render_reference(nr.target)}")
    for rule in wb.validations:
        parts = [
            "valid",
            rule.target.text,
            rule.value_type.token,
            rule.operator.token,
            _value_token(rule.formula1),
        ]
        if rule.formula2 is not None:
            parts.append(_value_token(rule.formula2))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def fingerprint(wb: Workbook) -> str:
    """Content hash of the canonical document (hex sha256)."""
    return hashlib.sha256(serialize_workbook(wb).encode("utf-8")).hexdigest()


def load_workbook(path: str) -> Workbook:
    with open(path, encoding="utf-8") as fh:
        return parse_workbook(fh.read())
