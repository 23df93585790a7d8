"""Formula syntax: lexer, parser, renderer, and copy semantics.

Formulas are parsed into origin-independent trees: relative reference
components store offsets, absolute components store 1-based indexes.  The
same tree renders in A1 or R1C1 style; the R1C1 rendering needs no origin
and doubles as the canonical *normal form* used for copy-equivalence tests
(two formulas are copies of each other exactly when their normal forms are
byte-equal).

>>> f = parse_formula("=C7+C8", style=Style.A1, origin=CellAddress(9, 3))
>>> normal_form(f.ast)
'=R[-2]C+R[-1]C'
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import NamedTuple, Union

from .model import CellAddress


class Style(enum.Enum):
    A1 = "a1"
    R1C1 = "r1c1"


class ParseError(ValueError):
    """Raised when formula text cannot be parsed."""

    def __init__(self, message: str, position: int | None = None) -> None:
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)
        self.position = position


class RenderError(ValueError):
    """Raised when a tree cannot be rendered in the requested style."""


ERROR_CODES = (
    "#DIV/0!",
    "#VALUE!",
    "#NAME?",
    "#REF!",
    "#N/A",
    "#NUM!",
    "#CIRC!",
    "#ASSERT!",
)


# ---------------------------------------------------------------------------
# Tree nodes


@dataclass(frozen=True)
class RefComponent:
    """One axis of a reference: absolute index or relative offset."""

    absolute: bool
    value: int

    def __post_init__(self) -> None:
        if self.absolute and self.value < 1:
            raise ValueError(f"absolute component must be >= 1, got {self.value}")

    @staticmethod
    def abs(index: int) -> "RefComponent":
        return RefComponent(True, index)

    @staticmethod
    def rel(offset: int) -> "RefComponent":
        return RefComponent(False, offset)

    def at(self, base: int) -> int:
        """Resolve against a base coordinate (origin row or column)."""
        return self.value if self.absolute else base + self.value


@dataclass(frozen=True)
class NumberLit:
    value: float
    percent: bool = False


@dataclass(frozen=True)
class TextLit:
    value: str


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class ErrorLit:
    code: str


@dataclass(frozen=True)
class CellRef:
    row: RefComponent
    col: RefComponent
    sheet: str | None = None


@dataclass(frozen=True)
class RangeRef:
    """Rectangular reference; the sheet qualifier lives on the start corner."""

    start: CellRef
    end: CellRef


@dataclass(frozen=True)
class NameRef:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "negate" | "plus" | "percent"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^ & = <> < <= > >=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str  # upper-cased at parse
    args: tuple["Expr", ...]


Expr = Union[
    NumberLit, TextLit, BoolLit, ErrorLit, CellRef, RangeRef, NameRef, Unary, Binary, Call
]
Reference = Union[CellRef, RangeRef]


@dataclass(frozen=True)
class Formula:
    """A formula cell's content: verbatim source plus its parsed tree."""

    source: str
    ast: Expr


# ---------------------------------------------------------------------------
# Lexer

_R1C1_REF = re.compile(r"R(?:\[([+-]?\d+)\]|(\d+))?C(?:\[([+-]?\d+)\]|(\d+))?(?![A-Za-z0-9_.])")
_A1_REF = re.compile(r"(\$?)([A-Za-z]{1,3})(\$?)(\d+)(?![A-Za-z0-9_.])")
_NUMBER = re.compile(r"(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?")
_STRING = re.compile(r'"(?:[^"]|"")*"')
_ERROR = re.compile("|".join(re.escape(c) for c in ERROR_CODES).replace(r"\#N/A", r"\#N/A(?![A-Za-z])"))
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")
_OPERATOR = re.compile(r"<>|<=|>=|[-+*/^&%=<>(),:!]")
_WS = re.compile(r"\s+")


class Token(NamedTuple):
    kind: str  # NUMBER STRING ERROR REF IDENT OP END
    text: str
    pos: int
    ref: CellRef | None = None


def _col_index(letters: str) -> int:
    n = 0
    for ch in letters.upper():
        n = n * 26 + (ord(ch) - ord("A") + 1)
    return n


def col_letters(index: int) -> str:
    """1-based column index to letters (1 -> A, 27 -> AA)."""
    if index < 1:
        raise RenderError(f"column index must be >= 1, got {index}")
    out = []
    n = index
    while n:
        n, rem = divmod(n - 1, 26)
        out.append(chr(ord("A") + rem))
    return "".join(reversed(out))


def _lex_ref(text: str, pos: int, style: Style, origin: CellAddress | None) -> tuple[CellRef, int] | None:
    if style is Style.R1C1:
        m = _R1C1_REF.match(text, pos)
        if not m:
            return None
        roff, rabs, coff, cabs = m.groups()
        row = RefComponent.abs(int(rabs)) if rabs else RefComponent.rel(int(roff) if roff else 0)
        col = RefComponent.abs(int(cabs)) if cabs else RefComponent.rel(int(coff) if coff else 0)
        return CellRef(row, col), m.end()
    m = _A1_REF.match(text, pos)
    if not m:
        return None
    cdollar, letters, rdollar, digits = m.groups()
    col_idx = _col_index(letters)
    row_idx = int(digits)
    if row_idx < 1:
        return None
    if origin is None:
        raise ParseError("A1-style parsing requires an origin", pos)
    col = RefComponent.abs(col_idx) if cdollar else RefComponent.rel(col_idx - origin.col)
    row = RefComponent.abs(row_idx) if rdollar else RefComponent.rel(row_idx - origin.row)
    return CellRef(row, col), m.end()


def _tokenize(text: str, style: Style, origin: CellAddress | None) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _WS.match(text, pos)
        if m:
            pos = m.end()
            continue
        m = _ERROR.match(text, pos)
        if m:
            tokens.append(Token("ERROR", m.group(), pos))
            pos = m.end()
            continue
        m = _NUMBER.match(text, pos)
        if m:
            tokens.append(Token("NUMBER", m.group(), pos))
            pos = m.end()
            continue
        m = _STRING.match(text, pos)
        if m:
            tokens.append(Token("STRING", m.group(), pos))
            pos = m.end()
            continue
        ref = _lex_ref(text, pos, style, origin)
        if ref is not None:
            cell, end = ref
            tokens.append(Token("REF", text[pos:end], pos, ref=cell))
            pos = end
            continue
        m = _IDENT.match(text, pos)
        if m:
            tokens.append(Token("IDENT", m.group(), pos))
            pos = m.end()
            continue
        m = _OPERATOR.match(text, pos)
        if m:
            tokens.append(Token("OP", m.group(), pos))
            pos = m.end()
            continue
        raise ParseError(f"unexpected character {text[pos]!r}", pos)
    tokens.append(Token("END", "", n))
    return tokens


# ---------------------------------------------------------------------------
# Parser

_COMPARISONS = ("=", "<>", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, text: str, style: Style, origin: CellAddress | None) -> None:
        self.text = text
        self.tokens = _tokenize(text, style, origin)
        self.i = 0

    @property
    def cur(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.cur
        if tok.kind != "OP" or tok.text != op:
            raise ParseError(f"expected {op!r}, found {tok.text or 'end of input'!r}", tok.pos)
        self.advance()

    def at_op(self, *ops: str) -> bool:
        return self.cur.kind == "OP" and self.cur.text in ops

    def parse(self) -> Expr:
        node = self.expr()
        if self.cur.kind != "END":
            raise ParseError(f"trailing input {self.cur.text!r}", self.cur.pos)
        return node

    def expr(self) -> Expr:
        node = self.concat()
        while self.at_op(*_COMPARISONS):
            op = self.advance().text
            node = Binary(op, node, self.concat())
        return node

    def concat(self) -> Expr:
        node = self.additive()
        while self.at_op("&"):
            self.advance()
            node = Binary("&", node, self.additive())
        return node

    def additive(self) -> Expr:
        node = self.multiplicative()
        while self.at_op("+", "-"):
            op = self.advance().text
            node = Binary(op, node, self.multiplicative())
        return node

    def multiplicative(self) -> Expr:
        node = self.power()
        while self.at_op("*", "/"):
            op = self.advance().text
            node = Binary(op, node, self.power())
        return node

    def power(self) -> Expr:
        node = self.unary()
        while self.at_op("^"):
            self.advance()
            node = Binary("^", node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.at_op("-"):
            self.advance()
            return Unary("negate", self.unary())
        if self.at_op("+"):
            self.advance()
            return Unary("plus", self.unary())
        return self.postfix()

    def postfix(self) -> Expr:
        start = self.i
        node = self.primary()
        # a bare number token, not a parenthesized one: "(5)%" must stay an
        # operator application or it could not be told apart from "5%"
        bare_number = self.i == start + 1 and self.tokens[start].kind == "NUMBER"
        while self.at_op("%"):
            self.advance()
            if bare_number and isinstance(node, NumberLit) and not node.percent:
                # fold literal percents so 10% parses as the number 0.10;
                # dividing the token's own digits keeps the fold exact even
                # when the rendered digits are longer than the float's repr
                scaled = Decimal(self.tokens[start].text) / 100
                node = NumberLit(float(scaled), percent=True)
            else:
                node = Unary("percent", node)
        return node

    def primary(self) -> Expr:
        tok = self.cur
        if tok.kind == "NUMBER":
            self.advance()
            return NumberLit(float(tok.text))
        if tok.kind == "STRING":
            self.advance()
            return TextLit(tok.text[1:-1].replace('""', '"'))
        if tok.kind == "ERROR":
            self.advance()
            return ErrorLit(tok.text)
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if tok.kind == "REF":
            return self.reference(None)
        if tok.kind == "IDENT":
            nxt = self.tokens[self.i + 1]
            if nxt.kind == "OP" and nxt.text == "(":
                return self.call()
            if nxt.kind == "OP" and nxt.text == "!":
                sheet = self.advance().text
                self.advance()
                if self.cur.kind != "REF":
                    raise ParseError(
                        f"expected a cell reference after {sheet}!", self.cur.pos
                    )
                return self.reference(sheet)
            self.advance()
            if tok.text.upper() == "TRUE":
                return BoolLit(True)
            if tok.text.upper() == "FALSE":
                return BoolLit(False)
            return NameRef(tok.text)
        raise ParseError(f"unexpected {tok.text or 'end of input'!r}", tok.pos)

    def reference(self, sheet: str | None) -> Expr:
        start_tok = self.advance()
        assert start_tok.ref is not None
        start = CellRef(start_tok.ref.row, start_tok.ref.col, sheet)
        if self.at_op(":"):
            self.advance()
            if self.cur.kind != "REF":
                raise ParseError("expected a cell reference after ':'", self.cur.pos)
            end_tok = self.advance()
            assert end_tok.ref is not None
            return RangeRef(start, end_tok.ref)
        return start

    def call(self) -> Expr:
        name = self.advance().text
        self.expect_op("(")
        args: list[Expr] = []
        if not self.at_op(")"):
            args.append(self.expr())
            while self.at_op(","):
                self.advance()
                args.append(self.expr())
        self.expect_op(")")
        return Call(name.upper(), tuple(args))


def parse_expression(
    text: str, *, style: Style = Style.R1C1, origin: CellAddress | None = None
) -> Expr:
    """Parse a bare expression (no leading '=')."""
    return _Parser(text, style, origin).parse()


def parse_formula(
    text: str, *, style: Style = Style.R1C1, origin: CellAddress | None = None
) -> Formula:
    """Parse formula source of the form '=<expr>'; keeps the source verbatim."""
    if not text.startswith("="):
        raise ParseError("formula must start with '='", 0)
    ast = parse_expression(text[1:], style=style, origin=origin)
    return Formula(text, ast)


def parse_reference(
    text: str, *, style: Style = Style.R1C1, origin: CellAddress | None = None
) -> Reference:
    """Parse a (possibly sheet-qualified) cell or range reference."""
    node = parse_expression(text, style=style, origin=origin)
    if not isinstance(node, (CellRef, RangeRef)):
        raise ParseError(f"not a cell or range reference: {text!r}")
    return node


def looks_like_reference(ident: str) -> bool:
    """True when the identifier would lex as a cell reference in either style."""
    full_r1c1 = re.compile(_R1C1_REF.pattern + r"\Z")
    full_a1 = re.compile(_A1_REF.pattern + r"\Z")
    return bool(full_r1c1.match(ident) or full_a1.match(ident))


# ---------------------------------------------------------------------------
# Rendering

_PREC_CMP = 1
_PREC_CONCAT = 2
_PREC_ADD = 3
_PREC_MUL = 4
_PREC_POW = 5
_PREC_UNARY = 6
_PREC_POSTFIX = 7
_PREC_ATOM = 8

_BINARY_PREC = {
    "=": _PREC_CMP,
    "<>": _PREC_CMP,
    "<": _PREC_CMP,
    "<=": _PREC_CMP,
    ">": _PREC_CMP,
    ">=": _PREC_CMP,
    "&": _PREC_CONCAT,
    "+": _PREC_ADD,
    "-": _PREC_ADD,
    "*": _PREC_MUL,
    "/": _PREC_MUL,
    "^": _PREC_POW,
}


def number_text(value: float) -> str:
    """Shortest literal for a non-negative finite float ('1', not '1.0')."""
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _percent_text(value: float) -> str:
    scaled = Decimal(repr(value)) * 100
    out = format(scaled, "f")
    if "." in out:
        out = out.rstrip("0").rstrip(".")
    return out or "0"


def _node_prec(node: Expr) -> int:
    if isinstance(node, Binary):
        return _BINARY_PREC[node.op]
    if isinstance(node, Unary):
        return _PREC_POSTFIX if node.op == "percent" else _PREC_UNARY
    return _PREC_ATOM


def _render_component(prefix: str, comp: RefComponent) -> str:
    if comp.absolute:
        return f"{prefix}{comp.value}"
    if comp.value == 0:
        return prefix
    return f"{prefix}[{comp.value}]"


def _render_cellref(ref: CellRef, style: Style, origin: CellAddress | None) -> str:
    sheet = f"{ref.sheet}!" if ref.sheet else ""
    if style is Style.R1C1:
        return sheet + _render_component("R", ref.row) + _render_component("C", ref.col)
    if origin is None:
        raise RenderError("A1-style rendering requires an origin")
    row = ref.row.at(origin.row)
    col = ref.col.at(origin.col)
    if row < 1 or col < 1:
        raise RenderError(
            f"reference not representable in A1 at {origin.text}: row {row}, col {col}"
        )
    rdollar = "$" if ref.row.absolute else ""
    cdollar = "$" if ref.col.absolute else ""
    return f"{sheet}{cdollar}{col_letters(col)}{rdollar}{row}"


def _render(node: Expr, style: Style, origin: CellAddress | None) -> str:
    if isinstance(node, NumberLit):
        return _percent_text(node.value) + "%" if node.percent else number_text(node.value)
    if isinstance(node, TextLit):
        return '"' + node.value.replace('"', '""') + '"'
    if isinstance(node, BoolLit):
        return "TRUE" if node.value else "FALSE"
    if isinstance(node, ErrorLit):
        return node.code
    if isinstance(node, CellRef):
        return _render_cellref(node, style, origin)
    if isinstance(node, RangeRef):
        return (
            _render_cellref(node.start, style, origin)
            + ":"
            + _render_cellref(node.end, style, origin)
        )
    if isinstance(node, NameRef):
        return node.name
    if isinstance(node, Call):
        args = ",".join(_render(a, style, origin) for a in node.args)
        return f"{node.name}({args})"
    if isinstance(node, Unary):
        if node.op == "percent":
            inner = _render_child(node.operand, _PREC_POSTFIX, style, origin)
            if isinstance(node.operand, NumberLit) and not node.operand.percent:
                # "(5)%" keeps the unary node distinct from the literal 5%
                inner = f"({inner})"
            return inner + "%"
        sign = "-" if node.op == "negate" else "+"
        return sign + _render_child(node.operand, _PREC_UNARY, style, origin)
    if isinstance(node, Binary):
        prec = _BINARY_PREC[node.op]
        left = _render_child(node.left, prec, style, origin)
        right = _render_child(node.right, prec + 1, style, origin)
        return f"{left}{node.op}{right}"
    raise TypeError(f"unknown node type: {type(node).__name__}")


def _render_child(node: Expr, required: int, style: Style, origin: CellAddress | None) -> str:
    text = _render(node, style, origin)
    if _node_prec(node) < required:
        return f"({text})"
    return text


def render_formula(
    ast: Expr, *, style: Style = Style.R1C1, origin: CellAddress | None = None
) -> str:
    """Render a tree back to '=<expr>' with minimal parentheses.

    Inverse of parsing: parse(render(ast)) yields an equal tree.
    """
    return "=" + _render(ast, style, origin)


def render_reference(
    ref: Reference, *, style: Style = Style.R1C1, origin: CellAddress | None = None
) -> str:
    return _render(ref, style, origin)


def render_expression(
    node: Expr, *, style: Style = Style.R1C1, origin: CellAddress | None = None
) -> str:
    """Render any subtree without the leading '='."""
    return _render(node, style, origin)


def normal_form(ast: Expr) -> str:
    """Origin-independent canonical text: R1C1 rendering of the tree.

    Two formula cells are copy-equivalent exactly when their normal forms
    are byte-equal.
    """
    return render_formula(ast, style=Style.R1C1)


# ---------------------------------------------------------------------------
# Copy translation

_REF_ERROR = ErrorLit("#REF!")


def _ref_in_grid(ref: CellRef, origin: CellAddress) -> bool:
    return ref.row.at(origin.row) >= 1 and ref.col.at(origin.col) >= 1


def translate(ast: Expr, origin_from: CellAddress, origin_to: CellAddress) -> Expr:
    """Early-binding copy of a formula tree from one origin to another.

    Offsets travel with the formula unchanged; the only rewriting is that any
    reference landing off-grid when anchored at ``origin_to`` collapses to
    ErrorLit(#REF!).  Ranges are replaced whole if either corner falls off.
    """
    del origin_from  # offsets are origin-relative, so only the target matters
    if isinstance(ast, CellRef):
        return ast if _ref_in_grid(ast, origin_to) else _REF_ERROR
    if isinstance(ast, RangeRef):
        if _ref_in_grid(ast.start, origin_to) and _ref_in_grid(ast.end, origin_to):
            return ast
        return _REF_ERROR
    if isinstance(ast, Unary):
        return Unary(ast.op, translate(ast.operand, origin_to, origin_to))
    if isinstance(ast, Binary):
        return Binary(
            ast.op,
            translate(ast.left, origin_to, origin_to),
            translate(ast.right, origin_to, origin_to),
        )
    if isinstance(ast, Call):
        return Call(ast.name, tuple(translate(a, origin_to, origin_to) for a in ast.args))
    return ast
