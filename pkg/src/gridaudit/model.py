"""Core workbook data model.

A workbook is a list of sheets, each a sparse mapping from cell addresses to
cells, plus workbook-level named ranges, validation rules, and document
properties.  Addresses are 1-based row/column pairs; the canonical text form
is R1C1 (``R2C3`` is row 2, column 3).  Blank cells are simply absent.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator, Union

if TYPE_CHECKING:
    from .formula import Formula, Reference


class ModelError(ValueError):
    """Raised for structurally invalid model objects."""


class AddressError(ModelError):
    """Raised for malformed or out-of-bounds cell addresses."""


_ADDR_RE = re.compile(r"^R(\d+)C(\d+)$")
_RANGE_RE = re.compile(r"^R(\d+)C(\d+):R(\d+)C(\d+)$")


@dataclass(frozen=True, order=True)
class CellAddress:
    """Absolute grid position, 1-based.

    Ordering is row-major (row first, then column), which is the tie-break
    order used everywhere determinism matters.
    """

    row: int
    col: int

    def __post_init__(self) -> None:
        if self.row < 1:
            raise AddressError(f"row must be >= 1, got {self.row}")
        if self.col < 1:
            raise AddressError(f"column must be >= 1, got {self.col}")

    @classmethod
    def parse(cls, text: str) -> "CellAddress":
        m = _ADDR_RE.match(text.strip())
        if not m:
            raise AddressError(f"malformed cell address: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    @property
    def text(self) -> str:
        return f"R{self.row}C{self.col}"

    def shifted(self, rows: int, cols: int) -> "CellAddress":
        """Return the address offset by (rows, cols); AddressError off-grid."""
        return CellAddress(self.row + rows, self.col + cols)

    def neighbors8(self) -> Iterator["CellAddress"]:
        """The up-to-eight adjacent addresses (fewer at the grid edge)."""
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                r, c = self.row + dr, self.col + dc
                if r >= 1 and c >= 1:
                    yield CellAddress(r, c)

    def __str__(self) -> str:
        return self.text


@dataclass(frozen=True)
class CellRange:
    """Inclusive rectangle of cells, normalized so start <= end."""

    start: CellAddress
    end: CellAddress

    def __post_init__(self) -> None:
        if self.start.row > self.end.row or self.start.col > self.end.col:
            raise AddressError(
                f"range corners out of order: {self.start.text}:{self.end.text}"
            )

    @classmethod
    def from_corners(cls, a: CellAddress, b: CellAddress) -> "CellRange":
        return cls(
            CellAddress(min(a.row, b.row), min(a.col, b.col)),
            CellAddress(max(a.row, b.row), max(a.col, b.col)),
        )

    @classmethod
    def parse(cls, text: str) -> "CellRange":
        m = _RANGE_RE.match(text.strip())
        if not m:
            raise AddressError(f"malformed range: {text!r}")
        r1, c1, r2, c2 = (int(g) for g in m.groups())
        return cls.from_corners(CellAddress(r1, c1), CellAddress(r2, c2))

    @property
    def text(self) -> str:
        return f"{self.start.text}:{self.end.text}"

    @property
    def height(self) -> int:
        return self.end.row - self.start.row + 1

    @property
    def width(self) -> int:
        return self.end.col - self.start.col + 1

    def contains(self, addr: CellAddress) -> bool:
        return (
            self.start.row <= addr.row <= self.end.row
            and self.start.col <= addr.col <= self.end.col
        )

    def cells(self) -> Iterator[CellAddress]:
        """All member addresses in row-major order."""
        for r in range(self.start.row, self.end.row + 1):
            for c in range(self.start.col, self.end.col + 1):
                yield CellAddress(r, c)

    def __str__(self) -> str:
        return self.text


def parse_addr_or_range(text: str) -> Union[CellAddress, CellRange]:
    if ":" in text:
        return CellRange.parse(text)
    return CellAddress.parse(text)


CellContent = Union[float, str, bool, "Formula"]


@dataclass(frozen=True)
class Cell:
    """One occupied grid cell.

    ``content`` is a float, str, or bool constant, or a parsed Formula.  The
    input flag marks constants that a model's author expects reviewers to
    vary; it is never set on formula cells.
    """

    address: CellAddress
    content: CellContent
    format_code: str = ""
    input_flag: bool = False

    def __post_init__(self) -> None:
        from .formula import Formula

        if isinstance(self.content, Formula) and self.input_flag:
            raise ModelError(
                f"{self.address.text}: formula cells cannot carry the input flag"
            )

    @property
    def is_formula(self) -> bool:
        from .formula import Formula

        return isinstance(self.content, Formula)

    @property
    def is_text(self) -> bool:
        return isinstance(self.content, str)

    @property
    def is_number(self) -> bool:
        return isinstance(self.content, float) and not isinstance(self.content, bool)

    @property
    def is_bool(self) -> bool:
        return isinstance(self.content, bool)


@dataclass
class Sheet:
    """A named, sparse grid of cells."""

    name: str
    cells: dict[CellAddress, Cell] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.name:
            raise ModelError("sheet name must be nonempty")

    def set(self, cell: Cell) -> None:
        self.cells[cell.address] = cell

    def get(self, addr: CellAddress) -> Cell | None:
        return self.cells.get(addr)

    def occupied(self) -> list[CellAddress]:
        """Occupied addresses in row-major order."""
        return sorted(self.cells)

    @property
    def max_row(self) -> int:
        return max((a.row for a in self.cells), default=0)

    @property
    def max_col(self) -> int:
        return max((a.col for a in self.cells), default=0)


@dataclass(frozen=True)
class NamedRange:
    """A workbook-level name for a reference expression.

    The target may contain relative components (``Forecast!RC[-1]``), in which
    case it resolves against the cell that mentions the name.
    """

    name: str
    target: "Reference"

    def __post_init__(self) -> None:
        from .formula import CellRef, RangeRef, looks_like_reference

        if not _NAME_RE.match(self.name):
            raise ModelError(f"invalid name identifier: {self.name!r}")
        if looks_like_reference(self.name):
            raise ModelError(
                f"name {self.name!r} would shadow a cell reference"
            )
        if not isinstance(self.target, (CellRef, RangeRef)):
            raise ModelError(
                f"name {self.name!r} target must be a cell or range reference"
            )


_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


class ValidationType(enum.Enum):
    """Allowed-value categories for data validation rules."""

    INPUT_ONLY = ("input-only", "Input Only")
    WHOLE_NUMBER = ("whole-number", "Whole Number")
    DECIMAL = ("decimal", "Decimal")
    LIST = ("list", "List")
    DATE = ("date", "Date")
    TIME = ("time", "Time")
    TEXT_LENGTH = ("text-length", "Text Length")
    CUSTOM = ("custom", "Custom")

    def __init__(self, token: str, display: str) -> None:
        self.token = token
        self.display = display

    @classmethod
    def from_token(cls, token: str) -> "ValidationType":
        for member in cls:
            if member.token == token:
                return member
        raise ModelError(f"unknown validation value type: {token!r}")


class ValidationOperator(enum.Enum):
    BETWEEN = ("between", "Between")
    NOT_BETWEEN = ("not-between", "Not Between")
    EQUAL = ("equal", "Equal")
    NOT_EQUAL = ("not-equal", "Not Equal")
    GREATER = ("greater", "Greater")
    LESS = ("less", "Less")
    GREATER_OR_EQUAL = ("greater-or-equal", "Greater Or Equal")
    LESS_OR_EQUAL = ("less-or-equal", "Less Or Equal")

    def __init__(self, token: str, display: str) -> None:
        self.token = token
        self.display = display

    @classmethod
    def from_token(cls, token: str) -> "ValidationOperator":
        for member in cls:
            if member.token == token:
                return member
        raise ModelError(f"unknown validation operator: {token!r}")

    @property
    def is_unbounded(self) -> bool:
        """True for operators that leave at least one side open."""
        return self in (
            ValidationOperator.GREATER,
            ValidationOperator.LESS,
            ValidationOperator.GREATER_OR_EQUAL,
            ValidationOperator.LESS_OR_EQUAL,
            ValidationOperator.NOT_EQUAL,
        )


@dataclass(frozen=True)
class ValidationRule:
    """A data-validation constraint on a cell or range.

    ``formula1``/``formula2`` are kept as verbatim text ("0%", "100,000"):
    rules round-trip and print exactly as written.
    """

    target: Union[CellAddress, CellRange]
    value_type: ValidationType
    operator: ValidationOperator
    formula1: str
    formula2: str | None = None

    def covers(self, addr: CellAddress) -> bool:
        if isinstance(self.target, CellAddress):
            return self.target == addr
        return self.target.contains(addr)

    @property
    def target_cells(self) -> list[CellAddress]:
        if isinstance(self.target, CellAddress):
            return [self.target]
        return list(self.target.cells())


@dataclass
class Workbook:
    """Sheets plus workbook-scoped names, validations, and properties.

    Sheet order and validation order are the declared order; names are kept
    in a dict keyed by casefolded identifier (uniqueness is case-insensitive).
    """

    sheets: list[Sheet] = field(default_factory=list)
    names: dict[str, NamedRange] = field(default_factory=dict)
    validations: list[ValidationRule] = field(default_factory=list)
    props: dict[str, str] = field(default_factory=dict)

    def sheet(self, name: str) -> Sheet | None:
        for s in self.sheets:
            if s.name == name:
                return s
        return None

    def add_sheet(self, name: str) -> Sheet:
        if self.sheet(name) is not None:
            raise ModelError(f"duplicate sheet name: {name!r}")
        s = Sheet(name)
        self.sheets.append(s)
        return s

    def single_sheet(self) -> Sheet:
        """The sole sheet; analysis passes operate on exactly one sheet."""
        if len(self.sheets) != 1:
            raise ModelError(
                f"operation requires a single-sheet workbook, found {len(self.sheets)} sheets"
            )
        return self.sheets[0]

    def define_name(self, nr: NamedRange) -> None:
        key = nr.name.casefold()
        if key in self.names:
            raise ModelError(f"duplicate name: {nr.name!r}")
        self.names[key] = nr

    def lookup_name(self, name: str) -> NamedRange | None:
        return self.names.get(name.casefold())

    def sorted_names(self) -> list[NamedRange]:
        """Declared names in case-insensitive alphabetical order."""
        return [self.names[k] for k in sorted(self.names)]

    def rules_for(self, addr: CellAddress) -> list[ValidationRule]:
        return [r for r in self.validations if r.covers(addr)]
