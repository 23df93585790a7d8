"""Workbook recalculation.

Evaluation is demand-driven with memoization over the occupied cells of a
single sheet.  Cells on static reference cycles are pinned to #CIRC! before
anything else runs; a dynamic re-entry (through OFFSET, say) hits the
in-progress guard and yields #CIRC! as well.  Overrides substitute the
content of occupied cells without touching the workbook, which is how the
what-if passes (zeroing inputs, nudging one input) are built.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping, Union

from . import formula as fm
from .formats import format_value, general_number
from .graph import (
    Resolution,
    ResolutionKind,
    UnknownNameError,
    build_graph,
    cycle_members,
    resolve_cellref,
    resolve_name,
    resolve_rangeref,
)
from .model import CellAddress, ModelError, Workbook


@dataclass(frozen=True)
class ErrorValue:
    code: str
    message: str = ""

    def __str__(self) -> str:
        return self.code


Value = Union[float, str, bool, None, ErrorValue]
ValueGrid = dict[CellAddress, Value]

DIV0 = ErrorValue("#DIV/0!")
VALUE_ERROR = ErrorValue("#VALUE!")
NAME_ERROR = ErrorValue("#NAME?")
REF_ERROR = ErrorValue("#REF!")
NUM_ERROR = ErrorValue("#NUM!")
CIRC_ERROR = ErrorValue("#CIRC!")

RELATIVE_TOLERANCE = 1e-13

_ARITH_RANK = {"number": 0, "text": 1, "bool": 2}


def _is_error(v: Value) -> bool:
    return isinstance(v, ErrorValue)


def _as_number(v: Value) -> float | ErrorValue:
    if isinstance(v, ErrorValue):
        return v
    if v is None:
        return 0.0
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if isinstance(v, float):
        return v
    return VALUE_ERROR


def _as_text(v: Value) -> str | ErrorValue:
    if isinstance(v, ErrorValue):
        return v
    if v is None:
        return ""
    if isinstance(v, bool):
        return "TRUE" if v else "FALSE"
    if isinstance(v, float):
        return general_number(v)
    return v


def _as_condition(v: Value) -> bool | ErrorValue:
    if isinstance(v, ErrorValue):
        return v
    if v is None:
        return False
    if isinstance(v, bool):
        return v
    if isinstance(v, float):
        return v != 0.0
    return VALUE_ERROR


def _finite(x: float) -> Value:
    if math.isfinite(x):
        return x
    return NUM_ERROR


def _compare(op: str, left: Value, right: Value) -> Value:
    if _is_error(left):
        return left
    if _is_error(right):
        return right
    # blanks borrow the other operand's type; two blanks compare as numbers
    if left is None and right is None:
        left = right = 0.0
    elif left is None:
        left = _blank_as(right)
    elif right is None:
        right = _blank_as(left)

    lrank = _rank(left)
    rrank = _rank(right)
    if lrank != rrank:
        cmp = -1 if lrank < rrank else 1
    else:
        if isinstance(left, str):
            lk, rk = left.casefold(), right.casefold()  # type: ignore[union-attr]
        else:
            lk, rk = left, right
        cmp = 0 if lk == rk else (-1 if lk < rk else 1)  # type: ignore[operator]
    if op == "=":
        return cmp == 0
    if op == "<>":
        return cmp != 0
    if op == "<":
        return cmp < 0
    if op == "<=":
        return cmp <= 0
    if op == ">":
        return cmp > 0
    return cmp >= 0


def _rank(v: Value) -> int:
    if isinstance(v, bool):
        return 2
    if isinstance(v, str):
        return 1
    return 0


def _blank_as(other: Value) -> Value:
    if isinstance(other, bool):
        return False
    if isinstance(other, str):
        return ""
    return 0.0


def round_half_away(x: float, digits: int) -> float:
    """Round on the shortest decimal repr with ties away from zero."""
    quantum = Decimal(1).scaleb(-digits)
    return float(Decimal(f"{x:.15g}").quantize(quantum, rounding=ROUND_HALF_UP))


class _Evaluator:
    def __init__(
        self,
        wb: Workbook,
        overrides: Mapping[CellAddress, float | str | bool] | None = None,
    ) -> None:
        self.wb = wb
        self.sheet = wb.single_sheet()
        self.overrides = dict(overrides or {})
        for addr in self.overrides:
            if addr not in self.sheet.cells:
                raise ModelError(f"override target {addr.text} is not an occupied cell")
        self.values: ValueGrid = {}
        self.in_progress: set[CellAddress] = set()
        graph = build_graph(wb)
        if self.overrides:
            # an overridden cell is a constant, so its old edges are gone
            graph.edges = {e for e in graph.edges if e.dependent not in self.overrides}
        for member in cycle_members(graph):
            self.values[member] = CIRC_ERROR

    def run(self) -> ValueGrid:
        for addr in self.sheet.occupied():
            self.cell_value(addr)
        return self.values

    def cell_value(self, addr: CellAddress) -> Value:
        if addr in self.values:
            return self.values[addr]
        if addr not in self.sheet.cells:
            return None
        if addr in self.in_progress:
            return CIRC_ERROR
        self.in_progress.add(addr)
        try:
            if addr in self.overrides:
                value: Value = self._constant(self.overrides[addr])
            else:
                content = self.sheet.cells[addr].content
                if isinstance(content, fm.Formula):
                    value = self.eval(content.ast, addr)
                else:
                    value = self._constant(content)
        finally:
            self.in_progress.discard(addr)
        self.values[addr] = value
        return value

    @staticmethod
    def _constant(content: float | str | bool) -> Value:
        if isinstance(content, bool):
            return content
        if isinstance(content, (int, float)):
            return float(content)
        return content

    # -- expression evaluation ------------------------------------------

    def eval(self, node: fm.Expr, origin: CellAddress) -> Value:
        if isinstance(node, fm.NumberLit):
            return node.value
        if isinstance(node, fm.TextLit):
            return node.value
        if isinstance(node, fm.BoolLit):
            return node.value
        if isinstance(node, fm.ErrorLit):
            return ErrorValue(node.code)
        if isinstance(node, (fm.CellRef, fm.RangeRef, fm.NameRef)):
            return self._ref_value(node, origin)
        if isinstance(node, fm.Unary):
            return self._unary(node, origin)
        if isinstance(node, fm.Binary):
            return self._binary(node, origin)
        if isinstance(node, fm.Call):
            return self._call(node, origin)
        raise TypeError(f"unexpected node {node!r}")

    def _resolution(self, node: fm.Expr, origin: CellAddress, *, scalar: bool) -> Resolution | Value:
        """Resolution for reference-shaped nodes, or an error value."""
        if isinstance(node, fm.CellRef):
            return resolve_cellref(node, origin, self.sheet.name)
        if isinstance(node, fm.RangeRef):
            return resolve_rangeref(node, origin, self.sheet.name, scalar=scalar)
        if isinstance(node, fm.NameRef):
            try:
                return resolve_name(node.name, origin, self.wb, scalar=scalar)
            except UnknownNameError:
                return NAME_ERROR
        if isinstance(node, fm.Call) and node.name == "OFFSET":
            return self._offset_resolution(node, origin)
        return self.eval(node, origin)

    def _resolution_value(self, res: Resolution) -> Value:
        if res.kind is ResolutionKind.CELL:
            return self.cell_value(res.cell)
        if res.kind is ResolutionKind.OFF_GRID:
            return REF_ERROR
        if res.kind is ResolutionKind.CROSS_SHEET:
            return REF_ERROR
        return VALUE_ERROR  # empty intersection or 2D range in scalar context

    def _ref_value(self, node: fm.Expr, origin: CellAddress) -> Value:
        res = self._resolution(node, origin, scalar=True)
        if not isinstance(res, Resolution):
            return res
        return self._resolution_value(res)

    def _unary(self, node: fm.Unary, origin: CellAddress) -> Value:
        val = self.eval(node.operand, origin)
        num = _as_number(val)
        if isinstance(num, ErrorValue):
            return num
        if node.op == "negate":
            return _finite(-num)
        if node.op == "plus":
            return _finite(num)
        return _finite(num / 100.0)

    def _binary(self, node: fm.Binary, origin: CellAddress) -> Value:
        op = node.op
        left = self.eval(node.left, origin)
        right = self.eval(node.right, origin)
        if op in ("=", "<>", "<", "<=", ">", ">="):
            return _compare(op, left, right)
        if op == "&":
            lt = _as_text(left)
            if isinstance(lt, ErrorValue):
                return lt
            rt = _as_text(right)
            if isinstance(rt, ErrorValue):
                return rt
            return lt + rt
        ln = _as_number(left)
        if isinstance(ln, ErrorValue):
            return ln
        rn = _as_number(right)
        if isinstance(rn, ErrorValue):
            return rn
        try:
            if op == "+":
                return _finite(ln + rn)
            if op == "-":
                return _finite(ln - rn)
            if op == "*":
                return _finite(ln * rn)
            if op == "/":
                if rn == 0.0:
                    return DIV0
                return _finite(ln / rn)
            if op == "^":
                result = ln**rn
                if isinstance(result, complex):
                    return NUM_ERROR
                return _finite(result)
        except OverflowError:
            return NUM_ERROR
        except ZeroDivisionError:
            return DIV0
        except ValueError:
            return NUM_ERROR
        raise ValueError(f"unexpected operator {op!r}")

    # -- function calls -------------------------------------------------

    def _call(self, node: fm.Call, origin: CellAddress) -> Value:
        name = node.name
        handler = _FUNCTIONS.get(name)
        if handler is None:
            return NAME_ERROR
        return handler(self, node, origin)

    def _offset_resolution(self, node: fm.Call, origin: CellAddress) -> Resolution | Value:
        if len(node.args) not in (3, 5):
            return VALUE_ERROR
        base = self._resolution(node.args[0], origin, scalar=False)
        if not isinstance(base, Resolution):
            return base if _is_error(base) else VALUE_ERROR
        if base.kind in (ResolutionKind.OFF_GRID, ResolutionKind.CROSS_SHEET):
            return REF_ERROR
        if base.kind is ResolutionKind.EMPTY:
            return VALUE_ERROR
        scalars: list[float] = []
        for arg in node.args[1:]:
            val = _as_number(self.eval(arg, origin))
            if isinstance(val, ErrorValue):
                return val
            scalars.append(val)
        rows, cols = int(scalars[0]), int(scalars[1])
        if base.kind is ResolutionKind.CELL:
            anchor = base.cell
            height = width = 1
        else:
            anchor = base.range.start
            height = base.range.height
            width = base.range.width
        if len(scalars) == 4:
            height, width = int(scalars[2]), int(scalars[3])
            if height < 1 or width < 1:
                return REF_ERROR
        top = anchor.row + rows
        left = anchor.col + cols
        if top < 1 or left < 1:
            return REF_ERROR
        if height == 1 and width == 1:
            return Resolution(ResolutionKind.CELL, cell=CellAddress(top, left))
        from .model import CellRange

        return Resolution(
            ResolutionKind.RANGE,
            range=CellRange(
                CellAddress(top, left), CellAddress(top + height - 1, left + width - 1)
            ),
        )

    def _aggregate_values(self, node: fm.Call, origin: CellAddress) -> list[Value] | ErrorValue:
        """Flatten aggregate arguments: ranges spread to their occupied cells."""
        out: list[Value] = []
        for arg in node.args:
            res = self._resolution(arg, origin, scalar=False)
            if isinstance(res, Resolution):
                if res.kind in (ResolutionKind.OFF_GRID, ResolutionKind.CROSS_SHEET):
                    return REF_ERROR
                if res.kind is ResolutionKind.EMPTY:
                    return VALUE_ERROR
                if res.kind is ResolutionKind.CELL:
                    out.append(self.cell_value(res.cell))
                else:
                    for cell in res.range.cells():
                        if cell in self.sheet.cells:
                            out.append(self.cell_value(cell))
            else:
                if isinstance(res, ErrorValue):
                    return res
                out.append(res)
        for v in out:
            if isinstance(v, ErrorValue):
                return v
        return out


def _fn_sum(ev: _Evaluator, node: fm.Call, origin: CellAddress) -> Value:
    if not node.args:
        return VALUE_ERROR
    vals = ev._aggregate_values(node, origin)
    if isinstance(vals, ErrorValue):
        return vals
    total = 0.0
    for v in vals:
        if isinstance(v, float) and not isinstance(v, bool):
            total += v
        elif isinstance(v, (str, bool)) or v is None:
            continue
    return _finite(total)


def _fn_minmax(best: str):
    def fn(ev: _Evaluator, node: fm.Call, origin: CellAddress) -> Value:
        if not node.args:
            return VALUE_ERROR
        vals = ev._aggregate_values(node, origin)
        if isinstance(vals, ErrorValue):
            return vals
        numbers = [v for v in vals if isinstance(v, float) and not isinstance(v, bool)]
        if not numbers:
            return 0.0
        return min(numbers) if best == "min" else max(numbers)

    return fn


def _fn_if(ev: _Evaluator, node: fm.Call, origin: CellAddress) -> Value:
    if len(node.args) not in (2, 3):
        return VALUE_ERROR
    cond = _as_condition(ev.eval(node.args[0], origin))
    if isinstance(cond, ErrorValue):
        return cond
    if cond:
        return ev.eval(node.args[1], origin)
    if len(node.args) == 3:
        return ev.eval(node.args[2], origin)
    return False


def _fn_counta(ev: _Evaluator, node: fm.Call, origin: CellAddress) -> Value:
    if not node.args:
        return VALUE_ERROR
    vals = ev._aggregate_values(node, origin)
    if isinstance(vals, ErrorValue):
        return vals
    return float(sum(1 for v in vals if v is not None))


def _fn_iserror(ev: _Evaluator, node: fm.Call, origin: CellAddress) -> Value:
    if len(node.args) != 1:
        return VALUE_ERROR
    return isinstance(ev.eval(node.args[0], origin), ErrorValue)


def _fn_isna(ev: _Evaluator, node: fm.Call, origin: CellAddress) -> Value:
    if len(node.args) != 1:
        return VALUE_ERROR
    val = ev.eval(node.args[0], origin)
    return isinstance(val, ErrorValue) and val.code == "#N/A"


def _fn_abs(ev: _Evaluator, node: fm.Call, origin: CellAddress) -> Value:
    if len(node.args) != 1:
        return VALUE_ERROR
    num = _as_number(ev.eval(node.args[0], origin))
    if isinstance(num, ErrorValue):
        return num
    return _finite(abs(num))


def _fn_round(ev: _Evaluator, node: fm.Call, origin: CellAddress) -> Value:
    if len(node.args) != 2:
        return VALUE_ERROR
    num = _as_number(ev.eval(node.args[0], origin))
    if isinstance(num, ErrorValue):
        return num
    digits = _as_number(ev.eval(node.args[1], origin))
    if isinstance(digits, ErrorValue):
        return digits
    return _finite(round_half_away(num, int(digits)))


def _fn_offset(ev: _Evaluator, node: fm.Call, origin: CellAddress) -> Value:
    res = ev._offset_resolution(node, origin)
    if not isinstance(res, Resolution):
        return res
    return ev._resolution_value(res)


def _fn_assert(ev: _Evaluator, node: fm.Call, origin: CellAddress) -> Value:
    if len(node.args) != 3:
        return VALUE_ERROR
    actual = ev.eval(node.args[0], origin)
    if isinstance(actual, ErrorValue):
        return actual
    expected = ev.eval(node.args[1], origin)
    if isinstance(expected, ErrorValue):
        return expected
    message = _as_text(ev.eval(node.args[2], origin))
    if isinstance(message, ErrorValue):
        return message
    a = _as_number(actual)
    b = _as_number(expected)
    if isinstance(a, ErrorValue):
        return a
    if isinstance(b, ErrorValue):
        return b
    if a == b:
        return a
    if b == 0.0:
        return ErrorValue("#ASSERT!", message)
    if abs(a / b - 1.0) < RELATIVE_TOLERANCE:
        return a
    return ErrorValue("#ASSERT!", message)


_FUNCTIONS = {
    "SUM": _fn_sum,
    "MIN": _fn_minmax("min"),
    "MAX": _fn_minmax("max"),
    "IF": _fn_if,
    "COUNTA": _fn_counta,
    "ISERROR": _fn_iserror,
    "ISNA": _fn_isna,
    "ABS": _fn_abs,
    "ROUND": _fn_round,
    "OFFSET": _fn_offset,
    "ASSERT": _fn_assert,
}


def recalculate(
    wb: Workbook, overrides: Mapping[CellAddress, float | str | bool] | None = None
) -> ValueGrid:
    """Compute every occupied cell's value, optionally with content overrides."""
    return _Evaluator(wb, overrides).run()


def display_grid(
    wb: Workbook, values: ValueGrid | None = None
) -> list[list[str]]:
    """Displayed text for the sheet's bounding rectangle, row by row."""
    sheet = wb.single_sheet()
    if values is None:
        values = recalculate(wb)
    rows: list[list[str]] = []
    for r in range(1, sheet.max_row + 1):
        row: list[str] = []
        for c in range(1, sheet.max_col + 1):
            addr = CellAddress(r, c)
            cell = sheet.cells.get(addr)
            if cell is None:
                row.append("")
            else:
                row.append(format_value(values.get(addr), cell.format_code))
        rows.append(row)
    return rows
