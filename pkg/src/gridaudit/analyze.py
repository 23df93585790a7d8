"""Cascade analysis, cell classification, what-if checks, and cell maps.

A cascade is a source-to-sink path through the dependency graph; its length
in nodes feeds the compound error probability 1 - (1-e)^n.  Classification
mirrors the classic auditing-map palette: labels, inputs, formulas, and
formulas whose normal form matches the cell to the left, above, or both.
"""

from __future__ import annotations

import enum
import html
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

from . import formula as fm
from .engine import ErrorValue, Value, recalculate
from .formats import format_value
from .graph import DepGraph, cycle_members
from .model import CellAddress, CellRange, Workbook

PATH_CAP = 10**6


class AnalysisError(ValueError):
    pass


def cascade_risk(e: float, n: int) -> float:
    """Probability that at least one of n chained cells is wrong.

    e is the per-cell error probability; the chain compounds as 1 - (1-e)^n.
    """
    if not 0.0 <= e <= 1.0:
        raise AnalysisError(f"error rate must be within [0, 1], got {e!r}")
    if n < 0 or n != int(n):
        raise AnalysisError(f"chain length must be a non-negative integer, got {n!r}")
    return 1.0 - (1.0 - e) ** int(n)


@dataclass(frozen=True)
class CascadeCensus:
    paths: tuple[tuple[Hashable, ...], ...]
    histogram: dict[int, int]
    truncated: bool = False
    labels: Mapping[Hashable, str] | None = None
    excluded_cycle_nodes: tuple[Hashable, ...] = ()


def _enumerate_paths(
    adjacency: Mapping[Hashable, set], cap: int
) -> tuple[list[tuple[Hashable, ...]], bool]:
    indegree: dict[Hashable, int] = {n: 0 for n in adjacency}
    for dsts in adjacency.values():
        for dst in dsts:
            indegree[dst] += 1
    sources = sorted(n for n, d in indegree.items() if d == 0)
    paths: list[tuple[Hashable, ...]] = []
    truncated = False

    def extend(node: Hashable, trail: list[Hashable]) -> bool:
        trail.append(node)
        successors = sorted(adjacency[node])
        if not successors:
            if len(paths) >= cap:
                trail.pop()
                return False
            paths.append(tuple(trail))
        else:
            for succ in successors:
                if not extend(succ, trail):
                    trail.pop()
                    return False
        trail.pop()
        return True

    for src in sources:
        if not extend(src, []):
            truncated = True
            break
    return paths, truncated


def enumerate_cascades(
    graph: DepGraph, level: str = "cell", cap: int = PATH_CAP
) -> CascadeCensus:
    """Census of all source-to-sink paths, by cell or by caption-labelled row.

    Cells on cycles are excluded from the node set first (a path census is
    only defined on the acyclic part); an isolated node is its own one-node
    cascade.  Enumeration stops at the cap and sets the truncated flag.
    """
    if level not in ("cell", "row"):
        raise AnalysisError(f"unknown cascade level {level!r}")
    cyclic = cycle_members(graph)
    if level == "cell":
        nodes: set[Hashable] = {n for n in graph.nodes if n not in cyclic}
        adjacency: dict[Hashable, set] = {n: set() for n in nodes}
        for e in graph.edges:
            if e.precedent in nodes and e.dependent in nodes:
                adjacency[e.precedent].add(e.dependent)
        labels = None
    else:
        rows = {a.row for a in graph.nodes if a not in cyclic}
        nodes = set(rows)
        adjacency = {r: set() for r in rows}
        for e in graph.edges:
            if e.precedent in cyclic or e.dependent in cyclic:
                continue
            src, dst = e.precedent.row, e.dependent.row
            if src != dst:
                adjacency[src].add(dst)
        labels = None  # caller attaches captions; rows are the node ids
    paths, truncated = _enumerate_paths(adjacency, cap)
    histogram: dict[int, int] = {}
    for p in paths:
        histogram[len(p)] = histogram.get(len(p), 0) + 1
    return CascadeCensus(
        paths=tuple(paths),
        histogram=dict(sorted(histogram.items())),
        truncated=truncated,
        labels=labels,
        excluded_cycle_nodes=tuple(sorted(cyclic)),
    )


# ---------------------------------------------------------------------------
# Cell classification


class CellClass(enum.Enum):
    BLANK = "blank"
    LABEL = "label"
    INPUT = "input"
    FORMULA = "formula"
    COPY_RIGHT = "copy-right"
    COPY_DOWN = "copy-down"
    COPY_BOTH = "copy-both"


def classify_cells(wb: Workbook) -> dict[CellAddress, CellClass]:
    """Class per occupied cell.

    Text constants are labels and other constants inputs, regardless of the
    input flag (the flag drives validation and what-if checks, not the map).
    A formula matching the normal form of its left or upper neighbor is a
    copy in that direction; matching both wins over either.
    """
    sheet = wb.single_sheet()
    forms: dict[CellAddress, str] = {}
    for addr, cell in sheet.cells.items():
        if isinstance(cell.content, fm.Formula):
            forms[addr] = fm.normal_form(cell.content.ast)
    out: dict[CellAddress, CellClass] = {}
    for addr, cell in sheet.cells.items():
        if isinstance(cell.content, str):
            out[addr] = CellClass.LABEL
            continue
        if addr not in forms:
            out[addr] = CellClass.INPUT
            continue
        nf = forms[addr]
        left = addr.col > 1 and forms.get(CellAddress(addr.row, addr.col - 1)) == nf
        up = addr.row > 1 and forms.get(CellAddress(addr.row - 1, addr.col)) == nf
        if left and up:
            out[addr] = CellClass.COPY_BOTH
        elif left:
            out[addr] = CellClass.COPY_RIGHT
        elif up:
            out[addr] = CellClass.COPY_DOWN
        else:
            out[addr] = CellClass.FORMULA
    return out


# ---------------------------------------------------------------------------
# What-if checks


@dataclass(frozen=True)
class ZeroFailure:
    address: CellAddress
    value: Value

    def describe(self) -> str:
        if isinstance(self.value, ErrorValue):
            return f"{self.address.text} evaluates to {self.value.code}"
        return f"{self.address.text} is {format_value(self.value)} instead of 0"


def input_cells(wb: Workbook) -> list[CellAddress]:
    sheet = wb.single_sheet()
    return [a for a in sheet.occupied() if sheet.cells[a].input_flag]


def zero_test(wb: Workbook, outputs: CellRange | Iterable[CellAddress]) -> list[ZeroFailure]:
    """Recalculate with every input-flagged cell zeroed; outputs must be 0.

    Returns the failures (empty list = pass).  Non-numeric output cells are
    ignored; error values are failures.
    """
    targets = list(outputs.cells()) if isinstance(outputs, CellRange) else list(outputs)
    if not targets:
        raise AnalysisError("output range is empty")
    overrides = {a: 0.0 for a in input_cells(wb)}
    values = recalculate(wb, overrides)
    failures: list[ZeroFailure] = []
    for addr in targets:
        v = values.get(addr)
        if isinstance(v, ErrorValue):
            failures.append(ZeroFailure(addr, v))
        elif isinstance(v, float) and not isinstance(v, bool) and v != 0.0:
            failures.append(ZeroFailure(addr, v))
    return failures


def sensitivity(
    wb: Workbook,
    input_addr: CellAddress,
    delta: float,
    watch: Iterable[CellAddress],
) -> dict[CellAddress, float]:
    """Per-watch-cell change when one input moves by delta."""
    sheet = wb.single_sheet()
    cell = sheet.cells.get(input_addr)
    if cell is None or not cell.input_flag:
        raise AnalysisError(f"{input_addr.text} is not an input-flagged cell")
    if not isinstance(cell.content, (int, float)) or isinstance(cell.content, bool):
        raise AnalysisError(f"{input_addr.text} does not hold a numeric value")
    base = recalculate(wb)
    bumped = recalculate(wb, {input_addr: float(cell.content) + delta})
    out: dict[CellAddress, float] = {}
    for addr in watch:
        b = base.get(addr)
        a = bumped.get(addr)
        if not isinstance(b, float) or not isinstance(a, float):
            raise AnalysisError(f"watch cell {addr.text} is not numeric")
        out[addr] = a - b
    return out


# ---------------------------------------------------------------------------
# Cell maps

CLASS_COLORS = {
    CellClass.BLANK: "#ffffff",
    CellClass.LABEL: "#ffffff",
    CellClass.INPUT: "#ffc0cb",
    CellClass.FORMULA: "#e6e6fa",
    CellClass.COPY_RIGHT: "#add8e6",
    CellClass.COPY_DOWN: "#b4e7b4",
    CellClass.COPY_BOTH: "#d3d3d3",
}

_LEGEND_ORDER = (
    CellClass.INPUT,
    CellClass.FORMULA,
    CellClass.COPY_RIGHT,
    CellClass.COPY_DOWN,
    CellClass.COPY_BOTH,
)


def cellmap_html(wb: Workbook) -> str:
    """Self-contained HTML table of the sheet colored by cell class."""
    sheet = wb.single_sheet()
    classes = classify_cells(wb)
    values = recalculate(wb)
    lines = [
        "<!DOCTYPE html>",
        "<html><head><meta charset=\"utf-8\"><title>cell map</title>",
        "<style>table{border-collapse:collapse}td{border:1px solid #999;"
        "padding:2px 6px;font:12px monospace;min-width:3em;text-align:right}</style>",
        "</head><body>",
        f"<h1>{html.escape(sheet.name)}</h1>",
        "<table>",
    ]
    for r in range(1, sheet.max_row + 1):
        cells = []
        for c in range(1, sheet.max_col + 1):
            addr = CellAddress(r, c)
            cls = classes.get(addr, CellClass.BLANK)
            cell = sheet.cells.get(addr)
            text = format_value(values.get(addr), cell.format_code) if cell else ""
            cells.append(
                f'<td style="background:{CLASS_COLORS[cls]}" title="{addr.text}">'
                f"{html.escape(text)}</td>"
            )
        lines.append("<tr>" + "".join(cells) + "</tr>")
    lines.append("</table>")
    legend = " ".join(
        f'<span style="background:{CLASS_COLORS[c]};padding:1px 6px">{c.value}</span>'
        for c in _LEGEND_ORDER
    )
    lines.append(f"<p>{legend}</p>")
    lines.append("</body></html>")
    return "\n".join(lines) + "\n"


def cellmap_svg(wb: Workbook, *, cell_w: int = 70, cell_h: int = 20) -> str:
    """SVG rendering of the class map, one rectangle per grid position."""
    sheet = wb.single_sheet()
    classes = classify_cells(wb)
    width = sheet.max_col * cell_w
    height = sheet.max_row * cell_h + 24
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
    ]
    for r in range(1, sheet.max_row + 1):
        for c in range(1, sheet.max_col + 1):
            addr = CellAddress(r, c)
            cls = classes.get(addr, CellClass.BLANK)
            x, y = (c - 1) * cell_w, (r - 1) * cell_h
            lines.append(
                f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                f'fill="{CLASS_COLORS[cls]}" stroke="#999"><title>{addr.text}'
                f"</title></rect>"
            )
    legend_y = sheet.max_row * cell_h + 16
    x = 0
    for c in _LEGEND_ORDER:
        lines.append(
            f'<rect x="{x}" y="{legend_y - 10}" width="12" height="12" '
            f'fill="{CLASS_COLORS[c]}" stroke="#999"/>'
        )
        lines.append(
            f'<text x="{x + 16}" y="{legend_y}" font-size="11" '
            f'font-family="monospace">{c.value}</text>'
        )
        x += 16 + 8 * len(c.value) + 16
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
