"""Reference resolution and the cell dependency graph.

Names resolve with spreadsheet-style implicit intersection: in a scalar
context a row-shaped range contributes the cell in the consumer's column and
a column-shaped range the cell in the consumer's row.  Aggregate arguments
(SUM and friends) receive whole ranges instead.  The dependency graph labels
each edge precise, range-member, or approximate so downstream passes can
distinguish hard dependencies from coarse ones.
"""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass, field

from . import formula as fm
from .model import AddressError, CellAddress, CellRange, Sheet, Workbook

AGGREGATE_FUNCTIONS = frozenset({"SUM", "MIN", "MAX", "COUNTA"})
DYNAMIC_REF_FUNCTIONS = frozenset({"OFFSET", "INDIRECT"})


class ResolutionKind(enum.Enum):
    CELL = "cell"
    RANGE = "range"  # 2D target in scalar context: full range, marker set
    EMPTY = "empty"  # implicit intersection misses the target span
    OFF_GRID = "off-grid"  # relative component lands before row/column 1
    CROSS_SHEET = "cross-sheet"


@dataclass(frozen=True)
class Resolution:
    """Outcome of resolving a name or reference at an origin."""

    kind: ResolutionKind
    cell: CellAddress | None = None
    range: CellRange | None = None
    intersected: bool = False

    def cells(self) -> list[CellAddress]:
        if self.kind is ResolutionKind.CELL and self.cell is not None:
            return [self.cell]
        if self.kind is ResolutionKind.RANGE and self.range is not None:
            return list(self.range.cells())
        return []


class UnknownNameError(KeyError):
    pass


def _component_cell(ref: fm.CellRef, origin: CellAddress) -> CellAddress | None:
    row = ref.row.at(origin.row)
    col = ref.col.at(origin.col)
    if row < 1 or col < 1:
        return None
    return CellAddress(row, col)


def resolve_cellref(
    ref: fm.CellRef, origin: CellAddress, home_sheet: str | None = None
) -> Resolution:
    if ref.sheet is not None and home_sheet is not None and ref.sheet != home_sheet:
        return Resolution(ResolutionKind.CROSS_SHEET)
    cell = _component_cell(ref, origin)
    if cell is None:
        return Resolution(ResolutionKind.OFF_GRID)
    return Resolution(ResolutionKind.CELL, cell=cell)


def resolve_rangeref(
    rng: fm.RangeRef,
    origin: CellAddress,
    home_sheet: str | None = None,
    *,
    scalar: bool = True,
) -> Resolution:
    if rng.start.sheet is not None and home_sheet is not None and rng.start.sheet != home_sheet:
        return Resolution(ResolutionKind.CROSS_SHEET)
    start = _component_cell(rng.start, origin)
    end = _component_cell(rng.end, origin)
    if start is None or end is None:
        return Resolution(ResolutionKind.OFF_GRID)
    area = CellRange.from_corners(start, end)
    if area.height == 1 and area.width == 1:
        return Resolution(ResolutionKind.CELL, cell=area.start)
    if not scalar:
        return Resolution(ResolutionKind.RANGE, range=area)
    if area.height == 1:
        # row-shaped: intersect at the origin's column
        if area.start.col <= origin.col <= area.end.col:
            return Resolution(
                ResolutionKind.CELL,
                cell=CellAddress(area.start.row, origin.col),
                intersected=True,
            )
        return Resolution(ResolutionKind.EMPTY, intersected=True)
    if area.width == 1:
        if area.start.row <= origin.row <= area.end.row:
            return Resolution(
                ResolutionKind.CELL,
                cell=CellAddress(origin.row, area.start.col),
                intersected=True,
            )
        return Resolution(ResolutionKind.EMPTY, intersected=True)
    return Resolution(ResolutionKind.RANGE, range=area)


def resolve_name(
    name: str, origin: CellAddress, wb: Workbook, *, scalar: bool = True
) -> Resolution:
    """Resolve a declared name at an origin cell.

    Raises UnknownNameError for undeclared names (callers map that to #NAME?
    or a dangling-name diagnostic as appropriate).
    """
    nr = wb.lookup_name(name)
    if nr is None:
        raise UnknownNameError(name)
    home = wb.sheets[0].name if wb.sheets else None
    target = nr.target
    if isinstance(target, fm.CellRef):
        return resolve_cellref(target, origin, home)
    return resolve_rangeref(target, origin, home, scalar=scalar)


# ---------------------------------------------------------------------------
# Dependency graph


class EdgeKind(enum.Enum):
    PRECISE = "precise"
    RANGE_MEMBER = "range-member"
    APPROXIMATE = "approximate"


@dataclass(frozen=True, order=True)
class Edge:
    """Directed dependency: precedent -> dependent."""

    precedent: CellAddress
    dependent: CellAddress
    kind: EdgeKind = field(compare=False, default=EdgeKind.PRECISE)


@dataclass
class DepGraph:
    nodes: set[CellAddress] = field(default_factory=set)
    edges: set[Edge] = field(default_factory=set)
    dangling_names: list[tuple[CellAddress, str]] = field(default_factory=list)
    cross_sheet_refs: list[CellAddress] = field(default_factory=list)

    def precedents(self, addr: CellAddress) -> set[CellAddress]:
        return {e.precedent for e in self.edges if e.dependent == addr}

    def dependents(self, addr: CellAddress) -> set[CellAddress]:
        return {e.dependent for e in self.edges if e.precedent == addr}

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)


def _literal_int(node: fm.Expr) -> int | None:
    """Integer value of a numeric literal, allowing a sign prefix."""
    if isinstance(node, fm.Unary) and node.op in ("negate", "plus"):
        inner = _literal_int(node.operand)
        if inner is None:
            return None
        return -inner if node.op == "negate" else inner
    if isinstance(node, fm.NumberLit):
        return int(node.value)
    return None


class _EdgeCollector:
    def __init__(self, wb: Workbook, sheet: Sheet, graph: DepGraph) -> None:
        self.wb = wb
        self.sheet = sheet
        self.graph = graph

    def add(self, precedent: CellAddress, dependent: CellAddress, kind: EdgeKind) -> None:
        if precedent in self.sheet.cells:
            self.graph.edges.add(Edge(precedent, dependent, kind))

    def walk(self, node: fm.Expr, origin: CellAddress, *, kind: EdgeKind = EdgeKind.PRECISE) -> None:
        if isinstance(node, fm.CellRef):
            res = resolve_cellref(node, origin, self.sheet.name)
            if res.kind is ResolutionKind.CROSS_SHEET:
                self.graph.cross_sheet_refs.append(origin)
            elif res.cell is not None:
                self.add(res.cell, origin, kind)
        elif isinstance(node, fm.RangeRef):
            res = resolve_rangeref(node, origin, self.sheet.name, scalar=True)
            if res.kind is ResolutionKind.CROSS_SHEET:
                self.graph.cross_sheet_refs.append(origin)
            elif res.kind is ResolutionKind.CELL:
                self.add(res.cell, origin, kind)
            elif res.kind is ResolutionKind.RANGE:
                for cell in res.range.cells():
                    self.add(cell, origin, EdgeKind.RANGE_MEMBER)
        elif isinstance(node, fm.NameRef):
            try:
                res = resolve_name(node.name, origin, self.wb, scalar=True)
            except UnknownNameError:
                self.graph.dangling_names.append((origin, node.name))
                return
            if res.kind is ResolutionKind.CROSS_SHEET:
                self.graph.cross_sheet_refs.append(origin)
            elif res.kind is ResolutionKind.CELL:
                self.add(res.cell, origin, kind)
            elif res.kind is ResolutionKind.RANGE:
                for cell in res.range.cells():
                    self.add(cell, origin, EdgeKind.RANGE_MEMBER)
        elif isinstance(node, fm.Unary):
            self.walk(node.operand, origin, kind=kind)
        elif isinstance(node, fm.Binary):
            self.walk(node.left, origin, kind=kind)
            self.walk(node.right, origin, kind=kind)
        elif isinstance(node, fm.Call):
            self.walk_call(node, origin)

    def walk_aggregate_arg(self, node: fm.Expr, origin: CellAddress) -> None:
        """Range-shaped aggregate args contribute range-member edges."""
        if isinstance(node, fm.RangeRef):
            res = resolve_rangeref(node, origin, self.sheet.name, scalar=False)
            if res.kind is ResolutionKind.CROSS_SHEET:
                self.graph.cross_sheet_refs.append(origin)
                return
            for cell in res.cells():
                self.add(cell, origin, EdgeKind.RANGE_MEMBER)
            return
        if isinstance(node, fm.NameRef):
            try:
                res = resolve_name(node.name, origin, self.wb, scalar=False)
            except UnknownNameError:
                self.graph.dangling_names.append((origin, node.name))
                return
            if res.kind is ResolutionKind.CROSS_SHEET:
                self.graph.cross_sheet_refs.append(origin)
                return
            cells = res.cells()
            edge_kind = EdgeKind.PRECISE if len(cells) == 1 else EdgeKind.RANGE_MEMBER
            for cell in cells:
                self.add(cell, origin, edge_kind)
            return
        self.walk(node, origin)

    def walk_call(self, node: fm.Call, origin: CellAddress) -> None:
        if node.name in AGGREGATE_FUNCTIONS:
            for arg in node.args:
                self.walk_aggregate_arg(arg, origin)
            return
        if node.name == "OFFSET" and node.args:
            base = node.args[0]
            offset_args = node.args[1:]
            literals = [_literal_int(a) for a in offset_args]
            constant = all(v is not None for v in literals)
            if constant and isinstance(base, fm.CellRef) and len(offset_args) >= 2:
                rows, cols = literals[0], literals[1]
                res = resolve_cellref(base, origin, self.sheet.name)
                if res.kind is ResolutionKind.CROSS_SHEET:
                    self.graph.cross_sheet_refs.append(origin)
                elif res.cell is not None:
                    try:
                        shifted = res.cell.shifted(rows, cols)
                    except AddressError:
                        return
                    self.add(shifted, origin, EdgeKind.PRECISE)
                return
            if isinstance(base, (fm.CellRef, fm.RangeRef)):
                self.walk(base, origin, kind=EdgeKind.APPROXIMATE)
            else:
                self.walk(base, origin)
            for arg in offset_args:
                self.walk(arg, origin)
            return
        if node.name == "INDIRECT":
            for arg in node.args:
                self.walk(arg, origin, kind=EdgeKind.APPROXIMATE)
            return
        for arg in node.args:
            self.walk(arg, origin)


def build_graph(wb: Workbook) -> DepGraph:
    """Cell-level dependency graph for a single-sheet workbook.

    Nodes are all occupied cells; edges run precedent -> dependent.  Edges to
    unoccupied cells are dropped (blank precedents carry no information), and
    references to other sheets are diagnostics, not edges.
    """
    sheet = wb.single_sheet()
    graph = DepGraph(nodes=set(sheet.cells))
    collector = _EdgeCollector(wb, sheet, graph)
    for addr in sheet.occupied():
        cell = sheet.cells[addr]
        if isinstance(cell.content, fm.Formula):
            collector.walk(cell.content.ast, addr)
    return graph


# ---------------------------------------------------------------------------
# Ordering and cycles


@dataclass(frozen=True)
class Cycle:
    """One strongly connected component with at least one internal edge."""

    members: tuple[CellAddress, ...]  # row-major order


def _adjacency(graph: DepGraph) -> dict[CellAddress, set[CellAddress]]:
    adj: dict[CellAddress, set[CellAddress]] = {n: set() for n in graph.nodes}
    for e in graph.edges:
        if e.precedent in adj and e.dependent in adj:
            adj[e.precedent].add(e.dependent)
    return adj


def topological_order(graph: DepGraph) -> list[CellAddress]:
    """Kahn's algorithm with a row-major heap tie-break.

    Cells on cycles are omitted; the caller decides what to do with them.
    """
    adj = _adjacency(graph)
    indegree: dict[CellAddress, int] = {n: 0 for n in graph.nodes}
    for src, dsts in adj.items():
        for dst in dsts:
            indegree[dst] += 1
    ready = [n for n, d in indegree.items() if d == 0]
    heapq.heapify(ready)
    order: list[CellAddress] = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for dst in adj[node]:
            indegree[dst] -= 1
            if indegree[dst] == 0:
                heapq.heappush(ready, dst)
    return order


def find_cycles(graph: DepGraph) -> list[Cycle]:
    """Strongly connected components of size > 1, plus self-referential cells."""
    adj = _adjacency(graph)
    index: dict[CellAddress, int] = {}
    low: dict[CellAddress, int] = {}
    on_stack: set[CellAddress] = set()
    stack: list[CellAddress] = []
    counter = 0
    sccs: list[list[CellAddress]] = []

    # iterative Tarjan: recursion depth would track the longest dependency chain
    for root in sorted(graph.nodes):
        if root in index:
            continue
        work: list[tuple[CellAddress, list[CellAddress], int]] = [
            (root, sorted(adj[root]), 0)
        ]
        while work:
            node, children, child_i = work.pop()
            if child_i == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            for i in range(child_i, len(children)):
                child = children[i]
                if child not in index:
                    work.append((node, children, i + 1))
                    work.append((child, sorted(adj[child]), 0))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            if low[node] == index[node]:
                component: list[CellAddress] = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                sccs.append(component)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])

    cycles: list[Cycle] = []
    for comp in sccs:
        if len(comp) > 1 or comp[0] in adj[comp[0]]:
            cycles.append(Cycle(tuple(sorted(comp))))
    cycles.sort(key=lambda c: c.members[0])
    return cycles


def cycle_members(graph: DepGraph) -> set[CellAddress]:
    out: set[CellAddress] = set()
    for cycle in find_cycles(graph):
        out.update(cycle.members)
    return out


# ---------------------------------------------------------------------------
# Areas


def areas(sheet: Sheet) -> list[CellRange]:
    """Bounding rectangles of the 8-connected components of occupied cells."""
    occupied = set(sheet.cells)
    seen: set[CellAddress] = set()
    out: list[CellRange] = []
    for start in sorted(occupied):
        if start in seen:
            continue
        frontier = [start]
        seen.add(start)
        r1 = r2 = start.row
        c1 = c2 = start.col
        while frontier:
            cell = frontier.pop()
            r1, r2 = min(r1, cell.row), max(r2, cell.row)
            c1, c2 = min(c1, cell.col), max(c2, cell.col)
            for nb in cell.neighbors8():
                if nb in occupied and nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
        out.append(CellRange(CellAddress(r1, c1), CellAddress(r2, c2)))
    out.sort(key=lambda a: a.start)
    return out


# ---------------------------------------------------------------------------
# DOT export


def caption_for_row(sheet: Sheet, row: int) -> str | None:
    """Leftmost text constant in the row, if any."""
    for addr in sorted(a for a in sheet.cells if a.row == row):
        cell = sheet.cells[addr]
        if isinstance(cell.content, str):
            return cell.content
    return None


def export_dot(graph: DepGraph, sheet: Sheet, *, rows: bool = False) -> str:
    """Graphviz text; cell level by default, caption-labelled rows with rows=True."""
    lines = ["digraph dependencies {"]
    if not rows:
        for node in sorted(graph.nodes):
            lines.append(f'  "{sheet.name}.{node.text}";')
        for e in graph.sorted_edges():
            attr = ' [style=dashed]' if e.kind is EdgeKind.APPROXIMATE else ""
            lines.append(
                f'  "{sheet.name}.{e.precedent.text}" -> "{sheet.name}.{e.dependent.text}"{attr};'
            )
    else:
        row_ids = sorted({a.row for a in graph.nodes})
        for row in row_ids:
            label = caption_for_row(sheet, row) or f"Row {row}"
            lines.append(f'  "{sheet.name}.R{row}" [label="{label}"];')
        seen: set[tuple[int, int]] = set()
        for e in graph.sorted_edges():
            pair = (e.precedent.row, e.dependent.row)
            if pair[0] == pair[1] or pair in seen:
                continue
            seen.add(pair)
            lines.append(f'  "{sheet.name}.R{pair[0]}" -> "{sheet.name}.R{pair[1]}";')
    lines.append("}")
    return "\n".join(lines) + "\n"
