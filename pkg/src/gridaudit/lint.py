"""Static checks against the common-error catalog.

Each detector owns one stable code.  Findings sort by code then grid
position, and serialize one per line as CODE<TAB>address<TAB>severity<TAB>
message, which is what both the CLI and the service emit.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from . import formula as fm
from .engine import ErrorValue, recalculate
from .graph import (
    DepGraph,
    Resolution,
    ResolutionKind,
    UnknownNameError,
    build_graph,
    find_cycles,
    resolve_name,
    resolve_rangeref,
)
from .model import CellAddress, CellRange, Sheet, Workbook

SEVERITIES = {
    "L001": "warning",
    "L002": "warning",
    "L003": "info",
    "L004": "warning",
    "L005": "error",
    "L006": "error",
    "L007": "warning",
    "L008": "warning",
    "L009": "warning",
}


@dataclass(frozen=True)
class Finding:
    code: str
    address: CellAddress | CellRange
    message: str

    @property
    def severity(self) -> str:
        return SEVERITIES[self.code]

    @property
    def anchor(self) -> CellAddress:
        if isinstance(self.address, CellRange):
            return self.address.start
        return self.address

    def line(self) -> str:
        return f"{self.code}\t{self.address.text}\t{self.severity}\t{self.message}"

    def sort_key(self) -> tuple:
        return (self.code, self.anchor, self.message)


@dataclass(frozen=True)
class LintConfig:
    magic_allowlist: frozenset[float] = frozenset({0.0, 1.0})
    column_carry_exception: bool = False
    disabled: frozenset[str] = frozenset()


def serialize_findings(findings: list[Finding]) -> str:
    return "".join(f.line() + "\n" for f in findings)


# ---------------------------------------------------------------------------
# Structure helpers


def _normal_forms(sheet: Sheet) -> dict[CellAddress, str]:
    out: dict[CellAddress, str] = {}
    for addr, cell in sheet.cells.items():
        if isinstance(cell.content, fm.Formula):
            out[addr] = fm.normal_form(cell.content.ast)
    return out


def _runs(sheet: Sheet, member: set[CellAddress]) -> list[list[CellAddress]]:
    """Maximal contiguous horizontal and vertical runs within `member`."""
    runs: list[list[CellAddress]] = []
    rows: dict[int, list[CellAddress]] = {}
    cols: dict[int, list[CellAddress]] = {}
    for addr in sorted(member):
        rows.setdefault(addr.row, []).append(addr)
        cols.setdefault(addr.col, []).append(addr)
    for cells in rows.values():
        run: list[CellAddress] = []
        for addr in cells:
            if run and addr.col == run[-1].col + 1:
                run.append(addr)
            else:
                if run:
                    runs.append(run)
                run = [addr]
        runs.append(run)
    for cells in cols.values():
        run = []
        for addr in cells:
            if run and addr.row == run[-1].row + 1:
                run.append(addr)
            else:
                if run:
                    runs.append(run)
                run = [addr]
        runs.append(run)
    return runs


# ---------------------------------------------------------------------------
# Detectors


def _l001_inconsistent_copy(sheet: Sheet, forms: dict[CellAddress, str]) -> list[Finding]:
    """One cell breaking an otherwise uniform formula run.

    Only runs where a single normal form covers all cells but one are
    flagged; mixed-recipe rows and columns are legitimate layouts, not
    botched copies.
    """
    findings: dict[CellAddress, Finding] = {}
    for run in _runs(sheet, set(forms)):
        if len(run) < 3:
            continue
        counts = Counter(forms[a] for a in run)
        if len(counts) != 2:
            continue
        (top_nf, top_n), (_, rare_n) = counts.most_common(2)
        if top_n != len(run) - 1 or rare_n != 1:
            continue
        deviant = next(a for a in run if forms[a] != top_nf)
        if deviant not in findings:
            findings[deviant] = Finding(
                "L001",
                deviant,
                f"formula differs from the {top_n} matching cells around it",
            )
    return list(findings.values())


def _l002_temporary_fix(sheet: Sheet, forms: dict[CellAddress, str]) -> list[Finding]:
    """A numeric constant wedged between formulas that agree with each other."""
    findings: list[Finding] = []
    for addr, cell in sheet.cells.items():
        content = cell.content
        if isinstance(content, (fm.Formula, str, bool)):
            continue
        neighbor_pairs = []
        if addr.col > 1:
            neighbor_pairs.append(
                (CellAddress(addr.row, addr.col - 1), CellAddress(addr.row, addr.col + 1))
            )
        if addr.row > 1:
            neighbor_pairs.append(
                (CellAddress(addr.row - 1, addr.col), CellAddress(addr.row + 1, addr.col))
            )
        for before, after in neighbor_pairs:
            nf = forms.get(before)
            if nf is not None and forms.get(after) == nf:
                findings.append(
                    Finding(
                        "L002",
                        addr,
                        "constant interrupts a run of identical formulas",
                    )
                )
                break
    return findings


def _literals(node: fm.Expr) -> list[fm.NumberLit]:
    if isinstance(node, fm.NumberLit):
        return [node]
    if isinstance(node, fm.Unary):
        return _literals(node.operand)
    if isinstance(node, fm.Binary):
        return _literals(node.left) + _literals(node.right)
    if isinstance(node, fm.Call):
        out: list[fm.NumberLit] = []
        for arg in node.args:
            out.extend(_literals(arg))
        return out
    return []


def _l003_magic_number(sheet: Sheet, config: LintConfig) -> list[Finding]:
    findings: list[Finding] = []
    for addr, cell in sheet.cells.items():
        if not isinstance(cell.content, fm.Formula):
            continue
        seen: set[float] = set()
        for lit in _literals(cell.content.ast):
            if lit.value in config.magic_allowlist or lit.value in seen:
                continue
            seen.add(lit.value)
            shown = fm.render_expression(lit)
            findings.append(
                Finding("L003", addr, f"magic number {shown} embedded in formula")
            )
    return findings


def _is_numeric_cell(sheet: Sheet, addr: CellAddress) -> bool:
    cell = sheet.cells.get(addr)
    if cell is None:
        return False
    content = cell.content
    if isinstance(content, fm.Formula):
        return True
    return isinstance(content, float) and not isinstance(content, bool)


def _aggregate_ranges(
    wb: Workbook, sheet: Sheet, addr: CellAddress, node: fm.Expr
) -> list[CellRange]:
    """Ranges consumed whole by aggregate calls in this formula."""
    out: list[CellRange] = []
    if isinstance(node, fm.Call):
        if node.name in ("SUM", "MIN", "MAX", "COUNTA"):
            for arg in node.args:
                res: Resolution | None = None
                if isinstance(arg, fm.RangeRef):
                    res = resolve_rangeref(arg, addr, sheet.name, scalar=False)
                elif isinstance(arg, fm.NameRef):
                    try:
                        res = resolve_name(arg.name, addr, wb, scalar=False)
                    except UnknownNameError:
                        res = None
                if res is not None and res.kind is ResolutionKind.RANGE:
                    out.append(res.range)
        for arg in node.args:
            out.extend(_aggregate_ranges(wb, sheet, addr, arg))
    elif isinstance(node, fm.Unary):
        out.extend(_aggregate_ranges(wb, sheet, addr, node.operand))
    elif isinstance(node, fm.Binary):
        out.extend(_aggregate_ranges(wb, sheet, addr, node.left))
        out.extend(_aggregate_ranges(wb, sheet, addr, node.right))
    return out


def _l004_incomplete_range(wb: Workbook, sheet: Sheet) -> list[Finding]:
    """A 1D aggregate range with compatible data continuing past an end."""
    findings: list[Finding] = []
    for addr, cell in sheet.cells.items():
        if not isinstance(cell.content, fm.Formula):
            continue
        for rng in _aggregate_ranges(wb, sheet, addr, cell.content.ast):
            if rng.height > 1 and rng.width > 1:
                continue
            if rng.height == 1 and rng.width == 1:
                continue
            if rng.width == 1:
                beyond = [
                    CellAddress(rng.start.row - 1, rng.start.col)
                    if rng.start.row > 1
                    else None,
                    CellAddress(rng.end.row + 1, rng.end.col),
                ]
            else:
                beyond = [
                    CellAddress(rng.start.row, rng.start.col - 1)
                    if rng.start.col > 1
                    else None,
                    CellAddress(rng.end.row, rng.end.col + 1),
                ]
            for extra in beyond:
                if extra is None or extra == addr:
                    continue
                if _is_numeric_cell(sheet, extra):
                    findings.append(
                        Finding(
                            "L004",
                            addr,
                            f"range {rng.text} excludes adjacent numeric cell {extra.text}",
                        )
                    )
    return findings


def _l005_circular(graph: DepGraph) -> list[Finding]:
    findings: list[Finding] = []
    for cycle in find_cycles(graph):
        members = ", ".join(a.text for a in cycle.members)
        findings.append(
            Finding(
                "L005",
                cycle.members[0],
                f"circular reference through {members}",
            )
        )
    return findings


def _l006_error_value(wb: Workbook) -> list[Finding]:
    findings: list[Finding] = []
    for addr, value in recalculate(wb).items():
        if isinstance(value, ErrorValue) and value.code != "#CIRC!":
            findings.append(Finding("L006", addr, f"evaluates to {value.code}"))
    return findings


def _l007_unvalidated_input(wb: Workbook, sheet: Sheet, graph: DepGraph) -> list[Finding]:
    findings: list[Finding] = []
    referenced = {e.precedent for e in graph.edges}
    for addr in sheet.occupied():
        cell = sheet.cells[addr]
        if not cell.input_flag or addr not in referenced:
            continue
        if not any(rule.covers(addr) for rule in wb.validations):
            findings.append(
                Finding(
                    "L007",
                    addr,
                    "input cell feeds formulas but has no validation rule",
                )
            )
    for rule in wb.validations:
        if rule.operator.is_unbounded:
            findings.append(
                Finding(
                    "L007",
                    rule.target,
                    f"validation uses open-ended operator {rule.operator.display}",
                )
            )
    return findings


def _sheet_refs(node: fm.Expr) -> list[str]:
    if isinstance(node, fm.CellRef):
        return [node.sheet] if node.sheet else []
    if isinstance(node, fm.RangeRef):
        return [s for s in (node.start.sheet, node.end.sheet) if s]
    if isinstance(node, fm.Unary):
        return _sheet_refs(node.operand)
    if isinstance(node, fm.Binary):
        return _sheet_refs(node.left) + _sheet_refs(node.right)
    if isinstance(node, fm.Call):
        out: list[str] = []
        for arg in node.args:
            out.extend(_sheet_refs(arg))
        return out
    return []


def _l008_cross_sheet(sheet: Sheet) -> list[Finding]:
    findings: list[Finding] = []
    for addr, cell in sheet.cells.items():
        if not isinstance(cell.content, fm.Formula):
            continue
        foreign = sorted({s for s in _sheet_refs(cell.content.ast) if s != sheet.name})
        for name in foreign:
            findings.append(
                Finding("L008", addr, f"references sheet {name} outside this workbook's grid")
            )
    return findings


def _l009_upstream_position(graph: DepGraph, config: LintConfig) -> list[Finding]:
    """Data flowing up or leftward reads against the layout direction."""
    findings: list[Finding] = []
    seen: set[tuple[CellAddress, CellAddress]] = set()
    for edge in sorted(graph.edges):
        prec, dep = edge.precedent, edge.dependent
        below = prec.row > dep.row
        right = prec.col > dep.col
        if not (below or right):
            continue
        if (
            config.column_carry_exception
            and below
            and prec.col == dep.col - 1
        ):
            continue
        if (dep, prec) in seen:
            continue
        seen.add((dep, prec))
        direction = "below" if below else "to the right of"
        findings.append(
            Finding("L009", dep, f"depends on {prec.text}, {direction} it")
        )
    return findings


# ---------------------------------------------------------------------------
# Entry point


def lint(wb: Workbook, config: LintConfig | None = None) -> list[Finding]:
    """Run every enabled detector and return findings in stable order."""
    config = config or LintConfig()
    sheet = wb.single_sheet()
    forms = _normal_forms(sheet)
    graph = build_graph(wb)
    findings: list[Finding] = []
    detectors = {
        "L001": lambda: _l001_inconsistent_copy(sheet, forms),
        "L002": lambda: _l002_temporary_fix(sheet, forms),
        "L003": lambda: _l003_magic_number(sheet, config),
        "L004": lambda: _l004_incomplete_range(wb, sheet),
        "L005": lambda: _l005_circular(graph),
        "L006": lambda: _l006_error_value(wb),
        "L007": lambda: _l007_unvalidated_input(wb, sheet, graph),
        "L008": lambda: _l008_cross_sheet(sheet),
        "L009": lambda: _l009_upstream_position(graph, config),
    }
    for code, run in detectors.items():
        if code in config.disabled:
            continue
        findings.extend(run())
    findings.sort(key=Finding.sort_key)
    return findings
