"""Command-line surface.

Every report ends with a provenance stamp line; `--no-stamp` swaps in a
fixed placeholder so outputs can be compared byte-for-byte.  Exit codes:
0 clean, 1 findings or failed checks, 2 usage, IO, or parse errors.
"""

from __future__ import annotations

import getpass
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from . import formula as fm
from .analyze import (
    AnalysisError,
    cascade_risk,
    cellmap_html,
    cellmap_svg,
    enumerate_cascades,
    sensitivity,
    zero_test,
)
from .audit import AuditError, AuditSession, StaleSessionError, new_session
from .engine import ErrorValue, display_grid, recalculate
from .graph import build_graph, export_dot
from .inventory import InventoryError, crawl as crawl_tree, render_log
from .lint import lint as run_lint, serialize_findings
from .model import AddressError, CellAddress, CellRange, ModelError, Workbook
from .wbt import WbtError, load_workbook


def auditor_name() -> str:
    name = os.environ.get("GRIDAUDIT_AUDITOR")
    if name:
        return name
    try:
        return getpass.getuser()
    except OSError:
        return "-"


def stamp_line(source: str, no_stamp: bool) -> str:
    if no_stamp:
        return "# generated by - from - at -"
    ts = datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")
    return f"# generated by {auditor_name()} from {source} at {ts}"


def emit(body: str, source: str, no_stamp: bool) -> None:
    if body and not body.endswith("\n"):
        body += "\n"
    click.echo(body + stamp_line(source, no_stamp))


def load_or_die(path: str) -> Workbook:
    try:
        return load_workbook(path)
    except (WbtError, ModelError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


def parse_addr_or_die(text: str) -> CellAddress:
    try:
        return CellAddress.parse(text)
    except AddressError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


workbook_argument = click.argument("workbook", type=click.Path(exists=True, dir_okay=False))
no_stamp_option = click.option("--no-stamp", is_flag=True, help="Use a fixed placeholder stamp.")


@click.group()
@click.version_option(package_name="gridaudit")
def main() -> None:
    """Audit toolkit for plain-text workbooks."""


@main.command("eval")
@workbook_argument
@no_stamp_option
def eval_cmd(workbook: str, no_stamp: bool) -> None:
    """Print the displayed grid as tab-separated rows."""
    wb = load_or_die(workbook)
    rows = display_grid(wb)
    body = "\n".join("\t".join(row) for row in rows)
    emit(body, workbook, no_stamp)


@main.command()
@workbook_argument
@no_stamp_option
def names(workbook: str, no_stamp: bool) -> None:
    """Print the declared names alphabetically, with their targets."""
    wb = load_or_die(workbook)
    lines = [
        f"{nr.name}\t={fm.render_reference(nr.target)}" for nr in wb.sorted_names()
    ]
    emit("\n".join(lines), workbook, no_stamp)


@main.command()
@workbook_argument
@no_stamp_option
def validations(workbook: str, no_stamp: bool) -> None:
    """Print validation rules in declared order."""
    wb = load_or_die(workbook)
    lines = []
    for rule in wb.validations:
        fields = [
            rule.target.text,
            rule.value_type.display,
            rule.operator.display,
            rule.formula1,
        ]
        if rule.formula2 is not None:
            fields.append(rule.formula2)
        lines.append("\t".join(fields))
    emit("\n".join(lines), workbook, no_stamp)


def _listing_rows(wb: Workbook) -> list[tuple[str, str]]:
    """One (label, formula) pair per row that holds formulas.

    The label is a declared name whose row-shaped target covers the row's
    formula cells; failing that, the row's leftmost text caption with
    spaces turned to underscores.
    """
    sheet = wb.single_sheet()
    rows: list[tuple[str, str]] = []
    for r in range(1, sheet.max_row + 1):
        formula_cells = [
            a
            for a in sheet.occupied()
            if a.row == r and isinstance(sheet.cells[a].content, fm.Formula)
        ]
        if not formula_cells:
            continue
        nf = fm.normal_form(sheet.cells[formula_cells[0]].content.ast)
        label = None
        for nr in wb.sorted_names():
            target = nr.target
            if not isinstance(target, fm.RangeRef):
                continue
            start_row = target.start.row
            end_row = target.end.row
            if not (start_row.absolute and end_row.absolute):
                continue
            if start_row.value != r or end_row.value != r:
                continue
            if not (target.start.col.absolute and target.end.col.absolute):
                continue
            lo, hi = target.start.col.value, target.end.col.value
            if all(lo <= a.col <= hi for a in formula_cells):
                label = nr.name
                break
        if label is None:
            caption = next(
                (
                    sheet.cells[a].content
                    for a in sheet.occupied()
                    if a.row == r and isinstance(sheet.cells[a].content, str)
                ),
                f"Row{r}",
            )
            label = caption.replace(" ", "_")
        rows.append((label, nf))
    return rows


@main.command()
@workbook_argument
@no_stamp_option
def listing(workbook: str, no_stamp: bool) -> None:
    """Print one normal-form formula per row, labelled by name or caption."""
    wb = load_or_die(workbook)
    lines = [f"{label}\t{nf}" for label, nf in _listing_rows(wb)]
    emit("\n".join(lines), workbook, no_stamp)


@main.command()
@workbook_argument
@click.option("--dot", is_flag=True, default=True, help="Emit Graphviz text (the default).")
@click.option("--rows", is_flag=True, help="Collapse cells to caption-labelled rows.")
@no_stamp_option
def graph(workbook: str, dot: bool, rows: bool, no_stamp: bool) -> None:
    """Print the dependency graph as Graphviz text."""
    wb = load_or_die(workbook)
    g = build_graph(wb)
    body = export_dot(g, wb.single_sheet(), rows=rows)
    emit(body, workbook, no_stamp)


@main.command()
@workbook_argument
@click.option("--error-rate", type=float, default=0.05, show_default=True)
@click.option(
    "--level",
    type=click.Choice(["cell", "row"]),
    default="cell",
    show_default=True,
)
@no_stamp_option
def cascades(workbook: str, error_rate: float, level: str, no_stamp: bool) -> None:
    """Histogram of source-to-sink path lengths with compound risk."""
    wb = load_or_die(workbook)
    g = build_graph(wb)
    try:
        census = enumerate_cascades(g, level)
        lines = ["Cells\tCascades\tRisk"]
        for length in sorted(census.histogram):
            risk = cascade_risk(error_rate, length)
            lines.append(f"{length}\t{census.histogram[length]}\t{risk:.4f}")
        if census.truncated:
            lines.append("# enumeration truncated at the path cap")
    except AnalysisError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    emit("\n".join(lines), workbook, no_stamp)


@main.command("map")
@workbook_argument
@click.option("--html", "fmt", flag_value="html", default=True)
@click.option("--svg", "fmt", flag_value="svg")
@no_stamp_option
def map_cmd(workbook: str, fmt: str, no_stamp: bool) -> None:
    """Render the cell-class map."""
    wb = load_or_die(workbook)
    body = cellmap_html(wb) if fmt == "html" else cellmap_svg(wb)
    emit(body, workbook, no_stamp)


@main.command("lint")
@workbook_argument
@no_stamp_option
@click.pass_context
def lint_cmd(ctx: click.Context, workbook: str, no_stamp: bool) -> None:
    """Run all detectors; exit 1 when anything is found."""
    wb = load_or_die(workbook)
    findings = run_lint(wb)
    emit(serialize_findings(findings), workbook, no_stamp)
    if findings:
        ctx.exit(1)


def _run_checks(wb: Workbook, config: dict) -> tuple[list[str], bool]:
    lines: list[str] = []
    ok = True

    zero_spec = config.get("zero")
    if zero_spec:
        outputs = CellRange.parse(zero_spec["outputs"])
        failures = zero_test(wb, outputs)
        if failures:
            ok = False
            lines.append(f"FAIL zero test: {len(failures)} non-zero outputs")
            lines.extend(f"  {f.describe()}" for f in failures)
        else:
            lines.append(f"ok zero test over {zero_spec['outputs']}")

    for entry in config.get("sensitivity", []):
        input_addr = CellAddress.parse(entry["input"])
        delta = float(entry["delta"])
        expects = {
            CellAddress.parse(addr): float(expected)
            for addr, expected in entry["watch"].items()
        }
        tolerance = float(entry.get("tolerance", 1e-9))
        deltas = sensitivity(wb, input_addr, delta, expects)
        for addr in sorted(expects):
            got = deltas[addr]
            want = expects[addr]
            if abs(got - want) <= tolerance:
                lines.append(
                    f"ok sensitivity {input_addr.text}{delta:+g} -> {addr.text} {got:+.2f}"
                )
            else:
                ok = False
                lines.append(
                    f"FAIL sensitivity {input_addr.text}{delta:+g} -> {addr.text}: "
                    f"expected {want:+g}, got {got:+.10g}"
                )

    if config.get("assertions"):
        values = recalculate(wb)
        tripped = [
            (addr, v)
            for addr, v in sorted(values.items())
            if isinstance(v, ErrorValue) and v.code == "#ASSERT!"
        ]
        if tripped:
            ok = False
            for addr, v in tripped:
                detail = f": {v.message}" if v.message else ""
                lines.append(f"FAIL assertion at {addr.text}{detail}")
        else:
            lines.append("ok assertions")

    return lines, ok


@main.command()
@workbook_argument
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@no_stamp_option
@click.pass_context
def check(ctx: click.Context, workbook: str, config: str, no_stamp: bool) -> None:
    """Run the zero test, sensitivity expectations, and assertion scan."""
    wb = load_or_die(workbook)
    try:
        with open(config, encoding="utf-8") as fh:
            checks = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    try:
        lines, ok = _run_checks(wb, checks)
    except (AddressError, AnalysisError, KeyError, TypeError, ValueError) as exc:
        click.echo(f"error: bad check config: {exc!r}", err=True)
        sys.exit(2)
    emit("\n".join(lines), workbook, no_stamp)
    if not ok:
        ctx.exit(1)


# -- audit subcommands ----------------------------------------------------


@main.group()
def audit() -> None:
    """Traffic-lights audit sessions."""


def _load_session(workbook: str, log: str) -> AuditSession:
    wb = load_or_die(workbook)
    try:
        return AuditSession.load(wb, log)
    except StaleSessionError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except (AuditError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


@audit.command("init")
@workbook_argument
@click.argument("log", type=click.Path(dir_okay=False))
def audit_init(workbook: str, log: str) -> None:
    """Start a fresh session log for a workbook."""
    wb = load_or_die(workbook)
    if Path(log).exists():
        click.echo(f"error: {log} already exists", err=True)
        sys.exit(2)
    session = new_session(wb)
    session.save_log(log)
    click.echo(f"audit session over {len(session.scope)} cells -> {log}")


def _mark_command(workbook: str, log: str, cell: str, auditor: str | None, checked: bool) -> None:
    session = _load_session(workbook, log)
    addr = parse_addr_or_die(cell)
    try:
        result = session.mark(addr, checked, auditor or auditor_name())
    except AuditError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    session.save_log(log)
    if result.out_of_order:
        click.echo(f"warning: {addr.text} was not ready (its precedents are unchecked)", err=True)
    state = "checked" if checked else "unchecked"
    click.echo(f"{addr.text} {state}")


@audit.command("mark")
@workbook_argument
@click.argument("log", type=click.Path(exists=True, dir_okay=False))
@click.argument("cell")
@click.option("--auditor", help="Name recorded in the log (defaults to the current user).")
def audit_mark(workbook: str, log: str, cell: str, auditor: str | None) -> None:
    """Mark a cell as checked."""
    _mark_command(workbook, log, cell, auditor, True)


@audit.command("unmark")
@workbook_argument
@click.argument("log", type=click.Path(exists=True, dir_okay=False))
@click.argument("cell")
@click.option("--auditor", help="Name recorded in the log (defaults to the current user).")
def audit_unmark(workbook: str, log: str, cell: str, auditor: str | None) -> None:
    """Revert a cell to unchecked."""
    _mark_command(workbook, log, cell, auditor, False)


@audit.command("status")
@workbook_argument
@click.argument("log", type=click.Path(exists=True, dir_okay=False))
@click.option("--focus", help="Cell about to be checked; kindred neighbors darken.")
@no_stamp_option
def audit_status(workbook: str, log: str, focus: str | None, no_stamp: bool) -> None:
    """Show audit colors and progress."""
    session = _load_session(workbook, log)
    focus_addr = parse_addr_or_die(focus) if focus else None
    colors = session.colors(focus_addr)
    progress = session.progress()
    lines = [f"{addr.text}\t{colors[addr]}" for addr in sorted(colors)]
    lines.append(
        f"progress\tgreen={progress.green} yellow={progress.yellow} "
        f"red={progress.red} complete={'yes' if progress.complete else 'no'}"
    )
    emit("\n".join(lines), workbook, no_stamp)


@main.command("crawl")
@click.argument("root", type=click.Path(file_okay=False))
@click.option("--pattern", default="*.wbt", show_default=True)
@click.option("--recurse/--no-recurse", default=True, show_default=True)
@no_stamp_option
def crawl_cmd(root: str, pattern: str, recurse: bool, no_stamp: bool) -> None:
    """Inventory workbooks under a directory tree."""
    try:
        rows = crawl_tree(root, pattern, recurse)
    except InventoryError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    emit(render_log(rows), root, no_stamp)


@main.command()
@workbook_argument
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--log", type=click.Path(dir_okay=False), help="Audit log to load and persist.")
def serve(workbook: str, port: int, host: str, log: str | None) -> None:
    """Serve the HTTP API and web UI."""
    import uvicorn

    from .service import create_app

    load_or_die(workbook)  # fail fast with exit 2 on a bad workbook
    app = create_app(workbook, log_path=log)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
