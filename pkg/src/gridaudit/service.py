"""HTTP API over one workbook plus an audit session.

Analyses are computed once at startup and served as immutable snapshots;
audit mutations go through a single lock so concurrent clients serialize.
The web UI is static files mounted at the root, talking only to /api/*.
"""

from __future__ import annotations

import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import formula as fm
from .analyze import classify_cells, enumerate_cascades
from .audit import AuditError, AuditSession, new_session
from .engine import recalculate
from .formats import format_value
from .graph import build_graph
from .lint import lint
from .model import AddressError, CellAddress
from .wbt import load_workbook


class MarkRequest(BaseModel):
    cell: str
    checked: bool = True
    auditor: str = "anonymous"
    fingerprint: str | None = None


def _parse_cell(text: str) -> CellAddress:
    try:
        return CellAddress.parse(text)
    except AddressError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app(
    workbook_path: str | Path,
    log_path: str | Path | None = None,
    frontend_dir: str | Path | None = None,
) -> FastAPI:
    wb = load_workbook(workbook_path)
    sheet = wb.single_sheet()
    values = recalculate(wb)
    classes = classify_cells(wb)
    graph = build_graph(wb)
    findings = lint(wb)
    census = enumerate_cascades(graph, "cell")

    if log_path is not None and Path(log_path).exists():
        session = AuditSession.load(wb, log_path)
    else:
        session = new_session(wb)
    lock = threading.Lock()

    app = FastAPI(title="gridaudit", docs_url=None, redoc_url=None)

    cells_payload = []
    for addr in sheet.occupied():
        cell = sheet.cells[addr]
        formula_src = (
            cell.content.source if isinstance(cell.content, fm.Formula) else None
        )
        cells_payload.append(
            {
                "address": addr.text,
                "row": addr.row,
                "col": addr.col,
                "display": format_value(values.get(addr), cell.format_code),
                "cls": classes[addr].value,
                "input": cell.input_flag,
                "formula": formula_src,
            }
        )

    @app.get("/api/workbook")
    def get_workbook() -> dict:
        return {
            "fingerprint": session.fingerprint,
            "sheet": sheet.name,
            "max_row": sheet.max_row,
            "max_col": sheet.max_col,
            "cells": cells_payload,
        }

    @app.get("/api/graph")
    def get_graph() -> dict:
        return {
            "nodes": [a.text for a in sorted(graph.nodes)],
            "edges": [
                {
                    "from": e.precedent.text,
                    "to": e.dependent.text,
                    "kind": e.kind.value,
                }
                for e in graph.sorted_edges()
            ],
        }

    @app.get("/api/lint")
    def get_lint() -> dict:
        return {
            "findings": [
                {
                    "code": f.code,
                    "address": f.address.text,
                    "severity": f.severity,
                    "message": f.message,
                }
                for f in findings
            ]
        }

    @app.get("/api/cascades")
    def get_cascades() -> dict:
        return {
            "histogram": [
                {"length": length, "count": count}
                for length, count in sorted(census.histogram.items())
            ],
            "paths": len(census.paths),
            "truncated": census.truncated,
        }

    @app.get("/api/audit")
    def get_audit(focus: str | None = None) -> dict:
        focus_addr = _parse_cell(focus) if focus else None
        with lock:
            colors = session.colors(focus_addr)
            progress = session.progress()
        return {
            "fingerprint": session.fingerprint,
            "colors": {addr.text: color for addr, color in sorted(colors.items())},
            "progress": {
                "green": progress.green,
                "yellow": progress.yellow,
                "red": progress.red,
                "total": progress.total,
                "complete": progress.complete,
            },
        }

    @app.post("/api/audit/mark")
    def post_mark(req: MarkRequest) -> dict:
        addr = _parse_cell(req.cell)
        with lock:
            if req.fingerprint is not None and req.fingerprint != session.fingerprint:
                raise HTTPException(
                    status_code=409,
                    detail="workbook fingerprint does not match the audit session",
                )
            try:
                result = session.mark(addr, req.checked, req.auditor)
            except AuditError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            if log_path is not None:
                session.save_log(log_path)
            progress = session.progress()
        return {
            "cell": addr.text,
            "checked": result.checked,
            "out_of_order": result.out_of_order,
            "progress": {
                "green": progress.green,
                "yellow": progress.yellow,
                "red": progress.red,
                "total": progress.total,
                "complete": progress.complete,
            },
        }

    if frontend_dir is None:
        bundled = Path(__file__).parent / "static"
        frontend_dir = bundled if bundled.is_dir() else None
    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app
