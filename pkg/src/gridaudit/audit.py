"""Traffic-lights audit sessions.

A session binds to one workbook by content fingerprint and tracks which
cells an auditor has signed off.  Colors derive from the dependency graph:
checked cells are green, unchecked cells whose in-scope precedents are all
green are yellow (ready to check), everything else is red.  With a focus
cell, yellow neighbors sharing its formula shape darken, since they can be
checked in the same glance.  Progress persists to an append-only log that
replays against the same workbook and refuses a changed one.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

from . import formula as fm
from .graph import DepGraph, build_graph
from .model import AddressError, CellAddress, Workbook
from .wbt import fingerprint

LOG_HEADER_PREFIX = "%wbtaudit 1 "

GREEN = "green"
YELLOW = "yellow"
DARK_YELLOW = "dark-yellow"
RED = "red"


class AuditError(ValueError):
    pass


class StaleSessionError(AuditError):
    """The workbook changed under the audit; its fingerprint no longer matches."""


@dataclass(frozen=True)
class MarkResult:
    address: CellAddress
    checked: bool
    out_of_order: bool


@dataclass(frozen=True)
class Progress:
    green: int
    yellow: int
    red: int

    @property
    def total(self) -> int:
        return self.green + self.yellow + self.red

    @property
    def complete(self) -> bool:
        return self.green == self.total


def _now() -> datetime:
    return datetime.now(timezone.utc)


def _format_ts(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _parse_ts(text: str) -> datetime:
    return datetime.fromisoformat(text.replace("Z", "+00:00"))


@dataclass(frozen=True)
class _LogEntry:
    op: str  # mark | unmark
    address: CellAddress
    auditor: str
    timestamp: datetime

    def line(self) -> str:
        return f"{self.op} {self.address.text} {self.auditor} {_format_ts(self.timestamp)}"


class AuditSession:
    """Mutable audit state over an immutable workbook."""

    def __init__(self, wb: Workbook, scope: set[CellAddress] | None = None) -> None:
        self.wb = wb
        self.fingerprint = fingerprint(wb)
        sheet = wb.single_sheet()
        occupied = set(sheet.cells)
        if scope is None:
            self.scope = occupied
        else:
            extra = set(scope) - occupied
            if extra:
                worst = sorted(extra)[0]
                raise AuditError(f"scope cell {worst.text} is not occupied")
            self.scope = set(scope)
        self.checked: dict[CellAddress, tuple[str, datetime]] = {}
        self.log: list[_LogEntry] = []
        self._graph: DepGraph = build_graph(wb)
        self._precedents: dict[CellAddress, set[CellAddress]] = {
            a: {p for p in self._graph.precedents(a) if p in self.scope} for a in self.scope
        }
        self._forms: dict[CellAddress, str] = {}
        for addr in self.scope:
            content = sheet.cells[addr].content
            if isinstance(content, fm.Formula):
                self._forms[addr] = fm.normal_form(content.ast)

    # -- operations -----------------------------------------------------

    def verify_fingerprint(self, expected: str) -> None:
        if expected != self.fingerprint:
            raise StaleSessionError(
                "workbook fingerprint does not match the audit session"
            )

    def mark(
        self,
        addr: CellAddress,
        checked: bool,
        auditor: str,
        timestamp: datetime | None = None,
    ) -> MarkResult:
        if addr not in self.scope:
            raise AuditError(f"{addr.text} is outside the audit scope")
        if not auditor or auditor != auditor.strip():
            raise AuditError("auditor name must be non-empty without leading/trailing spaces")
        ts = timestamp or _now()
        out_of_order = checked and self._color_of(addr) == RED
        if checked:
            self.checked[addr] = (auditor, ts)
        else:
            self.checked.pop(addr, None)
        self.log.append(_LogEntry("mark" if checked else "unmark", addr, auditor, ts))
        return MarkResult(addr, checked, out_of_order)

    def _color_of(self, addr: CellAddress) -> str:
        if addr in self.checked:
            return GREEN
        if all(p in self.checked for p in self._precedents[addr]):
            return YELLOW
        return RED

    def colors(self, focus: CellAddress | None = None) -> dict[CellAddress, str]:
        out = {addr: self._color_of(addr) for addr in self.scope}
        if focus is not None and focus in self._forms:
            focus_nf = self._forms[focus]
            for nb in focus.neighbors8():
                if out.get(nb) == YELLOW and self._forms.get(nb) == focus_nf:
                    out[nb] = DARK_YELLOW
        return out

    def progress(self) -> Progress:
        counts = {GREEN: 0, YELLOW: 0, RED: 0}
        for addr in self.scope:
            counts[self._color_of(addr)] += 1
        return Progress(counts[GREEN], counts[YELLOW], counts[RED])

    # -- persistence ----------------------------------------------------

    def save_log(self, path) -> None:
        lines = [LOG_HEADER_PREFIX + self.fingerprint]
        lines.extend(entry.line() for entry in self.log)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    @classmethod
    def load(
        cls, wb: Workbook, path, scope: set[CellAddress] | None = None
    ) -> "AuditSession":
        with open(path, encoding="utf-8") as fh:
            raw = fh.read().splitlines()
        if not raw or not raw[0].startswith(LOG_HEADER_PREFIX):
            raise AuditError(f"{path}: not an audit log")
        session = cls(wb, scope)
        logged = raw[0][len(LOG_HEADER_PREFIX):].strip()
        session.verify_fingerprint(logged)
        for lineno, line in enumerate(raw[1:], start=2):
            if not line.strip():
                continue
            entry = _parse_entry(line, lineno)
            session.mark(
                entry.address,
                entry.op == "mark",
                entry.auditor,
                timestamp=entry.timestamp,
            )
        return session


def _parse_entry(line: str, lineno: int) -> _LogEntry:
    parts = line.split(" ")
    if len(parts) < 4:
        raise AuditError(f"line {lineno}: malformed audit log entry")
    op = parts[0]
    if op not in ("mark", "unmark"):
        raise AuditError(f"line {lineno}: unknown operation {op!r}")
    try:
        addr = CellAddress.parse(parts[1])
    except AddressError as exc:
        raise AuditError(f"line {lineno}: {exc}") from exc
    # the auditor may contain spaces; the timestamp is always the last token
    auditor = " ".join(parts[2:-1])
    if not auditor:
        raise AuditError(f"line {lineno}: missing auditor")
    try:
        ts = _parse_ts(parts[-1])
    except ValueError as exc:
        raise AuditError(f"line {lineno}: bad timestamp {parts[-1]!r}") from exc
    return _LogEntry(op, addr, auditor, ts)


def new_session(wb: Workbook, scope: set[CellAddress] | None = None) -> AuditSession:
    return AuditSession(wb, scope)
