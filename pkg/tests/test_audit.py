from __future__ import annotations

import tempfile
from datetime import datetime, timezone
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridaudit import audit
from gridaudit.model import CellAddress
from gridaudit.wbt import parse_workbook


def addr(text: str) -> CellAddress:
    return CellAddress.parse(text)


def wb_of(*lines: str):
    return parse_workbook("%wbt 1\n" + "\n".join(lines) + "\n")


CHAIN = (
    "cell R1C1 num 5 input",
    'cell R2C1 fml "=R1C1+0"',
    'cell R3C1 fml "=R2C1+0"',
)

TS = datetime(2026, 8, 21, 9, 30, 0, tzinfo=timezone.utc)


# ---------------------------------------------------------------------------
# Session creation and scope


def test_fresh_sample_session(sample_wb):
    session = audit.new_session(sample_wb)
    assert len(session.scope) == 71
    progress = session.progress()
    assert (progress.green, progress.yellow, progress.red) == (0, 21, 50)
    assert progress.total == 71
    assert not progress.complete


def test_cells_without_precedents_start_yellow():
    session = audit.new_session(wb_of(*CHAIN))
    colors = session.colors()
    assert colors[addr("R1C1")] == audit.YELLOW
    assert colors[addr("R2C1")] == audit.RED
    assert colors[addr("R3C1")] == audit.RED


def test_explicit_scope_honored():
    wb = wb_of(*CHAIN)
    session = audit.new_session(wb, scope={addr("R2C1"), addr("R3C1")})
    assert set(session.colors()) == {addr("R2C1"), addr("R3C1")}
    assert session.progress().total == 2


def test_out_of_scope_precedents_do_not_gate_readiness():
    # R2C1 depends on R1C1, but R1C1 is outside the scope, so R2C1 is
    # immediately ready to check
    wb = wb_of(*CHAIN)
    session = audit.new_session(wb, scope={addr("R2C1"), addr("R3C1")})
    colors = session.colors()
    assert colors[addr("R2C1")] == audit.YELLOW
    assert colors[addr("R3C1")] == audit.RED


def test_scope_must_be_occupied():
    wb = wb_of(*CHAIN)
    with pytest.raises(audit.AuditError, match="R9C9"):
        audit.new_session(wb, scope={addr("R1C1"), addr("R9C9")})


# ---------------------------------------------------------------------------
# Marking


def test_mark_advances_frontier():
    session = audit.new_session(wb_of(*CHAIN))
    result = session.mark(addr("R1C1"), True, "Ana")
    assert not result.out_of_order
    colors = session.colors()
    assert colors[addr("R1C1")] == audit.GREEN
    assert colors[addr("R2C1")] == audit.YELLOW
    assert colors[addr("R3C1")] == audit.RED


def test_unmark_retreats_frontier():
    session = audit.new_session(wb_of(*CHAIN))
    session.mark(addr("R1C1"), True, "Ana")
    session.mark(addr("R1C1"), False, "Ana")
    colors = session.colors()
    assert colors[addr("R1C1")] == audit.YELLOW
    assert colors[addr("R2C1")] == audit.RED


def test_marking_red_cell_flags_out_of_order():
    session = audit.new_session(wb_of(*CHAIN))
    result = session.mark(addr("R3C1"), True, "Ana")
    assert result.out_of_order
    assert session.colors()[addr("R3C1")] == audit.GREEN


def test_unmark_is_never_out_of_order():
    session = audit.new_session(wb_of(*CHAIN))
    session.mark(addr("R3C1"), True, "Ana")
    result = session.mark(addr("R3C1"), False, "Ana")
    assert not result.out_of_order


def test_mark_outside_scope_rejected():
    wb = wb_of(*CHAIN)
    session = audit.new_session(wb, scope={addr("R1C1")})
    with pytest.raises(audit.AuditError, match="outside"):
        session.mark(addr("R2C1"), True, "Ana")


@pytest.mark.parametrize("name", ["", "  ", " Ana", "Ana "])
def test_auditor_name_must_be_trimmed_nonempty(name):
    session = audit.new_session(wb_of(*CHAIN))
    with pytest.raises(audit.AuditError, match="auditor"):
        session.mark(addr("R1C1"), True, name)


def test_all_marked_is_complete():
    wb = wb_of(*CHAIN)
    session = audit.new_session(wb)
    for cell in ("R1C1", "R2C1", "R3C1"):
        session.mark(addr(cell), True, "Ana")
    progress = session.progress()
    assert progress.complete
    assert set(session.colors().values()) == {audit.GREEN}


# ---------------------------------------------------------------------------
# Sample workbook staging


def mark_rows(session, wb, rows, extra=()):
    sheet = wb.single_sheet()
    for cell in sorted(sheet.cells):
        if cell.row in rows or cell.text in extra:
            session.mark(cell, True, "Ana")


def test_sample_staging_rows_one_to_five(sample_wb):
    session = audit.new_session(sample_wb)
    mark_rows(session, sample_wb, {1, 2, 3, 4, 5}, extra={"R10C1"})
    colors = session.colors()
    for col in range(3, 8):
        for row in (6, 7, 8):
            assert colors[CellAddress(row, col)] == audit.YELLOW
        for row in (9, 10, 11):
            assert colors[CellAddress(row, col)] == audit.RED
    progress = session.progress()
    assert progress.green == 35


def test_focus_darkens_adjacent_copy(sample_wb):
    session = audit.new_session(sample_wb)
    mark_rows(session, sample_wb, {1, 2, 3, 4, 5})
    colors = session.colors(focus=addr("R7C3"))
    dark = {cell for cell, color in colors.items() if color == audit.DARK_YELLOW}
    # R7C4 carries the same formula shape and touches R7C3; R7C5 does too
    # but is not adjacent, and R6C3 has a different formula
    assert dark == {addr("R7C4")}


def test_no_focus_means_no_dark_yellow(sample_wb):
    session = audit.new_session(sample_wb)
    mark_rows(session, sample_wb, {1, 2, 3, 4, 5})
    assert audit.DARK_YELLOW not in set(session.colors().values())


def test_focus_on_constant_darkens_nothing(sample_wb):
    session = audit.new_session(sample_wb)
    colors = session.colors(focus=addr("R10C1"))
    assert audit.DARK_YELLOW not in set(colors.values())


def test_focus_requires_neighbor_to_be_yellow():
    wb = wb_of(
        "cell R1C1 num 1 input",
        'cell R2C1 fml "=R1C1+0"',
        'cell R2C2 fml "=R1C1+0"',
    )
    session = audit.new_session(wb)
    # both copies are red until R1C1 is checked, so focusing darkens nothing
    colors = session.colors(focus=addr("R2C1"))
    assert audit.DARK_YELLOW not in set(colors.values())
    session.mark(addr("R1C1"), True, "Ana")
    colors = session.colors(focus=addr("R2C1"))
    assert colors[addr("R2C2")] == audit.DARK_YELLOW


# ---------------------------------------------------------------------------
# Persistence


def test_save_load_round_trip(tmp_path, sample_wb):
    session = audit.new_session(sample_wb)
    session.mark(addr("R2C1"), True, "Jane Analyst", timestamp=TS)
    session.mark(addr("R10C1"), True, "Jane Analyst", timestamp=TS)
    session.mark(addr("R2C1"), False, "Jane Analyst", timestamp=TS)
    path = tmp_path / "session.log"
    session.save_log(path)

    loaded = audit.AuditSession.load(sample_wb, path)
    assert loaded.colors() == session.colors()
    assert loaded.progress() == session.progress()
    assert loaded.checked[addr("R10C1")] == ("Jane Analyst", TS)
    assert addr("R2C1") not in loaded.checked


def test_log_file_format(tmp_path):
    wb = wb_of(*CHAIN)
    session = audit.new_session(wb)
    session.mark(addr("R1C1"), True, "Ana", timestamp=TS)
    path = tmp_path / "session.log"
    session.save_log(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "%wbtaudit 1 " + session.fingerprint
    assert lines[1] == "mark R1C1 Ana 2026-08-21T09:30:00Z"


def test_load_rejects_changed_workbook(tmp_path):
    wb = wb_of(*CHAIN)
    session = audit.new_session(wb)
    session.mark(addr("R1C1"), True, "Ana")
    path = tmp_path / "session.log"
    session.save_log(path)

    changed = wb_of("cell R1C1 num 6 input", *CHAIN[1:])
    with pytest.raises(audit.StaleSessionError):
        audit.AuditSession.load(changed, path)


def test_verify_fingerprint_mismatch():
    session = audit.new_session(wb_of(*CHAIN))
    with pytest.raises(audit.StaleSessionError):
        session.verify_fingerprint("0" * 64)


def test_load_rejects_non_log_file(tmp_path):
    path = tmp_path / "other.txt"
    path.write_text("%wbt 1\ncell R1C1 num 5\n")
    with pytest.raises(audit.AuditError, match="not an audit log"):
        audit.AuditSession.load(wb_of(*CHAIN), path)


@pytest.mark.parametrize(
    ("line", "fragment"),
    [
        ("mark R1C1 Ana", "malformed"),
        ("check R1C1 Ana 2026-08-21T09:30:00Z", "unknown operation"),
        ("mark R0C1 Ana 2026-08-21T09:30:00Z", "row"),
        ("mark R1C1  2026-08-21T09:30:00Z", "auditor"),
        ("mark R1C1 Ana yesterday", "timestamp"),
    ],
)
def test_load_rejects_malformed_entries(tmp_path, line, fragment):
    wb = wb_of(*CHAIN)
    session = audit.new_session(wb)
    path = tmp_path / "session.log"
    session.save_log(path)
    path.write_text(path.read_text() + line + "\n")
    with pytest.raises(audit.AuditError, match=fragment) as exc:
        audit.AuditSession.load(wb, path)
    assert "line 2" in str(exc.value)


# ---------------------------------------------------------------------------
# Invariants over random sessions


@st.composite
def _dag_sessions(draw):
    """A small single-column DAG workbook plus a mark/unmark script."""
    n = draw(st.integers(min_value=2, max_value=8))
    lines = []
    for i in range(1, n + 1):
        upstream = [j for j in range(1, i) if draw(st.booleans())]
        if upstream:
            expr = "+".join(f"R{j}C1" for j in upstream)
            lines.append(f'cell R{i}C1 fml "={expr}"')
        else:
            lines.append(f"cell R{i}C1 num {i} input")
    ops = draw(
        st.lists(
            st.tuples(st.integers(min_value=1, max_value=n), st.booleans()),
            max_size=24,
        )
    )
    return lines, ops


def _assert_frontier_sound(session):
    colors = session.colors()
    for cell, color in colors.items():
        precedents = session._precedents[cell]
        if color == audit.GREEN:
            assert cell in session.checked
        elif color == audit.YELLOW:
            assert all(colors[p] == audit.GREEN for p in precedents)
        else:
            assert any(colors[p] != audit.GREEN for p in precedents)


@settings(max_examples=80, deadline=None)
@given(_dag_sessions())
def test_random_sessions_keep_frontier_sound(case):
    lines, ops = case
    session = audit.new_session(wb_of(*lines))
    _assert_frontier_sound(session)
    for row, checked in ops:
        before = session.colors()
        cell = CellAddress(row, 1)
        session.mark(cell, checked, "Ana", timestamp=TS)
        after = session.colors()
        if checked:
            for other, was in before.items():
                if other != cell and was == audit.YELLOW:
                    assert after[other] != audit.RED
        _assert_frontier_sound(session)
    counts = session.progress()
    assert counts.total == len(session.scope)


@settings(max_examples=40, deadline=None)
@given(_dag_sessions())
def test_random_sessions_survive_save_load(case):
    lines, ops = case
    wb = wb_of(*lines)
    session = audit.new_session(wb)
    for row, checked in ops:
        session.mark(CellAddress(row, 1), checked, "Ana", timestamp=TS)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "session.log"
        session.save_log(path)
        loaded = audit.AuditSession.load(wb, path)
    assert loaded.colors() == session.colors()
