"""Workbook inventory crawler.

Walks a directory tree, parses every matching workbook, and tabulates the
document properties into the seven-column usage log.  Unreadable or
property-less files yield rows with blank fields rather than aborting the
crawl; a directory that cannot be listed becomes a diagnostic row and the
traversal moves on.
"""

from __future__ import annotations

import fnmatch
import os
from dataclasses import dataclass
from pathlib import Path

from .wbt import WbtError, load_workbook

HEADER = (
    "Directory Name",
    "File Name",
    "File Size",
    "Author",
    "Comments",
    "Checked By",
    "Purpose",
)


class InventoryError(ValueError):
    pass


@dataclass(frozen=True)
class LogRow:
    directory: str
    file: str
    size: int | None
    author: str = ""
    comments: str = ""
    checked_by: str = ""
    purpose: str = ""

    def cells(self) -> tuple[str, ...]:
        size = "" if self.size is None else str(self.size)
        return (
            self.directory,
            self.file,
            size,
            self.author,
            self.comments,
            self.checked_by,
            self.purpose,
        )


def _row_for_file(directory: Path, name: str) -> LogRow:
    path = directory / name
    try:
        size = path.stat().st_size
    except OSError:
        size = None
    try:
        wb = load_workbook(path)
    except (WbtError, OSError, UnicodeDecodeError):
        return LogRow(str(directory), name, size)
    props = wb.props
    return LogRow(
        str(directory),
        name,
        size,
        author=props.get("author", ""),
        comments=props.get("comments", ""),
        checked_by=props.get("checked-by", ""),
        purpose=props.get("purpose", ""),
    )


def crawl(root: str | Path, pattern: str = "*.wbt", recurse: bool = True) -> list[LogRow]:
    """Collect one row per matching file, sorted by (directory, file name)."""
    root = Path(root)
    if not root.is_dir():
        raise InventoryError(f"{root}: not a directory")
    rows: list[LogRow] = []
    pending = [root]
    while pending:
        directory = pending.pop()
        try:
            entries = sorted(os.listdir(directory))
        except OSError as exc:
            rows.append(
                LogRow(str(directory), "", None, comments=f"unreadable: {exc.strerror}")
            )
            continue
        for name in entries:
            path = directory / name
            if path.is_dir():
                if recurse:
                    pending.append(path)
            elif fnmatch.fnmatch(name, pattern):
                rows.append(_row_for_file(directory, name))
    rows.sort(key=lambda r: (r.directory, r.file))
    return rows


def render_log(rows: list[LogRow]) -> str:
    """Tab-separated report with the fixed seven-column header."""
    lines = ["\t".join(HEADER)]
    lines.extend("\t".join(r.cells()) for r in rows)
    return "\n".join(lines) + "\n"
