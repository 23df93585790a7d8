"""Spreadsheet audit toolkit.

Plain-text workbooks, a formula engine with copy-equivalence normal forms,
dependency graphs, recalculation, lint detectors, cascade arithmetic, and a
reviewed-cell tracking workflow, behind one CLI and a small HTTP API.
"""

from importlib import resources

__version__ = "0.1.0"

from .model import Cell, CellAddress, CellRange, NamedRange, Sheet, ValidationRule, Workbook
from .formula import Formula, Style, normal_form, parse_formula, render_formula, translate
from .wbt import fingerprint, load_workbook, parse_workbook, serialize_workbook

__all__ = [
    "Cell",
    "CellAddress",
    "CellRange",
    "Formula",
    "NamedRange",
    "Sheet",
    "Style",
    "ValidationRule",
    "Workbook",
    "__version__",
    "fingerprint",
    "load_workbook",
    "normal_form",
    "parse_formula",
    "parse_workbook",
    "render_formula",
    "sample_forecast_path",
    "serialize_workbook",
    "translate",
]


def sample_forecast_path() -> str:
    """Filesystem path of the bundled five-year forecast workbook."""
    return str(resources.files(__package__) / "data" / "sample_forecast.wbt")
