from __future__ import annotations

from pathlib import Path

import pytest

from gridaudit import sample_forecast_path
from gridaudit.model import Workbook
from gridaudit.wbt import load_workbook

GOLDEN_DIR = Path(__file__).parent / "golden"
FIXTURE_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def sample_path() -> Path:
    return Path(sample_forecast_path())


@pytest.fixture()
def sample_wb(sample_path: Path) -> Workbook:
    return load_workbook(sample_path)


def golden(name: str) -> str:
    return (GOLDEN_DIR / name).read_text(encoding="utf-8")


def fixture_path(name: str) -> Path:
    return FIXTURE_DIR / name
