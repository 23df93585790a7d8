from __future__ import annotations

import json
import re
import shutil
from pathlib import Path

import pytest
from click.testing import CliRunner

from gridaudit.cli import main

from conftest import golden

PLACEHOLDER = "# generated by - from - at -"

STAMP_RE = re.compile(
    r"# generated by \S+ from \S+ at \d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z"
)


@pytest.fixture()
def runner() -> CliRunner:
    return CliRunner()


def sample_str(sample_path: Path) -> str:
    return str(sample_path)


# ---------------------------------------------------------------------------
# Golden outputs


@pytest.mark.parametrize(
    ("command", "golden_name"),
    [
        ("eval", "eval_grid.tsv"),
        ("names", "names.tsv"),
        ("validations", "validations.tsv"),
        ("listing", "listing.tsv"),
    ],
)
def test_report_matches_golden(runner, sample_path, command, golden_name):
    result = runner.invoke(main, [command, str(sample_path), "--no-stamp"])
    assert result.exit_code == 0
    assert result.output == golden(golden_name)


def test_golden_tables_have_expected_row_counts():
    # one row per name, validation rule, and formula-bearing grid row,
    # plus the stamp line
    assert len(golden("names.tsv").splitlines()) == 12 + 1
    assert len(golden("validations.tsv").splitlines()) == 9 + 1
    assert len(golden("listing.tsv").splitlines()) == 11 + 1


# ---------------------------------------------------------------------------
# Stamping


def test_stamp_carries_user_file_and_time(runner, sample_path):
    result = runner.invoke(main, ["names", str(sample_path)])
    last = result.output.splitlines()[-1]
    assert STAMP_RE.fullmatch(last)
    assert str(sample_path) in last


def test_stamp_user_overridable_by_env(runner, sample_path):
    result = runner.invoke(
        main, ["names", str(sample_path)], env={"GRIDAUDIT_AUDITOR": "auditbot"}
    )
    assert "# generated by auditbot from" in result.output.splitlines()[-1]


def test_no_stamp_is_fixed_placeholder(runner, sample_path):
    result = runner.invoke(main, ["names", str(sample_path), "--no-stamp"])
    assert result.output.splitlines()[-1] == PLACEHOLDER


# ---------------------------------------------------------------------------
# Exit codes


def test_missing_workbook_is_usage_error(runner, tmp_path):
    result = runner.invoke(main, ["eval", str(tmp_path / "missing.wbt")])
    assert result.exit_code == 2


def test_unparsable_workbook_exits_two(runner, tmp_path):
    bad = tmp_path / "bad.wbt"
    bad.write_text("not a workbook\n")
    result = runner.invoke(main, ["eval", str(bad)])
    assert result.exit_code == 2
    assert result.stderr.startswith("error:")


def test_lint_clean_exits_zero(runner, sample_path):
    result = runner.invoke(main, ["lint", str(sample_path), "--no-stamp"])
    assert result.exit_code == 0
    assert result.output == PLACEHOLDER + "\n"


def test_lint_findings_exit_one(runner):
    fixture = Path(__file__).parent / "fixtures" / "l003.wbt"
    result = runner.invoke(main, ["lint", str(fixture), "--no-stamp"])
    assert result.exit_code == 1
    assert result.output.startswith("L003\tR2C1\tinfo\t")


# ---------------------------------------------------------------------------
# Cascades


CELL_CENSUS = """\
Cells\tCascades\tRisk
1\t11\t0.0500
2\t1\t0.0975
3\t11\t0.1426
4\t14\t0.1855
5\t37\t0.2262
6\t45\t0.2649
7\t33\t0.3017
8\t22\t0.3366
9\t8\t0.3698
"""


def test_cascades_cell_census(runner, sample_path):
    result = runner.invoke(main, ["cascades", str(sample_path), "--no-stamp"])
    assert result.exit_code == 0
    assert result.output == CELL_CENSUS + PLACEHOLDER + "\n"


def test_cascades_row_level(runner, sample_path):
    result = runner.invoke(
        main, ["cascades", str(sample_path), "--level", "row", "--no-stamp"]
    )
    lines = result.output.splitlines()
    assert lines[0] == "Cells\tCascades\tRisk"
    assert [line.split("\t")[:2] for line in lines[1:-1]] == [
        ["1", "1"],
        ["2", "1"],
        ["3", "1"],
        ["4", "5"],
        ["5", "4"],
    ]


def test_cascades_error_rate_option(runner, sample_path):
    result = runner.invoke(
        main,
        ["cascades", str(sample_path), "--error-rate", "0.1", "--no-stamp"],
    )
    assert result.output.splitlines()[1] == "1\t11\t0.1000"


def test_cascades_bad_error_rate(runner, sample_path):
    result = runner.invoke(main, ["cascades", str(sample_path), "--error-rate", "1.5"])
    assert result.exit_code == 2
    assert "error:" in result.stderr


# ---------------------------------------------------------------------------
# Graph and map


def test_graph_emits_dot(runner, sample_path):
    result = runner.invoke(main, ["graph", str(sample_path), "--no-stamp"])
    assert result.exit_code == 0
    assert result.output.startswith("digraph")
    assert "R9C3" in result.output


def test_graph_rows_collapses_to_captions(runner, sample_path):
    result = runner.invoke(main, ["graph", str(sample_path), "--rows", "--no-stamp"])
    assert 'label="Sales"' in result.output
    assert "R9C3" not in result.output


def test_map_html_and_svg(runner, sample_path):
    html = runner.invoke(main, ["map", str(sample_path), "--no-stamp"])
    assert html.exit_code == 0
    assert html.output.startswith("<!DOCTYPE html>")
    svg = runner.invoke(main, ["map", str(sample_path), "--svg", "--no-stamp"])
    assert svg.exit_code == 0
    assert svg.output.startswith("<svg")


# ---------------------------------------------------------------------------
# Check


def write_config(path: Path, config: dict) -> str:
    path.write_text(json.dumps(config))
    return str(path)


def test_check_passes_on_sample(runner, sample_path, tmp_path):
    config = write_config(
        tmp_path / "check.json",
        {
            "zero": {"outputs": "R6C3:R11C7"},
            "sensitivity": [
                {
                    "input": "R2C3",
                    "delta": 1,
                    "watch": {"R9C3": 1.0, "R10C3": 0.4, "R11C3": 0.6},
                }
            ],
            "assertions": True,
        },
    )
    result = runner.invoke(main, ["check", str(sample_path), config, "--no-stamp"])
    assert result.exit_code == 0
    assert result.output == (
        "ok zero test over R6C3:R11C7\n"
        "ok sensitivity R2C3+1 -> R9C3 +1.00\n"
        "ok sensitivity R2C3+1 -> R10C3 +0.40\n"
        "ok sensitivity R2C3+1 -> R11C3 +0.60\n"
        "ok assertions\n" + PLACEHOLDER + "\n"
    )


def test_check_failures_exit_one(runner, sample_path, tmp_path):
    config = write_config(
        tmp_path / "check.json", {"zero": {"outputs": "R1C3:R1C7"}}
    )
    result = runner.invoke(main, ["check", str(sample_path), config, "--no-stamp"])
    assert result.exit_code == 1
    assert "FAIL zero test: 5 non-zero outputs" in result.output
    assert "R1C3 is 1 instead of 0" in result.output


def test_check_rejects_invalid_json(runner, sample_path, tmp_path):
    config = tmp_path / "broken.json"
    config.write_text("{nope")
    result = runner.invoke(main, ["check", str(sample_path), str(config)])
    assert result.exit_code == 2


def test_check_rejects_bad_schema(runner, sample_path, tmp_path):
    config = write_config(tmp_path / "check.json", {"zero": {"wrong": 1}})
    result = runner.invoke(main, ["check", str(sample_path), config])
    assert result.exit_code == 2
    assert "bad check config" in result.stderr


# ---------------------------------------------------------------------------
# Audit workflow


def test_audit_init_mark_status_flow(runner, sample_path, tmp_path):
    log = str(tmp_path / "session.log")
    sample = str(sample_path)

    result = runner.invoke(main, ["audit", "init", sample, log])
    assert result.exit_code == 0
    assert "71 cells" in result.output
    assert Path(log).read_text().startswith("%wbtaudit 1 ")

    result = runner.invoke(main, ["audit", "init", sample, log])
    assert result.exit_code == 2
    assert "already exists" in result.stderr

    result = runner.invoke(
        main, ["audit", "mark", sample, log, "R2C1", "--auditor", "Ana"]
    )
    assert result.exit_code == 0
    assert result.stdout == "R2C1 checked\n"
    assert result.stderr == ""

    result = runner.invoke(main, ["audit", "status", sample, log, "--no-stamp"])
    lines = result.output.splitlines()
    assert "R2C1\tgreen" in lines
    assert lines[-2] == "progress\tgreen=1 yellow=20 red=50 complete=no"

    result = runner.invoke(
        main, ["audit", "unmark", sample, log, "R2C1", "--auditor", "Ana"]
    )
    assert result.stdout == "R2C1 unchecked\n"
    result = runner.invoke(main, ["audit", "status", sample, log, "--no-stamp"])
    assert "R2C1\tyellow" in result.output.splitlines()


def test_audit_mark_warns_out_of_order(runner, sample_path, tmp_path):
    log = str(tmp_path / "session.log")
    runner.invoke(main, ["audit", "init", str(sample_path), log])
    result = runner.invoke(
        main, ["audit", "mark", str(sample_path), log, "R9C3", "--auditor", "Ana"]
    )
    assert result.exit_code == 0
    assert result.stdout == "R9C3 checked\n"
    assert "warning: R9C3 was not ready" in result.stderr


def test_audit_mark_outside_grid_rejected(runner, sample_path, tmp_path):
    log = str(tmp_path / "session.log")
    runner.invoke(main, ["audit", "init", str(sample_path), log])
    result = runner.invoke(
        main, ["audit", "mark", str(sample_path), log, "R20C20", "--auditor", "Ana"]
    )
    assert result.exit_code == 2
    assert "outside" in result.stderr


def test_audit_auditor_defaults_to_env(runner, sample_path, tmp_path):
    log = tmp_path / "session.log"
    runner.invoke(main, ["audit", "init", str(sample_path), str(log)])
    runner.invoke(
        main,
        ["audit", "mark", str(sample_path), str(log), "R2C1"],
        env={"GRIDAUDIT_AUDITOR": "Jane Analyst"},
    )
    assert "mark R2C1 Jane Analyst " in log.read_text()


def test_audit_refuses_changed_workbook(runner, sample_path, tmp_path):
    copy = tmp_path / "copy.wbt"
    shutil.copy(sample_path, copy)
    log = str(tmp_path / "session.log")
    runner.invoke(main, ["audit", "init", str(copy), log])

    copy.write_text(copy.read_text().replace("num 12000", "num 13000"))
    result = runner.invoke(
        main, ["audit", "mark", str(copy), log, "R2C1", "--auditor", "Ana"]
    )
    assert result.exit_code == 2
    assert "fingerprint" in result.stderr


def test_audit_status_focus_darkens_copies(runner, tmp_path):
    wb = tmp_path / "small.wbt"
    wb.write_text(
        "%wbt 1\n"
        "cell R1C1 num 1 input\n"
        'cell R2C1 fml "=R1C1+0"\n'
        'cell R2C2 fml "=R1C1+0"\n'
    )
    log = str(tmp_path / "session.log")
    runner.invoke(main, ["audit", "init", str(wb), log])
    runner.invoke(main, ["audit", "mark", str(wb), log, "R1C1", "--auditor", "Ana"])
    result = runner.invoke(
        main, ["audit", "status", str(wb), log, "--focus", "R2C1", "--no-stamp"]
    )
    assert "R2C2\tdark-yellow" in result.output.splitlines()


# ---------------------------------------------------------------------------
# Crawl


def test_crawl_reports_tree(runner, tmp_path):
    nested = tmp_path / "books" / "q3"
    nested.mkdir(parents=True)
    (tmp_path / "books" / "a.wbt").write_text(
        '%wbt 1\nprop author "Ana"\ncell R1C1 num 1\n'
    )
    (nested / "b.wbt").write_text("%wbt 1\ncell R1C1 num 2\n")
    result = runner.invoke(main, ["crawl", str(tmp_path), "--no-stamp"])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0].startswith("Directory Name\tFile Name")
    assert len(lines) == 1 + 2 + 1
    assert "a.wbt" in lines[1] and "Ana" in lines[1]
    assert "b.wbt" in lines[2]


def test_crawl_no_recurse(runner, tmp_path):
    nested = tmp_path / "deep"
    nested.mkdir()
    (nested / "a.wbt").write_text("%wbt 1\ncell R1C1 num 1\n")
    result = runner.invoke(main, ["crawl", str(tmp_path), "--no-recurse", "--no-stamp"])
    assert result.output.splitlines()[1:] == [PLACEHOLDER]


def test_crawl_missing_root(runner, tmp_path):
    result = runner.invoke(main, ["crawl", str(tmp_path / "nowhere")])
    assert result.exit_code == 2
