import contextlib
import io
import json
from pathlib import Path

import jsonschema
import pytest

from fe_workbench import cli

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "schemas"


def load_schema(name: str) -> dict:
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())


def validate(report: dict, name: str):
    jsonschema.validate(report, load_schema(name))


@pytest.fixture
def run_cli(tmp_path):
    """Run the CLI in-process; returns (exit code, parsed JSON report or None, stderr)."""
    counter = {"k": 0}

    def _run(*argv):
        counter["k"] += 1
        out = tmp_path / f"report{counter['k']}.json"
        err = io.StringIO()
        with contextlib.redirect_stderr(err):
            code = cli.run([*argv, "--out", str(out)])
        report = json.loads(out.read_text()) if out.exists() else None
        return code, report, err.getvalue()

    return _run


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion; printed in the summary."""

    def _record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
