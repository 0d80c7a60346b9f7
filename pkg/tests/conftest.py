from __future__ import annotations

from pathlib import Path

import pytest

from schemakit.gateway import FixtureProvider
from schemakit.pipeline import PipelineConfig
from schemakit.retrieval import ingest

DATA = Path(__file__).parent / "data"
PKG_DATA = Path(__file__).parents[1] / "src" / "schemakit" / "data"

TOY_SCENARIO = "disease outbreak"
TOY_CONFIG_KWARGS = dict(max_events_per_chapter=5)


@pytest.fixture(scope="session")
def toy_fixtures():
    return FixtureProvider(DATA / "toy_fixtures.jsonl")


@pytest.fixture(scope="session")
def toy_corpus_index():
    return ingest(PKG_DATA / "toy_corpus.jsonl")


@pytest.fixture()
def toy_config():
    return PipelineConfig(**TOY_CONFIG_KWARGS)


def gold_schema_paths() -> list[Path]:
    return sorted((DATA / "golds").glob("*.json")) + [DATA / "golden_schema.json"]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion, in declaration order."""
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None:
        return
    status_by_test = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", "call") != "call":
                continue
            name = rep.nodeid.split("::")[-1]
            status_by_test.setdefault(name, status)
    lines = [
        (status_by_test[test], label)
        for test, label in module.CRITERIA.items()
        if test in status_by_test
    ]
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for status, label in lines:
        terminalreporter.write_line(
            f"[{'PASS' if status == 'passed' else 'FAIL'}] {label}"
        )
