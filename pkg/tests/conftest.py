from __future__ import annotations

import os

import pytest

# keep pool-based tests small on shared machines
os.environ.setdefault("CHAOS_WORKERS", "2")


@pytest.fixture
def chua_cfg():
    from saddlefocus import SweepConfig, KneadingConfig

    def make(u_range=(0.5, 1.0), v_range=(5.0, 6.0), res=(4, 4), window=(1, 6), **kw):
        return SweepConfig("chua", "identity", u_range, v_range, res, KneadingConfig(*window), **kw)

    return make


_ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
