"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import pytest

from quadcoh.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1), ids=lambda n: f"criterion{n:02d}")
def test_criterion(number, capsys):
    result = run_criterion(number)
    with capsys.disabled():
        print("\n" + result.summary())
        for check in result.checks:
            mark = "ok " if check.passed else "BAD"
            print(f"      {mark} {check.label}: got {check.got:.10g}, expected {check.expected}, tol {check.tol:g}")
    assert result.error is None, result.error
    failing = [c.label for c in result.checks if not c.passed]
    assert not failing, f"criterion {number} ({result.name}) failed: {failing}"
