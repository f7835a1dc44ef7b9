"""Shared fixtures: cached enumerations and the acceptance announcer."""

from __future__ import annotations

import pytest

import regenbounds as rb

# Small caps used where the full search space is not needed; keeps the
# expensive parameter sets fast while still producing the bounds under test.
REDUCED_CAPS = rb.EnumerationLimits(4, 2, 4, 200)


@pytest.fixture(scope="session")
def enum():
    """Callable (k, d[, limits]) -> EnumerationResult, cached process-wide."""

    def _enum(k: int, d: int, limits=None) -> rb.EnumerationResult:
        return rb.enumerate_bounds(rb.SystemParams(k, d), limits)

    return _enum


@pytest.fixture
def announce(capsys):
    """Print one live pass/fail line per acceptance criterion, then assert."""

    def _announce(number: int, ok: bool, detail: str):
        status = "PASS" if ok else "FAIL"
        with capsys.disabled():
            print(f"ACCEPTANCE {number}: {status} — {detail}")
        assert ok, f"ACCEPTANCE {number} failed: {detail}"

    return _announce
