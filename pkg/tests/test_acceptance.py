"""The eleven acceptance criteria, each at its stated tolerance and runtime limit.

Every criterion prints one ``[PASS]``/``[FAIL]`` line (shown even when pytest
captures output) and the test fails if the check fails or runs over time.
"""
import pytest

from qrse.checks import CHECKS, run_check


@pytest.mark.parametrize("check", CHECKS, ids=[f"{c.number:02d}-{c.name.replace(' ', '_')}" for c in CHECKS])
def test_criterion(check, capsys):
    result = run_check(check, seed=0)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail
    assert result.in_time, f"took {result.seconds:.1f}s, limit {result.limit:g}s"
