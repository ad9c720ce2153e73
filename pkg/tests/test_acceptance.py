"""The nine acceptance criteria at their stated tolerances.

Each criterion contributes one pass/fail line to the "acceptance criteria"
section of the terminal summary.  Hybrid runs are cached per process, so
the criteria sharing a trajectory pay for it once.
"""

import pytest

from kvnlab import acceptance


@pytest.mark.acceptance
@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, report_line):
    result = acceptance.run_criterion(number)
    report_line(result.line())
    assert result.error is None, result.error
    assert result.passed, result.line()
