"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the terminal summary so that
``pytest -v`` output shows them without ``-s``.
"""

import pytest

from degdiff import acceptance
from conftest import record_criterion


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number):
    res = acceptance.CRITERIA[number]()
    line = res.line()
    print(line)
    record_criterion(line)
    assert res.passed, line
