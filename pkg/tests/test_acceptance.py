"""Acceptance criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line with the measured
quantities, visible even when pytest captures output.
"""

import pytest

from spinbath.validation import CHECKS, run_one


@pytest.mark.parametrize("name", list(CHECKS))
def test_acceptance(name, capsys):
    result = run_one(name)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()
