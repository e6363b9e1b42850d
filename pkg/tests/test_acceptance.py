"""Acceptance criteria 1 to 14 at their stated tolerances.

Each criterion prints one PASS/FAIL line.  Ensembles are shared through one
module-scoped suite, so the whole file runs in about three minutes.
"""

import pytest

from branchscope import acceptance

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def suite():
    return acceptance.Suite()


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(suite, number, capsys):
    outcome = acceptance.evaluate(number, suite)
    with capsys.disabled():
        print("\n" + outcome.line())
    assert outcome.passed, outcome.line()
