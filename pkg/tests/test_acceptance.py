"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import pytest

from cubiq.acceptance import CRITERIA, QUICK_BUDGET, run

SLOW = {num for num, _, _, budget in CRITERIA if budget > QUICK_BUDGET}


@pytest.mark.parametrize(
    "number",
    [pytest.param(num, marks=pytest.mark.slow) if num in SLOW else num for num, *_ in CRITERIA],
    ids=[f"criterion-{num:02d}" for num, *_ in CRITERIA],
)
def test_criterion(number, capsys):
    (outcome,) = run([number])
    with capsys.disabled():
        print(f"\n{outcome.line}")
    assert outcome.passed, outcome.detail
    assert outcome.seconds <= outcome.budget, f"took {outcome.seconds:.1f}s, budget {outcome.budget}s"
