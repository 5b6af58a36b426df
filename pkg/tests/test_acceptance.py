"""Acceptance battery: one PASS/FAIL line per criterion.

Run under pytest (``pytest -v tests/test_acceptance.py``) or directly as a
script (``python tests/test_acceptance.py [criterion ...]``).
"""

import sys

import pytest

from filament_lab.acceptance import CRITERIA, FixedPointStudy, criterion_8, run_battery

SHARED_STUDY = (6, 7)


@pytest.fixture(scope="session")
def fixed_point_study():
    return FixedPointStudy()


def _report(check, capsys):
    with capsys.disabled():
        print("\n" + check.line())
        if check.note:
            print("    note: " + check.note)


@pytest.mark.slow
@pytest.mark.parametrize("criterion", sorted(CRITERIA))
def test_acceptance_criterion(criterion, fixed_point_study, capsys):
    fn = CRITERIA[criterion]
    check = fn(fixed_point_study) if criterion in SHARED_STUDY else fn()
    _report(check, capsys)
    assert check.passed, check.line()


@pytest.mark.slow
def test_flipped_source_sign_fails_to_track(capsys):
    """The alternative sign of the source term must not reproduce the forward evolution."""
    check = criterion_8(source_sign="as_printed")
    _report(check, capsys)
    assert not check.passed


if __name__ == "__main__":
    chosen = [int(a) for a in sys.argv[1:]] or sorted(CRITERIA)
    checks = run_battery(chosen)
    for c in checks:
        print(c.line())
    sys.exit(0 if all(c.passed for c in checks) else 1)
