"""Acceptance criteria; each case prints one PASS/FAIL line with the measured values."""

import pytest

from critlab.acceptance import ALL_IDS, FULL_ONLY, a1, run_criterion


def _param(cid):
    marks = [pytest.mark.slow] if cid in FULL_ONLY else []
    return pytest.param(cid, id=cid, marks=marks)


@pytest.mark.parametrize("cid", [_param(c) for c in ALL_IDS])
def test_criterion(cid):
    res = run_criterion(cid)
    print("\n" + res.line())
    assert res.passed, res.line()


@pytest.mark.parametrize("mutate", ["dual-direction", "dual-complement"])
def test_a1_detects_mutation(mutate):
    res = a1(mutate)
    print("\n" + res.line())
    assert not res.passed
