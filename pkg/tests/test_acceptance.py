"""One check per acceptance criterion; each prints a PASS/FAIL line with its measured numbers.

Run alone with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
"""
import sys
import time

import pytest

from platelab.verify import VerificationSession, criterion_ids, run_criterion


@pytest.fixture(scope="module")
def session():
    # shared so the criterion-2 sweep is solved once and reused by 3 and 5
    return VerificationSession(seed=0)


@pytest.mark.parametrize("cid", criterion_ids())
def test_criterion(cid, session, capsys):
    t0 = time.perf_counter()
    result = run_criterion(cid, session)
    with capsys.disabled():
        print(f"\n{result.line()} ({time.perf_counter() - t0:.1f} s)")
    assert result.passed, result.detail


if __name__ == "__main__":
    s = VerificationSession(seed=0)
    ok = True
    for cid in criterion_ids():
        res = run_criterion(cid, s)
        print(res.line(), flush=True)
        ok &= res.passed
    sys.exit(0 if ok else 1)
