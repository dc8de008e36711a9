"""Acceptance criteria at their stated tolerances, one test per criterion.

Each test prints a single PASS/FAIL line (visible in ``pytest -v`` output)
and then asserts every row.
"""
import pytest

from quenchlab import acceptance


def _run(k, capsys):
    rows = acceptance.run_criterion(k)
    ok = all(r.verdict for r in rows)
    bad = [r.test_id for r in rows if not r.verdict]
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'} "
              f"({sum(r.verdict for r in rows)}/{len(rows)} rows)"
              + (f" failing: {', '.join(bad)}" if bad else ""))
    for r in rows:
        assert r.verdict, (r.test_id, r.lhs, r.rhs, r.margin, r.tol)


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 6, 7, 8, 11])
def test_criterion(k, capsys):
    _run(k, capsys)


@pytest.mark.slow
@pytest.mark.parametrize("k", [9, 10])
def test_criterion_mcmc(k, capsys):
    _run(k, capsys)
