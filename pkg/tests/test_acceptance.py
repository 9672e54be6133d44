"""Acceptance suite: every criterion at its stated tolerance and runtime.

The whole suite runs once per session; one pass/fail line per criterion is
written to the terminal, then each criterion is asserted separately.
"""

from __future__ import annotations

import pytest

from skewlab.acceptance import CRITERIA, run_suite

NUMBERS = sorted(CRITERIA) + [17]


@pytest.fixture(scope="module")
def results(request):
    tr = request.config.pluginmanager.getplugin("terminalreporter")
    echo = (lambda s: tr.write_line(s)) if tr is not None else print
    if tr is not None:
        tr.write_line("")
    res = run_suite(NUMBERS, threads=1, other_threads=8, echo=echo)
    return {r.number: r for r in res}


@pytest.mark.parametrize("number", NUMBERS)
def test_criterion(results, number):
    r = results[number]
    if not r.passed:
        pytest.fail(r.line(), pytrace=False)
