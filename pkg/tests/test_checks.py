import pytest

from biharmwave import checks


@pytest.mark.parametrize("name", sorted(checks.SUITES))
def test_suite_passes(name):
    results = checks.SUITES[name]()
    assert results
    for r in results:
        assert r.passed, r.line()


def test_line_format():
    assert checks.CheckResult("x", True, 1e-14, 1e-12).line() == "PASS x: 1.000e-14 (limit 1.0e-12)"
    assert checks.CheckResult("y", False, 2.0, 1.0).line().startswith("FAIL y")


def test_run_all_collects_every_suite():
    assert len(checks.run_all()) == sum(len(s()) for s in checks.SUITES.values())
