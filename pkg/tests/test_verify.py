import math

from dephcap.verify import SuiteResult, _suite, run_suites


def test_suite_result_line():
    assert SuiteResult("ssa", True, 0.0, 1e-9, "x").line().startswith("PASS  ssa")
    assert SuiteResult("ssa", False, 1.0, 1e-9).line().startswith("FAIL")


def test_precondition_failure_is_reported():
    def boom():
        raise ValueError("gamma must be >= 0")

    res = _suite("kraus", 1e-10, boom)
    assert not res.passed and math.isnan(res.worst)
    assert "precondition failed" in res.detail


def test_all_suites_pass():
    results = run_suites()
    assert [r.name for r in results] == ["kraus", "ssa", "markov", "dual-path", "concavity", "complementary"]
    for r in results:
        assert r.passed, r.line()
