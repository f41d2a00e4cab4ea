from henonlab.selftest import CheckResult, run_all


def test_self_checks_pass():
    results = run_all()
    assert len(results) == 5
    for res in results:
        assert res.passed, res.line()


def test_check_line_format():
    assert CheckResult("x", 2.0, 1.0).line().startswith("FAIL x")
    assert CheckResult("x", 0.5, 1.0).line().startswith("PASS x")
