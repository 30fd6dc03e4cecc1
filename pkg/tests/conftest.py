import pytest

CRITERIA = {
    1: "two-by-two condition number oracles",
    2: "limiting length and area ratios",
    3: "real-shift tail dominance",
    4: "complex-shift exponent",
    5: "centered Gaussian exponent for k = 2",
    6: "gap bound and gap certificate",
    7: "mean condition number sums",
    8: "resolvent corner identities",
    9: "principal submatrix bound",
    10: "bounded-rank inclusion",
    11: "Gaussian norm moment",
    12: "bilinear form anticoncentration and dominance",
    13: "thread-count reproducibility",
}

_outcomes = {}



@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    if rep.when == "call" or rep.failed or rep.skipped:
        ok = rep.passed if rep.when == "call" else False
        prev = _outcomes.get(n, True)
        _outcomes[n] = prev and ok


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, name in CRITERIA.items():
        if n not in _outcomes:
            status = "NOT RUN"
        else:
            status = "PASS" if _outcomes[n] else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {status:7s} {name}")
