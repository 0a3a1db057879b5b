import re

_CRITERIA: dict[int, list[str]] = {}
_TITLES = {
    1: "dependency-problem elimination (x - x)",
    2: "conditional-rewrite tightening (x+y)/(x+y+1)",
    3: "multi-expression meet 1 - 2y/(x+y)",
    4: "x/(x+y) pair",
    5: "Krawczyk rediscovery",
    6: "soundness suite over the corpus",
    7: "monotone narrowing over the corpus",
    8: "ruleset soundness",
    9: "determinism and budget monotonicity",
    10: "performance envelope",
}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    if report.when == "call" or report.outcome != "passed":
        _CRITERIA.setdefault(int(m.group(1)), []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_TITLES):
        outcomes = _CRITERIA.get(n)
        if outcomes is None:
            verdict = "NOT RUN"
        elif all(o == "passed" for o in outcomes):
            verdict = "PASS"
        else:
            verdict = "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {verdict:7s} {_TITLES[n]}")
