import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_criteria: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    entry = _criteria.setdefault(props["criterion"], {"passed": True})
    entry.update(props)
    if report.failed:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        verdict = "PASS" if entry["passed"] else "FAIL"
        timing = f"{entry['elapsed']:.2f}s" if "elapsed" in entry else "n/a"
        line = f"[{verdict}] criterion {number:2d}: {entry['title']} ({timing}, limit {entry['limit']}s)"
        if entry.get("detail"):
            line += f" - {entry['detail']}"
        terminalreporter.write_line(line)
