"""Shared pytest hooks: print a one-line verdict per acceptance criterion."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[str, str] = {}
    for category, label in (("passed", "PASS"), ("failed", "FAIL"),
                            ("error", "FAIL"), ("skipped", "SKIP")):
        for rep in terminalreporter.stats.get(category, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion" not in nodeid:
                continue
            if category == "passed" and getattr(rep, "when", "call") != "call":
                continue
            name = nodeid.split("::")[-1]
            if outcomes.get(name) != "FAIL":
                outcomes[name] = label
    if not outcomes:
        return
    try:
        from test_acceptance import RESULTS
    except Exception:
        RESULTS = {}
    terminalreporter.section("acceptance criteria")
    for name in sorted(outcomes):
        detail = RESULTS.get(name, "")
        suffix = f" — {detail}" if detail else ""
        terminalreporter.write_line(f"[{outcomes[name]}] {name}{suffix}")
