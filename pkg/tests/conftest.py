"""Shared pytest wiring: a terminal summary for the acceptance suite."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    tr = terminalreporter
    results = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in tr.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            name = nodeid.split("::")[-1]
            # a FAIL in any phase wins over a PASS recorded for another phase
            if results.get(name) != "FAIL":
                results[name] = label
    if results:
        tr.write_sep("=", "acceptance criteria")
        for name in sorted(results):
            tr.write_line(f"{results[name]}  {name}")
