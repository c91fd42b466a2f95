import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "reduction fidelity",
    2: "oracle dominance",
    3: "subtree near-optimality",
    4: "heuristic ranking",
    5: "cost decomposition",
    6: "checker vs edge enumerator",
    7: "LP export conformance",
    8: "CLI determinism",
}


def pytest_terminal_summary(terminalreporter):
    outcome = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            name = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in name or rep.when not in ("call", "setup"):
                continue
            num = int(name.split("test_criterion_")[1].split("_")[0])
            if status != "passed" or num not in outcome:
                outcome[num] = "PASS" if status == "passed" else "FAIL"
    if not outcome:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        terminalreporter.write_line(f"criterion {num} ({CRITERIA[num]}): {outcome.get(num, 'NOT RUN')}")
