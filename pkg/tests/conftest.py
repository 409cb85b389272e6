"""Prints the acceptance verdicts at the end of the session."""

VERDICTS: dict[int, list[tuple[bool, str]]] = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok = all(v for v, _ in VERDICTS[n])
        detail = " | ".join(d for _, d in VERDICTS[n])
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
