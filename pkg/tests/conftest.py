CRITERIA: dict[int, str] = {}


def report(num: int, ok: bool, detail: str) -> bool:
    CRITERIA[num] = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[num])
