"""Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

LINES: dict[int, str] = {}


def record(number: int, title: str, checks: dict[str, bool], detail: str = "") -> list[str]:
    failed = [name for name, ok in checks.items() if not ok]
    status = "PASS" if not failed else "FAIL"
    line = f"criterion {number:2d} [{status}] {title}"
    if detail:
        line += f" | {detail}"
    if failed:
        line += f" | failing: {'; '.join(failed)}"
    LINES[number] = line
    print(line)
    return failed
