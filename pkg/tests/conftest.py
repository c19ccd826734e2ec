import pytest

# criterion number -> (title, [(part, passed, detail)])
ACCEPTANCE: dict[int, tuple[str, list]] = {}

# a Latin square with identity 0 and two-sided inverses that is not associative
LOOP5 = [
    [0, 1, 2, 3, 4],
    [1, 0, 3, 4, 2],
    [2, 4, 0, 1, 3],
    [3, 2, 4, 0, 1],
    [4, 3, 1, 2, 0],
]


def record(number: int, title: str, part: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE.setdefault(number, (title, []))[1].append((part, bool(passed), detail))


def acceptance_lines() -> list[str]:
    lines = []
    for number in sorted(ACCEPTANCE):
        title, parts = ACCEPTANCE[number]
        ok = all(p for _, p, _ in parts)
        failed = [f"{name}: {detail}" for name, p, detail in parts if not p]
        detail = "; ".join(failed) if failed else "; ".join(f"{name}: {d}" for name, _, d in parts if d)
        lines.append(f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}) - {detail}")
    return lines


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def loop5_text():
    rows = "\n".join(" ".join(map(str, r)) for r in LOOP5)
    return f"order 5\n{rows}\nidentity 0\n"
