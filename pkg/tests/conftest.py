import os

import pytest

# criterion id -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def extended_enabled() -> bool:
    return os.environ.get("SORTNET_EXTENDED", "").strip() in ("1", "true", "yes")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'} | {detail}")


class _Criterion:
    def __init__(self, num: int):
        self.num = num
        self.notes: list[str] = []

    def note(self, text: str) -> None:
        self.notes.append(text)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        detail = "; ".join(self.notes)
        if not ok:
            reason = str(exc).splitlines()[0] if str(exc) else exc_type.__name__
            detail = f"{detail}; failed: {reason}" if detail else f"failed: {reason}"
        ACCEPTANCE[self.num] = (ok, detail)
        print(f"criterion {self.num}: {'PASS' if ok else 'FAIL'} | {detail}")
        return False


@pytest.fixture
def criterion():
    """``with criterion(3) as c: ...``; records one PASS/FAIL line per criterion."""
    return _Criterion
