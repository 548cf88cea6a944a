import hypothesis
import numpy as np
import pytest

from ellipspec.rng import stream

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

# (criterion, passed, detail) lines collected by test_acceptance.py
ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def rng():
    return stream(12345, "tests")


@pytest.fixture
def report_criterion():
    def record(label: str, checks: dict[str, tuple[bool, str]]) -> None:
        ok = all(passed for passed, _ in checks.values())
        detail = "; ".join(f"{name}: {text}{'' if passed else ' [FAIL]'}" for name, (passed, text) in checks.items())
        ACCEPTANCE.append((label, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(ACCEPTANCE, key=lambda r: int(r[0].split()[0][1:])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
