import pytest

from edgemask.synthcorpus import generate_corpus

# filled by test_acceptance.py: criterion number -> (passed, summary line)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def small_corpus():
    return generate_corpus(6, seed=5)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n}. {line}")
