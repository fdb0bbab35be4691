import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_VERDICTS = {}


@pytest.fixture
def record_verdict(capsys):
    def record(criterion, ok, detail):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
        _VERDICTS[criterion] = line
        with capsys.disabled():
            print(f"\n{line}")

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[key])
