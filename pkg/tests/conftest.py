import warnings

import numpy as np
import pytest

from propphase.errors import SeriesTruncationWarning


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def _quiet_series_warnings():
    # the truncated Construction III series warns by design at large |t x|
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SeriesTruncationWarning)
        yield


ACCEPTANCE = {}


def record(name, ok, detail):
    """Store one acceptance line; printed in the terminal summary."""
    ACCEPTANCE[name] = (bool(ok), detail)
    print(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda k: int(k[2:].split()[0])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}")
