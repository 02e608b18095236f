import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addoption("--long", action="store_true", default=False,
                     help="run the high-dimensional quadrature checks (minutes to tens of minutes)")


def pytest_configure(config):
    config.addinivalue_line("markers", "long: needs --long")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--long"):
        return
    skip = pytest.mark.skip(reason="needs --long")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: dict[str, str] = {}
ACCEPTANCE_KEYS = ("1", "2", "3", "4", "5", "6", "6 (n=3)", "7", "8", "9", "10",
                   "10 (degenerate guard)", "11", "12")
LONG_KEYS = ("6 (n=3)", "10", "11")


@pytest.fixture
def criterion():
    def record(key, ok, detail):
        line = f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[key] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in ACCEPTANCE_KEYS:
        why = " (needs --long)" if key in LONG_KEYS and not terminalreporter.config.getoption(
            "--long") else ""
        terminalreporter.write_line(ACCEPTANCE.get(key, f"criterion {key}: not run{why}"))
