import re
from importlib import resources

import pytest

from qcl.syntax import parse

PROGRAMS = resources.files("qcl") / "programs"
CORPUS = sorted(p.name for p in PROGRAMS.iterdir() if p.name.endswith(".qcl"))

_criteria = {}


def load_program(name):
    return parse((PROGRAMS / name).read_text())


@pytest.fixture(scope="session")
def program():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_program(name)
        return cache[name]

    return get


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = re.match(r"test_criterion_(\d+)", item.name)
    if not m:
        return
    n = int(m.group(1))
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        ok = rep.passed
        prev = _criteria.get(n, True)
        _criteria[n] = prev and ok


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if _criteria[n] else 'FAIL'}")
