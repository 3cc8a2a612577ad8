from pathlib import Path

import numpy as np
import pytest

from radicalocr import toy
from radicalocr.layouts import default_layouts

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def sample_path():
    return DATA / "sample.dict"


@pytest.fixture(scope="session")
def toy_dict():
    return toy.toy_dictionary()


@pytest.fixture(scope="session")
def radical_set():
    return toy.toy_radical_set()


@pytest.fixture(scope="session")
def layouts():
    return default_layouts()


# -- acceptance summary ------------------------------------------------------

_criteria = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or (call.when != "call" and call.excinfo is None):
        return
    number, title = mark.args
    entry = _criteria.setdefault(number, {"title": title, "ok": True, "seconds": 0.0, "tests": 0})
    entry["seconds"] += call.duration
    entry["tests"] += call.when == "call"
    if call.excinfo is not None and not call.excinfo.errisinstance(pytest.skip.Exception):
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        verdict = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(
            f"[{verdict}] criterion {number}: {e['title']} ({e['tests']} tests, {e['seconds']:.2f}s)"
        )
