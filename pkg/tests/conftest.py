from importlib.resources import files
from pathlib import Path

import pytest

from slearner.heaplang import parse

GOLDEN = Path(__file__).parent / "golden"
CORPUS = files("slearner") / "corpus"
CORPUS_NAMES = sorted(p.name[:-3] for p in CORPUS.iterdir() if p.name.endswith(".hl"))

NODE_SCHEMA = {"Node": (("data", "int"), ("next", "Node"))}


def corpus_source(name: str) -> str:
    return (CORPUS / f"{name}.hl").read_text()


def corpus_program(name: str):
    return parse(corpus_source(name))


@pytest.fixture(scope="session")
def fig1():
    return corpus_program("fig1")


@pytest.fixture(scope="session")
def golden():
    return GOLDEN


_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    n, title = mark.args
    entry = _criteria.setdefault(n, {"title": title, "ok": True, "time": 0.0, "tests": 0})
    if rep.when == "call":
        entry["time"] += rep.duration
        entry["tests"] += 1
    if rep.failed:
        entry["ok"] = False


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(
            f"criterion {n}: {status} {e['title']} ({e['tests']} tests, {e['time']:.2f} s)")
