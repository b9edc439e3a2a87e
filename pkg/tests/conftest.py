import json
from pathlib import Path

import pytest

from netjac.kinetics import Triple, realize_mm
from netjac.network import load_network

NETWORKS = Path(__file__).resolve().parent.parent / "networks"


@pytest.fixture(scope="session")
def networks_dir():
    return NETWORKS


@pytest.fixture(scope="session")
def net1():
    return load_network(NETWORKS / "example1.crn")


@pytest.fixture(scope="session")
def net2():
    return load_network(NETWORKS / "example2.crn")


def _triple(net, name):
    return Triple.from_dict(net, json.loads((NETWORKS / name).read_text()))


@pytest.fixture(scope="session")
def triple1(net1):
    return _triple(net1, "example1_triple.json")


@pytest.fixture(scope="session")
def mmsn(net2):
    t = _triple(net2, "example2_mmsn_triple.json")
    return t, realize_mm(net2, t)


@pytest.fixture(scope="session")
def mmhopf(net2):
    t = _triple(net2, "example2_mmhopf_triple.json")
    return t, realize_mm(net2, t)


# acceptance criteria outcomes, filled in by tests marked with @pytest.mark.criterion
_CRITERIA: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "tests": 0})
    if rep.when == "call":
        entry["tests"] += 1
    if rep.failed:
        entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "PASS" if e["passed"] and e["tests"] else "FAIL"
        terminalreporter.write_line(f"AC{number:>2} {status}  {e['title']}")
