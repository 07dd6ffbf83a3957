import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mvbvlab.generators import gen_family  # noqa: E402
from mvbvlab.sequences import ExplicitSequence  # noqa: E402


@pytest.fixture
def harmonic():
    return gen_family("power_p", p=1.0, limit=1 << 20)


@pytest.fixture
def inverse_square():
    return gen_family("power_p", p=2.0, limit=1 << 20)


@pytest.fixture
def constant():
    return ExplicitSequence([0.75] * 200, label="const")


# one PASS/FAIL line per acceptance criterion in the terminal summary

_CRITERIA = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _CRITERIA.setdefault(mark.args[0], {"title": mark.args[1], "tests": {}})
            _CRITERIA[mark.args[0]]["tests"][item.nodeid] = None


def pytest_runtest_logreport(report):
    for entry in _CRITERIA.values():
        if report.nodeid in entry["tests"]:
            prev = entry["tests"][report.nodeid]
            if report.failed:
                entry["tests"][report.nodeid] = "failed"
            elif report.when == "call" and prev is None:
                entry["tests"][report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    ran = {k: v for k, v in _CRITERIA.items() if any(o is not None for o in v["tests"].values())}
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ran):
        entry = ran[cid]
        failed = [nid.split("::")[-1] for nid, o in entry["tests"].items() if o == "failed"]
        status = "FAIL" if failed else "PASS"
        detail = f"  (failing: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"criterion {cid} {status}: {entry['title']}{detail}")
