import numpy as np
import pytest

from mstruct.synthgen import FixtureSpec, generate
from mstruct.voxcore import VoxelVolume


def line_volume(values, n_phases=2):
    """Volume of shape (n, 1, 1) from a list of labels along X."""
    return VoxelVolume(np.array(values, dtype=np.uint8).reshape(-1, 1, 1), n_phases=n_phases)


@pytest.fixture
def bernoulli_8():
    return [generate(FixtureSpec("bernoulli", (8, 8, 8), p=0.5), seed) for seed in range(20)]


# ---- acceptance bookkeeping: one PASS/FAIL line per criterion

_ACCEPTANCE: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        number, title = mark.args
        entry = _ACCEPTANCE.setdefault(number, {"title": title, "failed": [], "passed": 0})
        if rep.passed:
            entry["passed"] += 1
        else:
            entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        entry = _ACCEPTANCE[number]
        status = "FAIL" if entry["failed"] else "PASS"
        line = f"criterion {number}: {status}  {entry['title']}"
        if entry["failed"]:
            line += f"  (failed: {', '.join(entry['failed'])})"
        terminalreporter.write_line(line)
