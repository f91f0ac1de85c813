import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from ruelle_lab import filterlib
from ruelle_lab.lpoly import LaurentPoly

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

FILTER_DIR = Path(__file__).resolve().parent.parent / "filters"


def lattice_filter(angles) -> filterlib.FilterSpec:
    """Real two-channel paraunitary lattice filter at scale 2.

    The polyphase pair ``(H0, H1)`` is the first row of a product of plane
    rotations separated by ``diag(1, z)`` delays, so ``|H0|**2 + |H1|**2 = 1``
    on the circle; the last angle is chosen so that the angles sum to
    ``pi/4``, which gives ``m0(1) = sqrt(2)``.
    """
    th = list(angles) + [math.pi / 4 - sum(angles)]
    h0, h1 = np.array([math.cos(th[0])]), np.array([math.sin(th[0])])
    for t in th[1:]:
        h1d = np.concatenate([[0.0], h1])
        h0p = np.concatenate([h0, [0.0]])
        c, s = math.cos(t), math.sin(t)
        h0, h1 = c * h0p - s * h1d, s * h0p + c * h1d
    m = np.zeros(2 * len(h0))
    m[0::2], m[1::2] = h0, h1
    return filterlib.validate(filterlib.FilterSpec(2, LaurentPoly.from_dense(m, 0), "lattice"))


@pytest.fixture
def filter_dir():
    return FILTER_DIR


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run
# ---------------------------------------------------------------------------

_CRITERIA: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion covered by a test")


def pytest_runtest_logreport(report):
    label = getattr(report, "criterion", None)
    if label is None:
        return
    entry = _CRITERIA.setdefault(label, {"passed": True, "seen": False})
    if report.when == "call":
        entry["seen"] = True
    if report.failed or (report.when == "setup" and report.skipped):
        entry["passed"] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA):
        e = _CRITERIA[label]
        ok = e["passed"] and e["seen"]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}")
