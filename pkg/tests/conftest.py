import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_strong_matrix(n: int, rng: np.random.Generator, density: float = 0.4, loops: bool = True) -> np.ndarray:
    """Random weight matrix (nan = no arc) whose digraph is strongly connected."""
    w = np.where(rng.random((n, n)) < density, rng.uniform(0.0, 100.0, (n, n)), np.nan)
    if not loops:
        np.fill_diagonal(w, np.nan)
    perm = rng.permutation(n)
    for k in range(n):  # hamiltonian cycle guarantees strong connectivity
        a, b = perm[k], perm[(k + 1) % n]
        if a != b and np.isnan(w[a, b]):
            w[a, b] = rng.uniform(0.0, 100.0)
    if n == 1:
        w[0, 0] = rng.uniform(0.0, 100.0)
    return w


# --------------------------------------------------------------------------- acceptance summary

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = _markers.get(report.nodeid)
    if marker is None:
        return
    number, title = marker
    _CRITERIA[number] = (title, "PASS" if report.passed else "FAIL")


_markers: dict[str, tuple[int, str]] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _markers[item.nodeid] = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, verdict = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {title}")
