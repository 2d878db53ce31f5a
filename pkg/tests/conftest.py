import pytest

from precession import _backend

BACKENDS = ["numba", "numpy"] if _backend.HAVE_NUMBA else ["numpy"]


@pytest.fixture(params=BACKENDS)
def backend(request):
    """Run the test once per kernel backend, restoring the previous choice."""
    prev = _backend.backend_name()
    _backend.set_backend(request.param)
    yield request.param
    _backend.set_backend(prev)


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(20240611)


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    mark = getattr(report, "_acceptance", None)
    if mark is None:
        return
    n, title = mark
    failed = report.failed
    prev = _ACCEPTANCE.get(n, (title, "PASS"))[1]
    if report.when == "call" or failed:
        _ACCEPTANCE[n] = (title, "FAIL" if failed or prev == "FAIL" else "PASS")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        outcome.get_result()._acceptance = (mark.kwargs["n"], mark.kwargs["title"])


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        title, verdict = _ACCEPTANCE[n]
        terminalreporter.write_line(f"{verdict} criterion {n:2d}: {title}")
