import numpy as np
import pytest

from corrnet import kernels
from corrnet.ingest import AssetRecord, Major, Minor, ReturnPanel, SectorLabel

TECH = SectorLabel(Major.TECHNOLOGY)
OIL = SectorLabel(Major.BASIC_MATERIALS, Minor.OIL)
MATERIALS = SectorLabel(Major.BASIC_MATERIALS, Minor.OTHER_MATERIALS)
REAL_ESTATE = SectorLabel(Major.FINANCE, Minor.REAL_ESTATE)
OTHER_FINANCE = SectorLabel(Major.FINANCE, Minor.OTHER_FINANCE)


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    impl = kernels.backends()[request.param]
    monkeypatch.setattr(kernels, "pairwise_pearson", impl.pairwise_pearson)
    return request.param


def make_panel(returns, start="2003-01-02", ids=None, sectors=None):
    returns = np.asarray(returns, dtype=float)
    if returns.ndim == 1:
        returns = returns[:, None]
    T, N = returns.shape
    dates = np.busday_offset(np.datetime64(start, "D"), np.arange(T), roll="forward").astype("datetime64[D]")
    ids = ids or [f"A{i:02d}" for i in range(N)]
    sectors = sectors or [None] * N
    return ReturnPanel(dates, returns, tuple(AssetRecord(a, s) for a, s in zip(ids, sectors)))


# -- acceptance summary -----------------------------------------------------

_acceptance = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, title = mark.args
    failed = rep.failed or (rep.when == "call" and rep.outcome != "passed")
    prev = _acceptance.get(number)
    if rep.when == "call" or failed:
        ok = not failed and (prev is None or prev[1])
        _acceptance[number] = (title, ok, rep.duration if rep.when == "call" else 0.0)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        title, ok, secs = _acceptance[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title} ({secs:.2f} s)")
