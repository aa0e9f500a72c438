import numpy as np
import pytest

_ACCEPTANCE: list[tuple[str, str]] = []


def planted(rng, m, n, k):
    """Random m x n matrix of rank k (almost surely)."""
    return rng.standard_normal((m, k)) @ rng.standard_normal((n, k)).T


def capturing_indices(rng, dim, k, extra=0):
    """k distinct generic indices plus ``extra`` random ones (repeats allowed)."""
    base = rng.choice(dim, size=k, replace=False).tolist()
    return base + rng.integers(0, dim, size=extra).tolist()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _ACCEPTANCE.append((marker.args[0], "PASS" if rep.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in sorted(_ACCEPTANCE, key=lambda x: int(x[0].split()[0][2:])):
        terminalreporter.write_line(f"[{status}] {label}")
