import pytest

_results: list[tuple[int, str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        _results.append((marker.kwargs["criterion"], marker.kwargs["title"], "PASS" if rep.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number, title, verdict, detail in sorted(_results):
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {title}" + (f" ({detail})" if detail else ""))
