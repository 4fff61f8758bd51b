import pytest

_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.get_closest_marker("acceptance") is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        detail = dict(item.user_properties).get("detail", "")
        _results[item.name] = (doc, rep.passed, rep.duration, detail)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in sorted(_results):
        doc, passed, dur, detail = _results[name]
        line = f"{'PASS' if passed else 'FAIL'}  {doc}  [{dur:.2f} s]"
        if detail:
            line += f"  {detail}"
        tr.write_line(line)
