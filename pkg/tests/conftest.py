import collections

import pytest

_CRITERIA = collections.OrderedDict()


class _Recorder:
    def __call__(self, number, title, ok, detail=""):
        entry = _CRITERIA.setdefault(number, {"title": title, "checks": []})
        entry["checks"].append((bool(ok), detail))
        return bool(ok)


@pytest.fixture
def criterion():
    """Record a named acceptance check; the session prints one line each."""
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        ok = all(c[0] for c in entry["checks"])
        details = "; ".join(("" if c[0] else "FAILED ") + c[1]
                            for c in entry["checks"] if c[1])
        tr.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  "
                      f"{entry['title']}: {details}")
