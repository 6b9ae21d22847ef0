import pytest

from gencumul.cumul import CumulTask
from gencumul.engine import Engine
from gencumul.interval import make_interval


def task(eng, name, s, d, e, c, optional=False):
    """A cumulative task with its own variables; ``c`` is an int or a range."""
    iv = make_interval(eng, s, d, e, optional=optional, name=name)
    lo, hi = (c, c) if isinstance(c, int) else c
    return CumulTask(iv, eng.int_var(lo, hi, name=f"{name}.c"))


def fixed(eng, name, s, e, c):
    return task(eng, name, (s, s), (e - s, e - s), (e, e), c)


def state(t):
    iv = t.iv
    return {
        "p": iv.presence.value,
        "s": (iv.start.lo, iv.start.hi),
        "d": (iv.duration.lo, iv.duration.hi),
        "e": (iv.end.lo, iv.end.hi),
        "c": (t.c.lo, t.c.hi),
    }


def profile_tasks(eng):
    """Three tasks: A and B required, C optional, capacity [0, 1] in the examples."""
    a = task(eng, "A", (0, 1), (3, 4), (3, 4), (1, 2))
    b = task(eng, "B", (2, 4), (3, 4), (5, 7), 2)
    c = task(eng, "C", (3, 8), (1, 3), (4, 9), (-2, 1), optional=True)
    return [a, b, c]


def height_tasks(eng, with_b=True):
    ts = [fixed(eng, "A", 4, 12, 2)]
    if with_b:
        ts.append(fixed(eng, "B", 6, 10, -1))
    ts.append(task(eng, "C", (0, 10), (6, 6), (6, 16), (1, 4)))
    return ts


def length_tasks(eng):
    return [
        fixed(eng, "A", 3, 6, 3),
        fixed(eng, "B", 10, 14, 3),
        task(eng, "C", (0, 14), (2, 16), (2, 16), 2),
    ]


@pytest.fixture
def eng():
    return Engine()


@pytest.fixture
def report(request):
    """Record one pass/fail line per acceptance criterion for the summary."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        lines.append((number, line))
        return ok

    return record


_LINES = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
