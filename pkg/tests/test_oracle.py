import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gencumul.dzn import ParseError
from gencumul.oracle import (
    Counterexample,
    FixedTask,
    TaskDomain,
    check_assignment,
    check_fixed_equivalence,
    differential_test,
    enumerate_all,
    random_instance,
    run_trial,
    solution_mask,
    timeline_verdict,
)
from gencumul.timetable import ALL_RULES, FORBID_ONLY

mk = FixedTask.make


def test_check_assignment_examples():
    assert check_assignment([mk(True, 2, 3, 3)], 0, 3)
    assert not check_assignment([mk(True, 2, 3, 3)], 0, 2)
    # +2 and -3 overlap on [4, 6)
    assert not check_assignment([mk(True, 2, 4, 2), mk(True, 4, 4, -3)], 0, 5)
    # absent and zero-length tasks do not count
    assert check_assignment([mk(False, 0, 3, 9), mk(True, 1, 0, 9)], 0, 1)
    # the range only binds where some task runs
    assert check_assignment([mk(True, 0, 1, 5), mk(True, 3, 1, 5)], 5, 5)


def test_fixed_task_validation():
    with pytest.raises(ValueError):
        FixedTask(True, 0, 2, 3, 1)
    with pytest.raises(ValueError):
        FixedTask.make(True, 0, -1, 1)


def test_options():
    dom = TaskDomain(None, (0, 1), (1, 2), (1, 2), (1, 1))
    assert dom.options() == [None, (0, 1, 1), (0, 2, 1), (1, 1, 1)]
    assert TaskDomain(False, (0, 1), (1, 2), (1, 2), (1, 1)).options() == [None]
    assert not TaskDomain(True, (0, 1), (1, 2), (1, 2), (1, 1)).allows(None)
    assert TaskDomain.from_row(dom.to_row()) == dom


def test_enumerate_small():
    a = TaskDomain(True, (0, 1), (2, 2), (2, 3), (2, 2))
    b = TaskDomain(None, (0, 2), (1, 1), (1, 3), (1, 1))
    sols = enumerate_all([a, b], 0, 2)
    # b absent with a anywhere, or b clear of a
    assert len(sols) == 2 + 2
    for sol in sols:
        assert check_assignment(sol, 0, 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_enumeration_ignores_task_order(seed):
    rng = np.random.default_rng(seed)
    domains, lo, hi = random_instance(rng, max_tasks=4, max_product=3000)
    perm = rng.permutation(len(domains))
    a = len(enumerate_all(domains, lo, hi))
    b = len(enumerate_all([domains[i] for i in perm], lo, hi))
    assert a == b


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mask_matches_direct_check(seed):
    rng = np.random.default_rng(seed)
    domains, lo, hi = random_instance(rng, max_tasks=3, max_product=500)
    options, mask = solution_mask(domains, lo, hi)
    for idx in np.ndindex(*mask.shape):
        chosen = [options[i][k] for i, k in enumerate(idx)]
        tasks = [mk(True, s, d, c) for s, d, c in (o for o in chosen if o is not None)]
        assert mask[idx] == check_assignment(tasks, lo, hi)


def test_enumeration_limit():
    wide = TaskDomain(True, (0, 40), (0, 40), (0, 80), (-3, 3))
    with pytest.raises(ValueError):
        solution_mask([wide] * 4, 0, 1, limit=1000)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.integers(0, 8), st.integers(0, 4), st.integers(-3, 3)), max_size=5),
       st.integers(-4, 2), st.integers(0, 6))
def test_timeline_agrees_with_oracle(rows, lo, hi):
    hi = max(lo, hi)
    tasks = [mk(*r) for r in rows]
    assert timeline_verdict(tasks, lo, hi) == check_assignment(tasks, lo, hi)


def test_differential_smoke():
    cex, stats = differential_test(5, 300)
    assert cex is None
    assert stats["trials"] == 300
    assert stats["optional"] >= 0.25 * stats["tasks"]
    assert stats["pruned"] > 0 and stats["failed"] > 0


def test_fixed_equivalence_smoke():
    assert check_fixed_equivalence(3, 500) is None


def test_counterexample_round_trip():
    domains = [
        TaskDomain(None, (0, 3), (1, 2), (1, 5), (-2, 1)),
        TaskDomain(True, (1, 1), (2, 2), (3, 3), (2, 2)),
    ]
    cex = Counterexample(domains, 0, 1, FORBID_ONLY, "prune-soundness", detail="one\ntwo")
    text = cex.to_text()
    assert text.startswith("% violated: prune-soundness\n% one\n% two\n")
    back = Counterexample.from_text(text)
    assert back.domains == domains and (back.c_lo, back.c_hi) == (0, 1)
    assert back.rules == FORBID_ONLY
    assert back.replay() is None


def test_counterexample_bad_file():
    with pytest.raises(ParseError):
        Counterexample.from_text("n_tasks = 1;")
    with pytest.raises(ParseError):
        Counterexample.from_text("cap_lo = 0; cap_hi = 1; rules = [1,1,1]; tasks = [| 5, 0 |];")


def test_run_trial_flags_a_broken_filter(monkeypatch):
    # a filter that always fails must be caught on a satisfiable instance
    import gencumul.oracle as oracle
    from gencumul.engine import Inconsistency

    def broken(*args, **kwargs):
        raise Inconsistency("broken")

    monkeypatch.setattr(oracle, "timetable_filter", broken)
    domains = [TaskDomain(True, (0, 1), (1, 1), (1, 2), (1, 1))]
    cex = run_trial(domains, 0, 1, ALL_RULES)
    assert cex is not None and cex.prop == "fail-soundness"
    assert domains[0].allows(cex.witness[0])
