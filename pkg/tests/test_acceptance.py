"""Acceptance criteria 1-10, one pass/fail line each in the terminal summary."""

import statistics
import time

import numpy as np

from conftest import height_tasks, length_tasks, profile_tasks, state
from gencumul.cumul import flatten, pulse, step_at_end, step_at_start
from gencumul.engine import Engine, Inconsistency
from gencumul.instances import generate_mesp
from gencumul.interval import make_interval
from gencumul.models import build_mesp, build_rcpsp_cpr, build_smic, check_solution
from gencumul.oracle import build_tasks, check_fixed_equivalence, differential_test, random_instance
from gencumul.timetable import FORBID_ONLY, GeneralizedCumulative, initialize_timeline, timetable_filter
from small import brute_rcpsp, brute_smic, random_rcpsp, random_smic

TABLE = [(0, 0, 2, 0), (1, 1, 2, 1), (2, 1, 4, 1), (3, -2, 5, 0), (4, 0, 3, 1), (5, -2, 3, 0), (7, -2, 1, 0), (9, 0, 0, 0)]


def median_time(fn, setup, reps=7):
    times = []
    for _ in range(reps):
        args = setup()
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


def test_c1_flatten_golden(report):
    def setup():
        eng = Engine()
        a = make_interval(eng, (0, 4), (2, 3), (2, 7), name="A")
        b = make_interval(eng, (1, 5), (2, 2), (3, 7), name="B")
        c = make_interval(eng, (0, 3), (1, 4), (1, 7), name="C")
        f = step_at_start(a, 2) - (pulse(b, 1) + step_at_end(c, 1))
        return f, eng, 20, (a, b, c)

    def run(f, eng, horizon, ivs):
        return flatten(f, eng, horizon), ivs

    (tasks, (a, b, c)), secs = median_time(run, setup)
    heights = [(t.c.lo, t.c.hi) for t in tasks]
    shared = (
        tasks[0].iv.start is a.start
        and tasks[0].iv.presence is a.presence
        and tasks[1].iv is b
        and tasks[2].iv.start is c.end
        and tasks[2].iv.presence is c.presence
        and tasks[0].iv.end.value == tasks[2].iv.end.value == 20
    )
    ok = heights == [(2, 2), (-1, -1), (-1, -1)] and shared and secs < 1e-3
    report(1, ok, f"tasks {{(A',2),(B,-1),(C',-1)}} shared={shared} median {secs * 1e6:.0f} us")
    assert ok


def test_c2_timeline_golden(report):
    def setup():
        eng = Engine()
        tasks = profile_tasks(eng)
        assert eng.fixpoint()
        return (tasks,)

    tl, secs = median_time(lambda tasks: initialize_timeline(tasks, 0, 1), setup)
    ok = tl.as_tuples() == TABLE and secs < 1e-3
    report(2, ok, f"{len(tl)} time points, exact={tl.as_tuples() == TABLE}, median {secs * 1e6:.0f} us")
    assert ok


def test_c3_propagation_golden(report):
    eng = Engine()
    a, b, c = profile_tasks(eng)
    assert eng.fixpoint()
    timetable_filter([a, b, c], 0, 1)
    assert eng.fixpoint()
    got = [state(a), state(b), state(c)]
    want = [
        {"p": True, "s": (0, 1), "d": (3, 4), "e": (3, 4), "c": (1, 1)},
        {"p": True, "s": (3, 4), "d": (3, 4), "e": (6, 7), "c": (2, 2)},
        {"p": True, "s": (3, 4), "d": (1, 3), "e": (5, 7), "c": (-2, -1)},
    ]
    ok = got == want
    report(3, ok, "A c=1; B s=[3,4] e=[6,7]; C present s=[3,4] e=[5,7] c=[-2,-1]" if ok else f"got {got}")
    assert ok


def _post(builder, rules, **kw):
    """Post the example tasks under capacity 4 and return the last one after fixpoint."""
    eng = Engine()
    tasks = builder(eng, **kw)
    prop = GeneralizedCumulative(eng, tasks, -10**6, 4, rules=rules, lo_sentinel=True)
    eng.post(prop)
    assert eng.fixpoint()
    return tasks[-1]


def strength_examples(rules):
    return (
        _post(height_tasks, rules).c.hi,
        _post(height_tasks, rules, with_b=False).c.hi,
        _post(length_tasks, rules).iv.d_max,
    )


def test_c4_filtering_strength(report):
    h, h_without_b, d = strength_examples("auto")
    ok = (h, h_without_b, d) == (3, 2, 4)
    report(4, ok, f"height {h} (want 3), without B {h_without_b} (want 2), length {d} (want 4)")
    assert ok


def test_c5_soundness_suite(report):
    t0 = time.perf_counter()
    cex, stats = differential_test(20240, 10_000)
    secs = time.perf_counter() - t0
    share = stats["optional"] / stats["tasks"]
    ok = cex is None and stats["trials"] >= 10_000 and share >= 0.25 and secs < 60
    detail = f"{stats['trials']} trials, {share:.0%} optional, {stats['pruned']} pruned, {stats['failed']} failed, {secs:.1f} s"
    if cex is not None:
        detail += f"\n{cex.to_text()}"
    report(5, ok, detail)
    assert ok


def test_c6_checker_equivalence(report):
    mismatch = check_fixed_equivalence(60606, 10_000)
    ok = mismatch is None
    report(6, ok, "10000 fixed instances, 0 discrepancies" if ok else f"mismatch {mismatch}")
    assert ok


def test_c7_small_optimality(report):
    rng = np.random.default_rng(7007)
    t0 = time.perf_counter()
    wrong = []
    feasible = {"smic": 0, "rcpsp-cpr": 0}
    for name, gen, brute, build in (
        ("smic", random_smic, brute_smic, build_smic),
        ("rcpsp-cpr", random_rcpsp, brute_rcpsp, build_rcpsp_cpr),
    ):
        for _ in range(60):
            inst = gen(rng)
            stats, sol = build(inst).solve()
            expected = brute(inst)
            got = stats.best_objective if stats.status == "optimal" else None
            if stats.status not in ("optimal", "infeasible") or got != expected:
                wrong.append((name, inst, expected, stats.status, got))
            elif sol is not None and check_solution(name, inst, sol)[0]:
                wrong.append((name, inst, "invalid solution", sol))
            feasible[name] += expected is not None
    secs = time.perf_counter() - t0
    ok = not wrong and secs < 120
    report(7, ok, f"60 SMIC + 60 RCPSP-CPR, feasible {feasible}, {len(wrong)} discrepancies, {secs:.1f} s")
    assert ok, wrong[:3]


# sizes and seeds fixed up front
MESP_RUNS = [(n, (0, 1, 2)) for n in (6, 50, 400, 3200)]


def test_c8_mesp_zero_backtracks(report):
    results = []
    for n, seeds in MESP_RUNS:
        for seed in seeds:
            inst = generate_mesp(n, seed)
            t0 = time.perf_counter()
            stats, sol = build_mesp(inst).solve()
            secs = time.perf_counter() - t0
            valid = sol is not None and not check_solution("mesp", inst, sol)[0]
            results.append((n, seed, stats.status, stats.backtracks, valid, secs))
    ok = all(status == "feasible" and bt == 0 and valid for _, _, status, bt, valid, _ in results)
    detail = ", ".join(f"n={n}/s{seed}: {bt} bt{'' if valid else ' INVALID'} ({secs:.1f} s)" for n, seed, _, bt, valid, secs in results)
    report(8, ok, detail)
    assert ok, detail


def test_c9_propagation_scaling(report):
    times = {}
    for n in (400, 800, 1600):
        model = build_mesp(generate_mesp(n, 0))
        eng = model.engine
        assert eng.fixpoint()
        prop = model.resources[0]
        prop.incremental = False
        samples = []
        for _ in range(5):
            eng.save()
            t0 = time.perf_counter()
            try:
                prop.propagate()
            except Inconsistency:
                pass
            samples.append(time.perf_counter() - t0)
            eng.restore()
        times[n] = statistics.median(samples)
    ratios = [times[800] / times[400], times[1600] / times[800]]
    ok = all(r <= 5 for r in ratios)
    ms = ", ".join(f"n={n}: {t * 1000:.1f} ms" for n, t in times.items())
    report(9, ok, f"{ms}; doubling ratios {ratios[0]:.2f}, {ratios[1]:.2f} (limit 5)")
    assert ok


def test_c10_rule_ablation(report):
    forbid = strength_examples("forbid-only")
    auto = strength_examples("auto")
    rng = np.random.default_rng(1010)
    touched = runs = 0
    for _ in range(2000):
        domains, lo, hi = random_instance(rng)
        eng = Engine()
        tasks = build_tasks(eng, domains)
        if not eng.fixpoint():
            continue
        before = [(t.c.lo, t.c.hi, t.iv.d_min, t.iv.d_max) for t in tasks]
        try:
            timetable_filter(tasks, lo, hi, FORBID_ONLY)
        except Inconsistency:
            continue
        runs += 1
        touched += before != [(t.c.lo, t.c.hi, t.iv.d_min, t.iv.d_max) for t in tasks]
    ok = forbid == (4, 4, 16) and auto == (3, 2, 4) and touched == 0
    report(
        10,
        ok,
        f"forbid-only example bounds {forbid} (unpruned 4, 4, 16), auto {auto}; "
        f"forbid-only changed heights/lengths in {touched} of {runs} random passes",
    )
    assert ok
