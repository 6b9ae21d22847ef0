import pytest
from hypothesis import given, settings, strategies as st

from gencumul.cumul import (
    Minus,
    Plus,
    always_in,
    evaluate,
    flatten,
    ge,
    le,
    pulse,
    sentinel_bound,
    step,
    step_at_end,
    step_at_start,
    total,
)
from gencumul.engine import Engine, IntVar
from gencumul.interval import make_interval

H = 20


def test_flatten_example(eng):
    a = make_interval(eng, (0, 4), (2, 3), (2, 7), optional=True, name="A")
    b = make_interval(eng, (1, 5), (2, 2), (3, 7), name="B")
    c = make_interval(eng, (0, 3), (1, 4), (1, 7), name="C")
    f = step_at_start(a, 2) - (pulse(b, 1) + step_at_end(c, 1))
    tasks = flatten(f, eng, H)
    assert len(tasks) == 3
    a2, b2, c2 = tasks
    assert [(t.c.lo, t.c.hi) for t in tasks] == [(2, 2), (-1, -1), (-1, -1)]
    # the step leaves get fresh intervals that share variables with their parent
    assert a2.iv is not a and a2.iv.start is a.start and a2.iv.presence is a.presence
    assert (a2.iv.end.lo, a2.iv.end.hi) == (H, H)
    assert b2.iv is b
    assert c2.iv.start is c.end and c2.iv.presence is c.presence
    assert (c2.iv.end.lo, c2.iv.end.hi) == (H, H)


def test_flatten_single_pulse(eng):
    x = make_interval(eng, (0, 2), (1, 1), (1, 3))
    (t,) = flatten(pulse(x, 3), eng, H)
    assert t.iv is x and (t.c.lo, t.c.hi) == (3, 3)


def test_flatten_sign_flip(eng):
    x = make_interval(eng, (0, 2), (1, 1), (1, 3))
    y = make_interval(eng, (0, 2), (1, 1), (1, 3))
    tx, ty = flatten(Minus(pulse(x, (1, 2)), pulse(y, (1, 2))), eng, H)
    assert (tx.c.lo, tx.c.hi) == (1, 2)
    assert (ty.c.lo, ty.c.hi) == (-2, -1)


def test_shared_height_variable_is_negated_view(eng):
    x = make_interval(eng, (0, 2), (1, 1), (1, 3))
    h = eng.int_var(1, 3)
    (t,) = flatten(step(0, 4) - pulse(x, h), eng, H)[1:]
    assert (t.c.lo, t.c.hi) == (-3, -1)
    t.c.set_max(-2)
    assert h.lo == 2


def test_negative_elementary_height_rejected(eng):
    x = make_interval(eng, (0, 2), (1, 1), (1, 3))
    with pytest.raises(ValueError):
        pulse(x, (-1, 2))
    with pytest.raises(ValueError):
        step(0, -1)


def test_step_tracks_parent(eng):
    x = make_interval(eng, (0, 5), (2, 2), (2, 7), optional=True)
    t_start, t_end = flatten(step_at_start(x, 1) + step_at_end(x, 1), eng, H)
    assert eng.fixpoint()
    x.start.fix(3)
    assert eng.fixpoint()
    assert t_start.iv.start.value == 3 and t_end.iv.start.value == 5
    assert t_start.iv.duration.value == H - 3
    x.set_absent()
    assert t_start.iv.is_absent() and t_end.iv.is_absent()


def test_deep_sum_flattens():
    eng = Engine()
    ivs = [make_interval(eng, (0, 0), (1, 1), (1, 1)) for _ in range(5000)]
    expr = total(pulse(iv, 1) for iv in ivs)
    assert len(flatten(expr, eng, 2)) == 5000
    assert evaluate(expr, 0, 2, {iv: (0, 1) for iv in ivs}) == 5000


def test_leaf_count(eng):
    x = make_interval(eng, (0, 2), (1, 1), (1, 3))
    f = pulse(x, 1) - (step(0, 2) + (step_at_end(x, 3) - pulse(x, 1)))
    assert len(list(f.leaves())) == len(flatten(f, eng, H)) == 4


# -- random trees against direct evaluation ----------------------------------

leaf_kinds = st.sampled_from(["pulse", "start", "end", "step"])


@st.composite
def trees(draw, n_ivs):
    def build(depth):
        if depth == 0 or draw(st.integers(0, 2)) == 0:
            kind = draw(leaf_kinds)
            h = draw(st.integers(0, 3))
            if kind == "step":
                return ("step", draw(st.integers(0, 12)), h)
            return (kind, draw(st.integers(0, n_ivs - 1)), h)
        op = draw(st.sampled_from(["+", "-"]))
        return (op, build(depth - 1), build(depth - 1))

    return build(4)


def realize(node, ivs):
    kind = node[0]
    if kind in "+-":
        left, right = realize(node[1], ivs), realize(node[2], ivs)
        return Plus(left, right) if kind == "+" else Minus(left, right)
    if kind == "step":
        return step(node[1], node[2])
    fn = {"pulse": pulse, "start": step_at_start, "end": step_at_end}[kind]
    return fn(ivs[node[1]], node[2])


placements = st.lists(
    st.one_of(st.none(), st.tuples(st.integers(0, 8), st.integers(0, 6))), min_size=3, max_size=3
)


@settings(max_examples=200, deadline=None)
@given(placements, trees(3))
def test_flattened_sum_matches_tree(place, tree):
    horizon = 15
    eng = Engine()
    ivs = []
    for p in place:
        if p is None:
            iv = make_interval(eng, (0, 0), (0, 0), (0, 0), optional=True)
            iv.set_absent()
        else:
            s, d = p
            iv = make_interval(eng, (s, s), (d, d), (s + d, s + d))
        ivs.append(iv)
    expr = realize(tree, ivs)
    tasks = flatten(expr, eng, horizon)
    assert eng.fixpoint()
    placement = {iv: None if p is None else (p[0], p[0] + p[1]) for iv, p in zip(ivs, place)}
    for tau in range(horizon + 1):
        summed = sum(
            t.c.value
            for t in tasks
            if t.iv.presence.value and t.iv.start.value <= tau < t.iv.end.value
        )
        assert summed == evaluate(expr, tau, horizon, placement)


# -- posting -------------------------------------------------------------------


def test_always_in_fixed_overload(eng):
    x = make_interval(eng, (2, 2), (3, 3), (5, 5))
    always_in(eng, pulse(x, 3), 0, 2, H)
    assert not eng.fixpoint()


def test_always_in_without_support(eng):
    x = make_interval(eng, (0, 3), (1, 1), (1, 4), optional=True)
    x.set_absent()
    always_in(eng, pulse(x, 3), 5, 10, H)
    assert eng.fixpoint()


def test_always_in_everywhere(eng):
    x = make_interval(eng, (0, 3), (1, 1), (1, 4), optional=True)
    x.set_absent()
    always_in(eng, pulse(x, 3), 5, 10, H, everywhere=True)
    # the zero-height scope task runs over the whole horizon, outside [5, 10]
    assert not eng.fixpoint()


def test_le_ge_use_sentinels(eng):
    x = make_interval(eng, (0, 3), (1, 1), (1, 4))
    p = le(eng, pulse(x, 3), 2, H)
    big = sentinel_bound(p.tasks, H)
    assert (p.c_lo, p.c_hi, p.lo_sentinel, p.hi_sentinel) == (-big, 2, True, False)
    q = ge(eng, pulse(x, 3), 0, H)
    assert (q.c_lo, q.c_hi, q.lo_sentinel, q.hi_sentinel) == (0, big, False, True)
    assert big == H * 3 * 1 + 1


def test_ge_fails_once_step_starts():
    eng = Engine()
    x = make_interval(eng, (0, 0), (1, 1), (1, 1))
    ge(eng, step(0, 5) - step_at_start(x, 6), 0, H)
    assert not eng.fixpoint()


def test_ge_makes_optional_consumer_absent():
    eng = Engine()
    x = make_interval(eng, (0, 10), (1, 1), (1, 11), optional=True)
    ge(eng, step(0, 5) - step_at_start(x, 6), 0, H)
    assert eng.fixpoint()
    assert x.is_absent()


def test_empty_capacity_rejected(eng):
    x = make_interval(eng, (0, 3), (1, 1), (1, 4))
    with pytest.raises(ValueError):
        always_in(eng, pulse(x, 1), 3, 2, H)


def test_height_var_kept(eng):
    x = make_interval(eng, (0, 3), (1, 1), (1, 4))
    h = eng.int_var(0, 2)
    (t,) = flatten(pulse(x, h), eng, H)
    assert isinstance(t.c, IntVar) and t.c is h
