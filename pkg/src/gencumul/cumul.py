"""Cumulative-function expressions and the constraints posted on them.

A cumulative function is a tree of elementary contributions (``pulse``,
``step_at_start``, ``step_at_end``, ``step``) combined with ``+`` and ``-``.
:func:`flatten` turns the tree into signed :class:`CumulTask` records, which
:func:`always_in` hands to the timetabling propagator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .engine import Engine, IntVar, NegatedVar
from .interval import IntervalVar, tighten_max, tighten_min

__all__ = [
    "CumulExpr",
    "CumulTask",
    "Minus",
    "ModelConfig",
    "Plus",
    "Pulse",
    "Step",
    "StepAtEnd",
    "StepAtStart",
    "always_in",
    "evaluate",
    "flatten",
    "ge",
    "le",
    "pulse",
    "sentinel_bound",
    "signed_leaves",
    "step",
    "step_at_end",
    "step_at_start",
]

Height = Union[int, tuple, IntVar]


class CumulExpr:
    """Base node; supports ``f + g`` and ``f - g``."""

    def __add__(self, other: "CumulExpr") -> "CumulExpr":
        return Plus(self, other)

    def __sub__(self, other: "CumulExpr") -> "CumulExpr":
        return Minus(self, other)

    def leaves(self):
        """Elementary leaves left to right."""
        for leaf, _ in signed_leaves(self):
            yield leaf


def signed_leaves(expr: "CumulExpr", sign: int = 1):
    """``(leaf, sign)`` pairs left to right, without recursion (sums can be long)."""
    stack = [(expr, sign)]
    while stack:
        node, sg = stack.pop()
        if isinstance(node, Plus):
            stack.append((node.right, sg))
            stack.append((node.left, sg))
        elif isinstance(node, Minus):
            stack.append((node.right, -sg))
            stack.append((node.left, sg))
        else:
            yield node, sg


def _check_height(height):
    if isinstance(height, (IntVar, NegatedVar)):
        return height
    if isinstance(height, int):
        lo = hi = height
    else:
        lo, hi = height
    if not 0 <= lo <= hi:
        raise ValueError(f"elementary height must satisfy 0 <= lo <= hi, got [{lo}, {hi}]")
    return (lo, hi)


# eq=False: leaves compare by identity so two pulses on one interval stay distinct
@dataclass(frozen=True, eq=False)
class Pulse(CumulExpr):
    iv: IntervalVar
    height: Height

    def __post_init__(self):
        object.__setattr__(self, "height", _check_height(self.height))


@dataclass(frozen=True, eq=False)
class StepAtStart(CumulExpr):
    iv: IntervalVar
    height: Height

    def __post_init__(self):
        object.__setattr__(self, "height", _check_height(self.height))


@dataclass(frozen=True, eq=False)
class StepAtEnd(CumulExpr):
    iv: IntervalVar
    height: Height

    def __post_init__(self):
        object.__setattr__(self, "height", _check_height(self.height))


@dataclass(frozen=True, eq=False)
class Step(CumulExpr):
    """Constant step of ``height`` from ``time`` to the horizon."""

    time: int
    height: int

    def __post_init__(self):
        if self.height < 0:
            raise ValueError("step height must be non-negative")


@dataclass(frozen=True, eq=False)
class Plus(CumulExpr):
    left: CumulExpr
    right: CumulExpr


@dataclass(frozen=True, eq=False)
class Minus(CumulExpr):
    left: CumulExpr
    right: CumulExpr


def pulse(iv: IntervalVar, height: Height) -> Pulse:
    return Pulse(iv, height)


def step_at_start(iv: IntervalVar, height: Height) -> StepAtStart:
    return StepAtStart(iv, height)


def step_at_end(iv: IntervalVar, height: Height) -> StepAtEnd:
    return StepAtEnd(iv, height)


def step(time: int, height: int) -> Step:
    return Step(time, height)


def total(exprs) -> Optional[CumulExpr]:
    """Left-fold a sequence of expressions with ``+``; ``None`` when empty."""
    acc = None
    for expr in exprs:
        acc = expr if acc is None else Plus(acc, expr)
    return acc


@dataclass(frozen=True)
class ModelConfig:
    horizon: int

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")


class CumulTask:
    """An interval with a signed height variable.

    Height tightenings follow the interval's absence semantics.
    """

    __slots__ = ("iv", "c")

    def __init__(self, iv: IntervalVar, c):
        self.iv = iv
        self.c = c

    def set_height_min(self, v: int) -> bool:
        return tighten_min(self.iv.presence, self.c, v)

    def set_height_max(self, v: int) -> bool:
        return tighten_max(self.iv.presence, self.c, v)

    def is_fixed(self) -> bool:
        iv = self.iv
        if iv.presence._value is False:
            return True
        return iv.is_fixed() and self.c.is_fixed()

    def __repr__(self) -> str:
        return f"CumulTask({self.iv!r}, c=[{self.c.lo},{self.c.hi}])"


def _materialize(engine: Engine, height, sign: int, name: str):
    if isinstance(height, (IntVar, NegatedVar)):
        return height if sign > 0 else _negate(height)
    lo, hi = height
    if sign < 0:
        lo, hi = -hi, -lo
    return engine.int_var(lo, hi, name=name)


def _negate(var):
    if isinstance(var, NegatedVar):
        return var.base
    return NegatedVar(var)


def _step_interval(engine: Engine, horizon: int, start: IntVar, presence, name: str) -> IntervalVar:
    end = engine.constant(horizon, name=f"{name}.e")
    dur = engine.int_var(0, max(horizon - start.lo, 0), name=f"{name}.d")
    return IntervalVar(engine, start, dur, end, presence, name=name)


def flatten(expr: CumulExpr, engine: Engine, horizon: int, sign: int = 1) -> list[CumulTask]:
    """Collect the signed cumulative tasks of ``expr``.

    Step leaves get a fresh interval ending at ``horizon`` that shares its
    start (the parent's start or end) and its presence with the parent.
    """
    out: list[CumulTask] = []
    for node, sg in signed_leaves(expr, sign):
        out.append(_leaf_task(node, engine, horizon, sg))
    return out


def _leaf_task(node, engine, horizon, sign) -> CumulTask:
    if isinstance(node, Pulse):
        iv = node.iv
        return CumulTask(iv, _materialize(engine, node.height, sign, f"{iv.name}.c"))
    if isinstance(node, StepAtStart):
        iv = node.iv
        fresh = _step_interval(engine, horizon, iv.start, iv.presence, f"{iv.name}'")
        return CumulTask(fresh, _materialize(engine, node.height, sign, f"{iv.name}'.c"))
    if isinstance(node, StepAtEnd):
        iv = node.iv
        fresh = _step_interval(engine, horizon, iv.end, iv.presence, f"{iv.name}''")
        return CumulTask(fresh, _materialize(engine, node.height, sign, f"{iv.name}''.c"))
    if isinstance(node, Step):
        name = f"step@{node.time}"
        s = engine.constant(node.time, name=f"{name}.s")
        p = engine.bool_var(True, name=f"{name}.p")
        fresh = _step_interval(engine, horizon, s, p, name)
        return CumulTask(fresh, engine.constant(sign * node.height, name=f"{name}.c"))
    raise TypeError(f"unknown cumulative expression node {node!r}")


def _fixed_height(height) -> int:
    if isinstance(height, tuple):
        lo, hi = height
        if lo != hi:
            raise ValueError(f"height range [{lo}, {hi}] is not fixed")
        return lo
    return height.value


def evaluate(expr: CumulExpr, t: int, horizon: int, placement: dict) -> int:
    """Value of ``expr`` at time ``t`` computed directly on the tree.

    ``placement`` maps each :class:`IntervalVar` to ``None`` (absent) or a
    ``(start, end)`` pair. Leaf heights must be fixed.
    """
    return sum(sg * _leaf_value(leaf, t, horizon, placement) for leaf, sg in signed_leaves(expr))


def _leaf_value(expr, t: int, horizon: int, placement: dict) -> int:
    if isinstance(expr, Step):
        return expr.height if expr.time <= t < horizon else 0
    span = placement.get(expr.iv)
    if span is None:
        return 0
    s, e = span
    if isinstance(expr, Pulse):
        active = s <= t < e
    elif isinstance(expr, StepAtStart):
        active = s <= t < horizon
    elif isinstance(expr, StepAtEnd):
        active = e <= t < horizon
    else:
        raise TypeError(f"unknown cumulative expression node {expr!r}")
    return _fixed_height(expr.height) if active else 0


def sentinel_bound(tasks: list[CumulTask], horizon: int) -> int:
    """A capacity magnitude no reachable profile value can exceed."""
    max_abs = max((max(abs(t.c.lo), abs(t.c.hi)) for t in tasks), default=0)
    return max(horizon, 1) * max(max_abs, 1) * max(len(tasks), 1) + 1


def always_in(
    engine: Engine,
    expr: Optional[CumulExpr],
    c_lo: Optional[int],
    c_hi: Optional[int],
    horizon: int,
    everywhere: bool = False,
    rules: str = "auto",
):
    """Post ``c_lo <= expr <= c_hi`` wherever some contributing task executes.

    ``None`` for a bound stands for the sentinel (unbounded) side. With
    ``everywhere`` a zero-height task spanning ``[0, horizon)`` widens the
    scope to the whole horizon.
    """
    from .timetable import GeneralizedCumulative

    tasks = flatten(expr, engine, horizon) if expr is not None else []
    if everywhere:
        s = engine.constant(0, name="scope.s")
        d = engine.constant(horizon, name="scope.d")
        e = engine.constant(horizon, name="scope.e")
        p = engine.bool_var(True, name="scope.p")
        iv = IntervalVar(engine, s, d, e, p, name="scope")
        tasks.append(CumulTask(iv, engine.constant(0, name="scope.c")))
    big = sentinel_bound(tasks, horizon)
    lo_sentinel = c_lo is None
    hi_sentinel = c_hi is None
    lo = -big if lo_sentinel else c_lo
    hi = big if hi_sentinel else c_hi
    if lo > hi:
        raise ValueError(f"empty capacity range [{lo}, {hi}]")
    prop = GeneralizedCumulative(
        engine, tasks, lo, hi, rules=rules, lo_sentinel=lo_sentinel, hi_sentinel=hi_sentinel
    )
    return engine.post(prop)


def le(engine: Engine, expr: CumulExpr, c_hi: int, horizon: int, rules: str = "auto"):
    """``expr <= c_hi``."""
    return always_in(engine, expr, None, c_hi, horizon, rules=rules)


def ge(engine: Engine, expr: CumulExpr, c_lo: int, horizon: int, rules: str = "auto"):
    """``expr >= c_lo``."""
    return always_in(engine, expr, c_lo, None, horizon, rules=rules)
