"""Backtracking constraint engine with bound domains.

Integer variables keep an inclusive ``[lo, hi]`` range and never get holes.
Every bound change is trailed so that :meth:`Engine.restore` rewinds the
store to the matching :meth:`Engine.save`. Propagators are woken through
per-variable subscriptions and run from a FIFO queue until fixpoint.
"""

from __future__ import annotations

import logging
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

__all__ = [
    "BoolVar",
    "Engine",
    "Inconsistency",
    "IntVar",
    "NegatedVar",
    "Propagator",
    "SearchStats",
]

LOG = logging.getLogger(__name__)


class Inconsistency(Exception):
    """Raised when a domain is wiped out."""


class Propagator:
    """Base class for propagators.

    Subclasses implement :meth:`propagate` and subscribe to their variables
    in :meth:`setup`.
    """

    def __init__(self, engine: "Engine"):
        self.engine = engine
        self._queued = False

    def setup(self) -> None:
        pass

    def propagate(self) -> None:
        raise NotImplementedError


class IntVar:
    """Integer variable with a range domain."""

    __slots__ = ("_lo", "_hi", "engine", "name", "_subs", "_stamp")

    def __init__(self, engine: "Engine", lo: int, hi: int, name: Optional[str] = None):
        if lo > hi:
            raise ValueError(f"empty domain [{lo}, {hi}] for {name or 'variable'}")
        self._lo = lo
        self._hi = hi
        self.engine = engine
        self.name = name
        self._subs: list[Propagator] = []
        self._stamp = -1

    @property
    def lo(self) -> int:
        return self._lo

    @property
    def hi(self) -> int:
        return self._hi

    def is_fixed(self) -> bool:
        return self._lo == self._hi

    @property
    def value(self) -> int:
        if self._lo != self._hi:
            raise ValueError(f"{self} is not fixed")
        return self._lo

    def size(self) -> int:
        return self._hi - self._lo + 1

    def contains(self, v: int) -> bool:
        return self._lo <= v <= self._hi

    def subscribe(self, prop: Propagator) -> None:
        self._subs.append(prop)

    def _save(self) -> None:
        eng = self.engine
        if self._stamp != eng._magic:
            eng._trail.append((self, self._lo, self._hi))
            self._stamp = eng._magic

    def _undo(self, lo, hi) -> None:
        self._lo = lo
        self._hi = hi

    def set_min(self, v: int) -> bool:
        """Raise the lower bound to ``v``; return whether it moved."""
        if v <= self._lo:
            return False
        if v > self._hi:
            raise Inconsistency(self.name)
        self._save()
        self._lo = v
        self.engine._notify(self._subs)
        return True

    def set_max(self, v: int) -> bool:
        if v >= self._hi:
            return False
        if v < self._lo:
            raise Inconsistency(self.name)
        self._save()
        self._hi = v
        self.engine._notify(self._subs)
        return True

    def fix(self, v: int) -> bool:
        if not self._lo <= v <= self._hi:
            raise Inconsistency(self.name)
        if self._lo == self._hi:
            return False
        self._save()
        self._lo = self._hi = v
        self.engine._notify(self._subs)
        return True

    def __repr__(self) -> str:
        label = self.name or "x"
        if self._lo == self._hi:
            return f"{label}={self._lo}"
        return f"{label}[{self._lo},{self._hi}]"


class NegatedVar:
    """View of ``-x`` over an :class:`IntVar`; shares its store and trail."""

    __slots__ = ("base",)

    def __init__(self, base: IntVar):
        self.base = base

    @property
    def lo(self) -> int:
        return -self.base.hi

    @property
    def hi(self) -> int:
        return -self.base.lo

    @property
    def engine(self):
        return self.base.engine

    @property
    def name(self):
        return f"-{self.base.name}" if self.base.name else None

    def is_fixed(self) -> bool:
        return self.base.is_fixed()

    @property
    def value(self) -> int:
        return -self.base.value

    def contains(self, v: int) -> bool:
        return self.base.contains(-v)

    def subscribe(self, prop: Propagator) -> None:
        self.base.subscribe(prop)

    def set_min(self, v: int) -> bool:
        return self.base.set_max(-v)

    def set_max(self, v: int) -> bool:
        return self.base.set_min(-v)

    def fix(self, v: int) -> bool:
        return self.base.fix(-v)

    def __repr__(self) -> str:
        return f"-({self.base!r})"


class BoolVar:
    """Tri-state boolean: ``None`` (unknown), ``True`` or ``False``."""

    __slots__ = ("_value", "engine", "name", "_subs", "_stamp")

    def __init__(self, engine: "Engine", value: Optional[bool] = None, name: Optional[str] = None):
        self._value = value
        self.engine = engine
        self.name = name
        self._subs: list[Propagator] = []
        self._stamp = -1

    @property
    def value(self) -> Optional[bool]:
        return self._value

    def is_fixed(self) -> bool:
        return self._value is not None

    def subscribe(self, prop: Propagator) -> None:
        self._subs.append(prop)

    def _undo(self, value, _unused) -> None:
        self._value = value

    def assign(self, value: bool) -> bool:
        if self._value is not None:
            if self._value != value:
                raise Inconsistency(self.name)
            return False
        eng = self.engine
        if self._stamp != eng._magic:
            eng._trail.append((self, self._value, None))
            self._stamp = eng._magic
        self._value = value
        eng._notify(self._subs)
        return True

    def __repr__(self) -> str:
        state = {None: "?", True: "T", False: "F"}[self._value]
        return f"{self.name or 'b'}={state}"


@dataclass
class SearchStats:
    nodes: int = 0
    backtracks: int = 0
    solutions: int = 0
    best_objective: Optional[int] = None
    status: str = "infeasible"
    elapsed: float = 0.0

    def as_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "backtracks": self.backtracks,
            "solutions": self.solutions,
            "bestObjective": self.best_objective,
            "status": self.status,
            "elapsed": self.elapsed,
        }


Branching = Callable[[], Sequence[Callable[[], object]]]


class Engine:
    """Variable store, trail, propagation queue and depth-first search."""

    def __init__(self):
        self._trail: list[tuple] = []
        self._marks: list[int] = []
        self._magic = 0
        self._queue: deque[Propagator] = deque()
        self.propagators: list[Propagator] = []
        self.variables: list[IntVar] = []
        # bumped on every restore so propagators can drop cached state
        self.restores = 0

    # -- variables ---------------------------------------------------------

    def int_var(self, lo: int, hi: int, name: Optional[str] = None) -> IntVar:
        var = IntVar(self, lo, hi, name)
        self.variables.append(var)
        return var

    def constant(self, v: int, name: Optional[str] = None) -> IntVar:
        return self.int_var(v, v, name)

    def bool_var(self, value: Optional[bool] = None, name: Optional[str] = None) -> BoolVar:
        return BoolVar(self, value, name)

    # -- trail -------------------------------------------------------------

    @property
    def level(self) -> int:
        return len(self._marks)

    def save(self) -> None:
        self._marks.append(len(self._trail))
        self._magic += 1

    def restore(self) -> None:
        mark = self._marks.pop()
        trail = self._trail
        while len(trail) > mark:
            obj, a, b = trail.pop()
            obj._undo(a, b)
        self._magic += 1
        self.restores += 1
        self._clear_queue()

    # -- propagation -------------------------------------------------------

    def post(self, prop: Propagator) -> Propagator:
        """Register ``prop`` and schedule it; nothing runs until :meth:`fixpoint`."""
        self.propagators.append(prop)
        prop.setup()
        self.schedule(prop)
        return prop

    def schedule(self, prop: Propagator) -> None:
        if not prop._queued:
            prop._queued = True
            self._queue.append(prop)

    def _notify(self, subs: Iterable[Propagator]) -> None:
        queue = self._queue
        for prop in subs:
            if not prop._queued:
                prop._queued = True
                queue.append(prop)

    def _clear_queue(self) -> None:
        while self._queue:
            self._queue.popleft()._queued = False

    def fixpoint(self) -> bool:
        """Run queued propagators until quiescence; ``False`` on failure."""
        queue = self._queue
        try:
            while queue:
                prop = queue.popleft()
                prop._queued = False
                prop.propagate()
        except Inconsistency:
            self._clear_queue()
            return False
        return True

    # -- search ------------------------------------------------------------

    def solve(
        self,
        branching: Branching,
        objective: Optional[IntVar] = None,
        sense: str = "minimize",
        time_limit: Optional[float] = None,
        solution_limit: Optional[int] = None,
        on_solution: Optional[Callable[[], None]] = None,
    ) -> SearchStats:
        """Depth-first search, with branch-and-bound when ``objective`` is given.

        ``branching`` returns the ordered alternatives of the current node as
        zero-argument callables; an empty sequence means every decision
        variable is fixed. ``solution_limit`` defaults to 1 without an
        objective and to unlimited with one. The store is rewound to its
        entry state before returning.
        """
        if sense not in ("minimize", "maximize"):
            raise ValueError(f"unknown sense {sense!r}")
        if solution_limit is None and objective is None:
            solution_limit = 1
        stats = SearchStats()
        started = time.perf_counter()
        deadline = None if time_limit is None else started + time_limit
        best: list[Optional[int]] = [None]

        def bound() -> None:
            if best[0] is None:
                return
            if sense == "minimize":
                objective.set_max(best[0] - 1)
            else:
                objective.set_min(best[0] + 1)

        def record() -> bool:
            stats.solutions += 1
            if objective is not None:
                # the objective may still be a range when it is not a decision variable
                value = objective.lo if sense == "minimize" else objective.hi
                best[0] = value
                stats.best_objective = value
            if on_solution is not None:
                on_solution()
            return solution_limit is not None and stats.solutions >= solution_limit

        stopped = timed_out = False
        base_level = self.level
        self.save()
        stack: list = []
        if self.fixpoint():
            alts = branching()
            if alts:
                stack.append(iter(alts))
            else:
                stopped = record()
        while stack and not stopped:
            if deadline is not None and time.perf_counter() > deadline:
                timed_out = True
                break
            alt = next(stack[-1], None)
            if alt is None:
                stack.pop()
                self.restore()
                continue
            self.save()
            stats.nodes += 1
            try:
                alt()
                bound()
                ok = self.fixpoint()
            except Inconsistency:
                self._clear_queue()
                ok = False
            if not ok:
                stats.backtracks += 1
                self.restore()
                continue
            alts = branching()
            if alts:
                stack.append(iter(alts))
            else:
                stopped = record()
                self.restore()
        while self.level > base_level:
            self.restore()

        stats.elapsed = time.perf_counter() - started
        if timed_out:
            stats.status = "feasible" if stats.solutions else "timeout"
        elif stopped and objective is None:
            stats.status = "feasible"
        elif stopped:
            # hit the solution limit before proving optimality
            stats.status = "feasible"
        else:
            stats.status = "optimal" if stats.solutions else "infeasible"
        LOG.debug("search finished: %s", stats)
        return stats
