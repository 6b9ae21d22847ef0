"""Benchmark models built on cumulative functions, with their searches."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .cumul import CumulExpr, always_in, ge, le, pulse, step, step_at_end, step_at_start, total
from .engine import Engine, IntVar, Propagator, SearchStats
from .instances import MespInstance, RcpspCprInstance, SmicInstance, topological_order
from .interval import IntervalVar, make_interval, tighten_max
from .oracle import FixedTask, check_assignment

__all__ = [
    "BUILDERS",
    "Model",
    "SolutionError",
    "build_mesp",
    "build_rcpsp_cpr",
    "build_smic",
    "check_solution",
    "greedy_mesp_search",
    "static_est_search",
]


class Precedence(Propagator):
    """``a.end <= b.start`` between two required intervals."""

    def __init__(self, engine: Engine, a: IntervalVar, b: IntervalVar):
        super().__init__(engine)
        self.a = a
        self.b = b

    def setup(self):
        self.a.end.subscribe(self)
        self.b.start.subscribe(self)

    def propagate(self):
        self.b.start.set_min(self.a.end.lo)
        self.a.end.set_max(self.b.start.hi)


class MaxOfEnds(Propagator):
    """``mk = max(end of each interval)`` on bounds."""

    def __init__(self, engine: Engine, mk: IntVar, intervals: Sequence[IntervalVar]):
        super().__init__(engine)
        self.mk = mk
        self.intervals = list(intervals)

    def setup(self):
        self.mk.subscribe(self)
        for iv in self.intervals:
            iv.end.subscribe(self)

    def propagate(self):
        mk = self.mk
        if not self.intervals:
            mk.fix(0)
            return
        mk.set_min(max(iv.end.lo for iv in self.intervals))
        mk.set_max(max(iv.end.hi for iv in self.intervals))
        hi = mk.hi
        for iv in self.intervals:
            iv.end.set_max(hi)


class Energy(Propagator):
    """``E = max(c, 0) * d`` when present, ``0`` when absent."""

    def __init__(self, engine: Engine, iv: IntervalVar, c: IntVar, energy: IntVar):
        super().__init__(engine)
        self.iv = iv
        self.c = c
        self.energy = energy

    def setup(self):
        for var in (self.iv.presence, self.iv.duration, self.c, self.energy):
            var.subscribe(self)

    def propagate(self):
        p, d, c, E = self.iv.presence, self.iv.duration, self.c, self.energy
        if p._value is False:
            E.fix(0)
            return
        E.set_max(max(c.hi, 0) * d.hi)
        if p._value is True:
            E.set_min(max(c.lo, 0) * d.lo)
        if E.lo > 0:
            p.assign(True)
            if d.hi > 0:
                c.set_min(-(-E.lo // d.hi))
            if c.hi > 0:
                d.set_min(-(-E.lo // c.hi))
        if d.lo > 0:
            tighten_max(p, c, E.hi // d.lo)
        if c.lo > 0:
            tighten_max(p, d, E.hi // c.lo)


class LinearSum(Propagator):
    """``total = sum(terms)`` on bounds."""

    def __init__(self, engine: Engine, result: IntVar, terms: Sequence[IntVar]):
        super().__init__(engine)
        self.result = result
        self.terms = list(terms)

    def setup(self):
        self.result.subscribe(self)
        for t in self.terms:
            t.subscribe(self)

    def propagate(self):
        lo = sum(t.lo for t in self.terms)
        hi = sum(t.hi for t in self.terms)
        r = self.result
        r.set_min(lo)
        r.set_max(hi)
        for t in self.terms:
            t.set_min(r.lo - (hi - t.hi))
            t.set_max(r.hi - (lo - t.lo))


@dataclass
class Model:
    engine: Engine
    intervals: list
    objective: IntVar
    sense: str
    branching: Callable
    horizon: int
    heights: list = field(default_factory=list)
    resources: list = field(default_factory=list)
    first_solution: bool = False

    def snapshot(self) -> dict:
        sol = {
            "start": [iv.start.lo for iv in self.intervals],
            "duration": [iv.duration.lo for iv in self.intervals],
            "end": [iv.end.lo for iv in self.intervals],
            "objective": self.objective.lo if self.sense == "minimize" else self.objective.hi,
        }
        if self.heights:
            sol["present"] = [iv.presence._value is True for iv in self.intervals]
            sol["height"] = [c.lo for c in self.heights]
        return sol

    def solve(
        self, time_limit: Optional[float] = None, first_solution: Optional[bool] = None
    ) -> tuple[SearchStats, Optional[dict]]:
        """Run the model's search; returns the stats and the last solution found."""
        first = self.first_solution if first_solution is None else first_solution
        best: list = [None]

        def keep():
            best[0] = self.snapshot()

        stats = self.engine.solve(
            self.branching,
            objective=self.objective,
            sense=self.sense,
            time_limit=time_limit,
            solution_limit=1 if first else None,
            on_solution=keep,
        )
        return stats, best[0]

    def rule_flags(self) -> list:
        out = []
        for prop in self.resources:
            active = [t for t in prop.tasks if t.iv.presence._value is not False]
            out.append(prop.rule_flags(active))
        return out


def static_est_search(intervals: Sequence[IntervalVar]):
    """Fix starts in declaration order: ``s = s_min`` or ``s >= s_min + 1``."""
    ivs = list(intervals)

    def branching():
        for iv in ivs:
            if iv.presence._value is False:
                continue
            s = iv.start
            if not s.is_fixed():
                v = s.lo
                return (lambda: s.fix(v), lambda: s.set_min(v + 1))
        return ()

    return branching


def greedy_mesp_search(intervals: Sequence[IntervalVar], heights: Sequence[IntVar]):
    """Per task in order: presence true, then height, duration and end to their maximum.

    Each decision has a right branch removing the chosen value.
    """
    pairs = list(zip(intervals, heights))

    def branching():
        for iv, c in pairs:
            p = iv.presence
            if p._value is False:
                continue
            if p._value is None:
                return (lambda: p.assign(True), lambda: p.assign(False))
            for var in (c, iv.duration, iv.end):
                if not var.is_fixed():
                    v = var.hi
                    return (lambda var=var, v=v: var.fix(v), lambda var=var, v=v: var.set_max(v - 1))
        return ()

    return branching


def _makespan(engine: Engine, intervals, horizon: int) -> IntVar:
    mk = engine.int_var(0, horizon, name="makespan")
    engine.post(MaxOfEnds(engine, mk, intervals))
    return mk


def build_rcpsp_cpr(inst: RcpspCprInstance, rules: str = "auto") -> Model:
    """Makespan minimization with renewable and reservoir resources."""
    topological_order(inst.suc)
    eng = Engine()
    H = sum(inst.d)
    ivs = [
        make_interval(eng, (0, H - d), (d, d), (d, H), name=f"t{i + 1}")
        for i, d in enumerate(inst.d)
    ]
    for i, succs in enumerate(inst.suc):
        for j in sorted(succs):
            eng.post(Precedence(eng, ivs[i], ivs[j]))
    resources = []
    for k in range(inst.n_res):
        expr = total(pulse(ivs[i], inst.rr[k][i]) for i in range(inst.n_tasks) if inst.rr[k][i] > 0)
        if expr is not None:
            resources.append(le(eng, expr, inst.rc[k], H, rules=rules))
    for u in range(inst.n_cp_res):
        expr: CumulExpr = step(0, inst.rcp[u])
        for i in range(inst.n_tasks):
            if inst.rr_c[u][i] > 0:
                expr = expr - step_at_start(ivs[i], inst.rr_c[u][i])
            if inst.rr_p[u][i] > 0:
                expr = expr + step_at_end(ivs[i], inst.rr_p[u][i])
        # steps run one unit past the last event so a start at H still counts
        resources.append(ge(eng, expr, 0, H + 1, rules=rules))
    mk = _makespan(eng, ivs, H)
    return Model(eng, ivs, mk, "minimize", static_est_search(ivs), H, resources=resources)


def build_smic(inst: SmicInstance, rules: str = "auto") -> Model:
    """Single machine with an inventory that must stay within ``[0, capa]``."""
    eng = Engine()
    H = max(inst.release, default=0) + sum(inst.processing)
    ivs = [
        make_interval(eng, (r, H - p), (p, p), (r + p, H), name=f"j{i + 1}")
        for i, (r, p) in enumerate(zip(inst.release, inst.processing))
    ]
    res: CumulExpr = step(0, inst.init_inventory)
    for i, iv in enumerate(ivs):
        amount = inst.inventory[i]
        if amount == 0:
            continue
        if inst.type_inventory[i] == 1:
            res = res + step_at_start(iv, amount)
        else:
            res = res - step_at_start(iv, amount)
    resources = [always_in(eng, res, 0, inst.capa_inventory, H + 1, everywhere=True, rules=rules)]
    machine = total(pulse(iv, 1) for iv in ivs)
    if machine is not None:
        resources.append(le(eng, machine, 1, H, rules=rules))
    mk = _makespan(eng, ivs, H)
    return Model(eng, ivs, mk, "minimize", static_est_search(ivs), H, resources=resources)


def build_mesp(inst: MespInstance, rules: str = "auto") -> Model:
    """Optional tasks of variable length and height under a capacity, energy maximized."""
    eng = Engine()
    H = inst.horizon
    L = inst.max_length
    ivs, heights, energies = [], [], []
    for i in range(inst.n_tasks):
        sm = inst.start_min[i]
        iv = make_interval(eng, (sm, sm + L - 1), (1, L), (sm + 1, sm + 2 * L - 1), optional=True, name=f"t{i + 1}")
        c = eng.int_var(inst.height_min[i], inst.height_max[i], name=f"t{i + 1}.c")
        top = max(inst.height_max[i], 0) * L
        E = eng.int_var(0, top, name=f"t{i + 1}.energy")
        eng.post(Energy(eng, iv, c, E))
        ivs.append(iv)
        heights.append(c)
        energies.append(E)
    resources = []
    expr = total(pulse(iv, c) for iv, c in zip(ivs, heights))
    if expr is not None:
        resources.append(le(eng, expr, inst.capa, H, rules=rules))
    obj = eng.int_var(0, sum(E.hi for E in energies), name="energy")
    eng.post(LinearSum(eng, obj, energies))
    return Model(
        eng,
        ivs,
        obj,
        "maximize",
        greedy_mesp_search(ivs, heights),
        H,
        heights=heights,
        resources=resources,
        first_solution=True,
    )


BUILDERS = {"rcpsp-cpr": build_rcpsp_cpr, "smic": build_smic, "mesp": build_mesp}


# -- direct solution checks --------------------------------------------------


class SolutionError(ValueError):
    pass


def _vector(sol: dict, key: str, n: int) -> list[int]:
    v = sol.get(key)
    if not isinstance(v, list) or len(v) != n or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        raise SolutionError(f"solution field {key!r} must be a list of {n} integers")
    return v


def _steps(starts, heights, horizon: int) -> list[FixedTask]:
    """Step contributions replayed as tasks running until ``horizon``."""
    return [FixedTask.make(True, s, horizon - s, h) for s, h in zip(starts, heights) if h != 0]


def _loose(tasks) -> int:
    return sum(abs(t.c) for t in tasks) + 1


def rcpsp_cpr_violations(inst: RcpspCprInstance, starts) -> list[str]:
    s = list(starts)
    e = [a + d for a, d in zip(s, inst.d)]
    out = []
    if any(a < 0 for a in s):
        out.append("negative start")
    for i, succs in enumerate(inst.suc):
        for j in sorted(succs):
            if e[i] > s[j]:
                out.append(f"precedence {i + 1} -> {j + 1}")
    for k in range(inst.n_res):
        tasks = [FixedTask.make(True, a, d, h) for a, d, h in zip(s, inst.d, inst.rr[k]) if h > 0]
        if not check_assignment(tasks, -_loose(tasks), inst.rc[k]):
            out.append(f"renewable resource {k + 1} over capacity")
    horizon = max(e, default=0) + 1
    for u in range(inst.n_cp_res):
        tasks = [FixedTask.make(True, 0, horizon, inst.rcp[u])]
        tasks += _steps(s, [-c for c in inst.rr_c[u]], horizon)
        tasks += _steps(e, inst.rr_p[u], horizon)
        if not check_assignment(tasks, 0, _loose(tasks)):
            out.append(f"reservoir {u + 1} below zero")
    return out


def smic_violations(inst: SmicInstance, starts) -> list[str]:
    s = list(starts)
    out = []
    if any(a < r for a, r in zip(s, inst.release)):
        out.append("start before release")
    jobs = [FixedTask.make(True, a, p, 1) for a, p in zip(s, inst.processing)]
    if not check_assignment(jobs, 0, 1):
        out.append("jobs overlap")
    horizon = max((j.e for j in jobs), default=0) + 1
    signed = [a if t == 1 else -a for a, t in zip(inst.inventory, inst.type_inventory)]
    level = [FixedTask.make(True, 0, horizon, inst.init_inventory)] + _steps(s, signed, horizon)
    if not check_assignment(level, 0, inst.capa_inventory):
        out.append("inventory outside [0, capa]")
    return out


def mesp_violations(inst: MespInstance, sol: dict) -> list[str]:
    n = inst.n_tasks
    present = sol.get("present", [True] * n)
    if not isinstance(present, list) or len(present) != n:
        raise SolutionError(f"solution field 'present' must be a list of {n} flags")
    s = _vector(sol, "start", n)
    d = _vector(sol, "duration", n)
    c = _vector(sol, "height", n)
    L = inst.max_length
    bad = [
        i + 1
        for i in range(n)
        if present[i]
        and not (
            inst.start_min[i] <= s[i] <= inst.start_min[i] + L - 1
            and 1 <= d[i] <= L
            and inst.height_min[i] <= c[i] <= inst.height_max[i]
        )
    ]
    out = []
    if bad:
        out.append(f"tasks outside their domains: {bad}")
    tasks = [FixedTask.make(bool(p), a, b, h) for p, a, b, h in zip(present, s, d, c) if b >= 0]
    if not check_assignment(tasks, -_loose(tasks), inst.capa):
        out.append("capacity exceeded")
    return out


def mesp_energy(sol: dict) -> int:
    present = sol.get("present") or [True] * len(sol["height"])
    return int(sum(max(c, 0) * d for c, d, p in zip(sol["height"], sol["duration"], present) if p))


def check_solution(problem: str, inst, sol: dict) -> tuple[list[str], int]:
    """Verify ``sol`` against ``inst`` directly; returns (violations, objective)."""
    if problem == "rcpsp-cpr":
        s = _vector(sol, "start", inst.n_tasks)
        return rcpsp_cpr_violations(inst, s), max((a + d for a, d in zip(s, inst.d)), default=0)
    if problem == "smic":
        s = _vector(sol, "start", inst.n_jobs)
        return smic_violations(inst, s), max((a + p for a, p in zip(s, inst.processing)), default=0)
    if problem == "mesp":
        return mesp_violations(inst, sol), mesp_energy(sol)
    raise ValueError(f"unknown problem {problem!r}")
