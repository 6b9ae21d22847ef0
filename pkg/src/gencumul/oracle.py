"""Brute-force semantics of the generalized cumulative constraint.

Everything here is independent of the timetabling code: the constraint is
checked time unit by time unit, and the solution set of a small instance is
obtained by enumerating every assignment with numpy broadcasting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cumul import CumulTask
from .dzn import dump_dzn, parse_dzn, ParseError
from .engine import Engine, Inconsistency
from .interval import IntervalVar
from .timetable import ALL_RULES, GeneralizedCumulative, FORBID_ONLY, RuleFlags, initialize_timeline, timetable_filter

__all__ = [
    "Counterexample",
    "FixedTask",
    "TaskDomain",
    "build_tasks",
    "check_assignment",
    "check_fixed_equivalence",
    "differential_test",
    "propagator_trial",
    "enumerate_all",
    "random_fixed_instance",
    "random_instance",
    "run_trial",
    "snapshot",
    "solution_mask",
]

DEFAULT_LIMIT = 10**7


@dataclass(frozen=True)
class FixedTask:
    present: bool
    s: int
    d: int
    e: int
    c: int

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("duration must be non-negative")
        if self.s + self.d != self.e:
            raise ValueError(f"s + d != e for {self}")

    @classmethod
    def make(cls, present: bool, s: int, d: int, c: int) -> "FixedTask":
        return cls(present, s, d, s + d, c)


def check_assignment(tasks: Sequence[FixedTask], c_lo: int, c_hi: int) -> bool:
    """Whether the summed height lies in ``[c_lo, c_hi]`` wherever a present task runs."""
    live = [t for t in tasks if t.present and t.d > 0]
    if not live:
        return True
    lo = min(t.s for t in live)
    hi = max(t.e for t in live)
    for tau in range(lo, hi):
        running = [t.c for t in live if t.s <= tau < t.e]
        if running and not c_lo <= sum(running) <= c_hi:
            return False
    return True


@dataclass(frozen=True)
class TaskDomain:
    """Bounds of one task; ``status`` is None (optional), True or False."""

    status: Optional[bool]
    s: tuple
    d: tuple
    e: tuple
    c: tuple

    def options(self) -> list[Optional[tuple]]:
        """Every fixed value ``(s, d, c)`` allowed by the bounds; ``None`` stands for absent."""
        out: list = []
        if self.status is not True:
            out.append(None)
        if self.status is False:
            return out
        for s in range(self.s[0], self.s[1] + 1):
            for d in range(max(self.d[0], self.e[0] - s), min(self.d[1], self.e[1] - s) + 1):
                for c in range(self.c[0], self.c[1] + 1):
                    out.append((s, d, c))
        return out

    def allows(self, option: Optional[tuple]) -> bool:
        if option is None:
            return self.status is not True
        if self.status is False:
            return False
        s, d, c = option
        return (
            self.s[0] <= s <= self.s[1]
            and self.d[0] <= d <= self.d[1]
            and self.e[0] <= s + d <= self.e[1]
            and self.c[0] <= c <= self.c[1]
        )

    def to_row(self) -> list[int]:
        status = {None: 2, True: 1, False: 0}[self.status]
        return [status, *self.s, *self.d, *self.e, *self.c]

    @classmethod
    def from_row(cls, row) -> "TaskDomain":
        status = {2: None, 1: True, 0: False}[row[0]]
        return cls(status, (row[1], row[2]), (row[3], row[4]), (row[5], row[6]), (row[7], row[8]))


def snapshot(task: CumulTask) -> TaskDomain:
    iv = task.iv
    return TaskDomain(
        iv.presence._value,
        (iv.start.lo, iv.start.hi),
        (iv.duration.lo, iv.duration.hi),
        (iv.end.lo, iv.end.hi),
        (task.c.lo, task.c.hi),
    )


def build_tasks(engine: Engine, domains: Sequence[TaskDomain]) -> list[CumulTask]:
    """Fresh independent variables for each domain."""
    tasks = []
    for k, dom in enumerate(domains):
        s = engine.int_var(*dom.s, name=f"t{k}.s")
        d = engine.int_var(*dom.d, name=f"t{k}.d")
        e = engine.int_var(*dom.e, name=f"t{k}.e")
        p = engine.bool_var(dom.status, name=f"t{k}.p")
        iv = IntervalVar(engine, s, d, e, p, name=f"t{k}")
        tasks.append(CumulTask(iv, engine.int_var(*dom.c, name=f"t{k}.c")))
    return tasks


def _option_arrays(options, t0: int, t1: int):
    times = np.arange(t0, t1)
    k = len(options)
    cover = np.zeros((k, len(times)), dtype=bool)
    height = np.zeros(k, dtype=np.int64)
    for r, opt in enumerate(options):
        if opt is None:
            continue
        s, d, c = opt
        cover[r] = (s <= times) & (times < s + d)
        height[r] = c
    return cover, cover * height[:, None]


def solution_mask(domains: Sequence[TaskDomain], c_lo: int, c_hi: int, limit: int = DEFAULT_LIMIT):
    """Options per task and a boolean array over their product marking solutions."""
    options = [dom.options() for dom in domains]
    sizes = [len(o) for o in options]
    total = int(np.prod(sizes, dtype=object)) if sizes else 1
    if total > limit:
        raise ValueError(f"{total} assignments exceed the enumeration limit {limit}")
    if not domains or 0 in sizes:
        return options, np.zeros(sizes, dtype=bool) if domains else np.ones((), dtype=bool)
    spans = [(o[0], o[0] + o[1]) for opts in options for o in opts if o is not None]
    t0 = min((a for a, _ in spans), default=0)
    t1 = max((b for _, b in spans), default=0)
    if t1 <= t0:
        return options, np.ones(sizes, dtype=bool)
    n = len(domains)
    cover = None
    load = None
    for i, opts in enumerate(options):
        cov, con = _option_arrays(opts, t0, t1)
        shape = [1] * n + [t1 - t0]
        shape[i] = len(opts)
        cov = cov.reshape(shape)
        con = con.reshape(shape)
        cover = cov if cover is None else cover | cov
        load = con if load is None else load + con
    ok = ~cover | ((load >= c_lo) & (load <= c_hi))
    return options, ok.all(axis=-1)


def enumerate_all(domains: Sequence[TaskDomain], c_lo: int, c_hi: int, limit: int = DEFAULT_LIMIT):
    """Every satisfying assignment as a tuple of :class:`FixedTask` (absent tasks get zeros)."""
    options, mask = solution_mask(domains, c_lo, c_hi, limit)
    out = []
    for idx in np.argwhere(mask):
        row = []
        for i, r in enumerate(idx):
            opt = options[i][r]
            if opt is None:
                row.append(FixedTask(False, 0, 0, 0, 0))
            else:
                row.append(FixedTask.make(True, *opt))
        out.append(tuple(row))
    return out


def supported_options(options, mask) -> list[list]:
    """For each task, the options that appear in at least one solution."""
    n = mask.ndim
    out = []
    for i in range(n):
        axes = tuple(a for a in range(n) if a != i)
        keep = mask.any(axis=axes) if axes else mask
        out.append([options[i][r] for r in np.flatnonzero(keep)])
    return out


@dataclass
class Counterexample:
    domains: list
    c_lo: int
    c_hi: int
    rules: RuleFlags
    prop: str
    witness: Optional[tuple] = None
    detail: str = ""

    def to_text(self) -> str:
        data = {
            "n_tasks": len(self.domains),
            "cap_lo": self.c_lo,
            "cap_hi": self.c_hi,
            "rules": [int(self.rules.mandatory), int(self.rules.height), int(self.rules.length)],
            "tasks": [d.to_row() for d in self.domains],
        }
        head = f"% violated: {self.prop}\n"
        if self.detail:
            head += "".join(f"% {line}\n" for line in self.detail.splitlines())
        return head + dump_dzn(data)

    @classmethod
    def from_text(cls, text) -> "Counterexample":
        data = parse_dzn(text)
        try:
            rows = data["tasks"]
            domains = [TaskDomain.from_row(r) for r in rows]
            flags = RuleFlags(*(bool(x) for x in data["rules"]))
            return cls(domains, data["cap_lo"], data["cap_hi"], flags, "replay")
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise ParseError(f"not a counterexample file: {exc}") from None

    def replay(self) -> Optional["Counterexample"]:
        return run_trial(self.domains, self.c_lo, self.c_hi, self.rules)


def run_trial(
    domains: Sequence[TaskDomain],
    c_lo: int,
    c_hi: int,
    rules: RuleFlags = ALL_RULES,
    stats: Optional[dict] = None,
) -> Optional[Counterexample]:
    """One timetabling pass checked against enumeration; ``None`` when sound.

    ``stats``, when given, counts passes that failed or pruned something.
    """
    options, mask = solution_mask(domains, c_lo, c_hi)
    eng = Engine()
    tasks = build_tasks(eng, domains)
    # the filter expects s + d = e to be bound consistent, as after any fixpoint
    if not eng.fixpoint():
        if mask.any():
            return Counterexample(list(domains), c_lo, c_hi, rules, "interval-consistency")
        return None
    before = [snapshot(t) for t in tasks]
    try:
        timetable_filter(tasks, c_lo, c_hi, rules)
        failed = False
    except Inconsistency:
        failed = True
    if stats is not None:
        stats["failed"] += failed
        stats["pruned"] += not failed and before != [snapshot(t) for t in tasks]
    if failed:
        if mask.any():
            witness = tuple(options[i][r] for i, r in enumerate(np.argwhere(mask)[0]))
            return Counterexample(list(domains), c_lo, c_hi, rules, "fail-soundness", witness)
        return None
    post = [snapshot(t) for t in tasks]
    for i, keep in enumerate(supported_options(options, mask)):
        for opt in keep:
            if not post[i].allows(opt):
                return Counterexample(
                    list(domains), c_lo, c_hi, rules, "prune-soundness", (i, opt),
                    detail=f"task {i} option {opt} pruned; post-domain {post[i]}",
                )
    return None


def _draw_range(rng, lo: int, hi: int) -> tuple[int, int]:
    a, b = sorted(int(x) for x in rng.integers(lo, hi + 1, size=2))
    return a, b


def random_domain(rng, horizon: int, optional_rate: float = 0.3) -> TaskDomain:
    """Consistent random bounds for one task within ``[0, horizon]``."""
    r = rng.random()
    if r < 0.10:
        c = (int(rng.integers(-3, 0)), int(rng.integers(1, 4)))  # hybrid
    elif r < 0.25:
        c = _draw_range(rng, -3, -1)
    else:
        c = _draw_range(rng, 0, 3)
    if rng.random() < 0.3:
        c = (c[0], c[0]) if rng.random() < 0.5 else (c[1], c[1])
    s = _draw_range(rng, 0, horizon - 1)
    d = _draw_range(rng, 0, min(4, horizon - s[0]))
    if rng.random() < 0.2:
        d = (max(d[0], 1), max(d[1], 1))
    e_lo, e_hi = s[0] + d[0], min(s[1] + d[1], horizon)
    if e_lo > e_hi:
        e_hi = e_lo
    e = _draw_range(rng, e_lo, e_hi) if rng.random() < 0.5 else (e_lo, e_hi)
    status = None if rng.random() < optional_rate else True
    if rng.random() < 0.03:
        status = False
    return TaskDomain(status, s, d, e, c)


def _shrink(rng, dom: TaskDomain) -> TaskDomain:
    attrs = {"s": dom.s, "d": dom.d, "c": dom.c}
    wide = [k for k, (a, b) in attrs.items() if b > a]
    if not wide:
        return dom
    k = wide[int(rng.integers(len(wide)))]
    a, b = attrs[k]
    attrs[k] = (a + 1, b) if rng.random() < 0.5 else (a, b - 1)
    return TaskDomain(dom.status, attrs["s"], attrs["d"], dom.e, attrs["c"])


def random_instance(
    rng,
    max_tasks: int = 5,
    max_horizon: int = 12,
    optional_rate: float = 0.3,
    max_product: int = 20000,
):
    """Random small instance ``(domains, c_lo, c_hi)`` with a bounded assignment count."""
    n = int(rng.integers(1, max_tasks + 1))
    horizon = int(rng.integers(2, max_horizon + 1))
    domains = [random_domain(rng, horizon, optional_rate) for _ in range(n)]
    while True:
        sizes = [max(len(d.options()), 1) for d in domains]
        if int(np.prod(sizes, dtype=object)) <= max_product:
            break
        i = int(np.argmax(sizes))
        domains[i] = _shrink(rng, domains[i])
    lo = int(rng.integers(-4, 3))
    hi = int(rng.integers(max(lo, 0), 7))
    big = sentinel_bound_for(domains, horizon)
    r = rng.random()
    if r < 0.2:
        lo = -big
    elif r < 0.4:
        hi = big
    return domains, lo, hi


def sentinel_bound_for(domains: Sequence[TaskDomain], horizon: int) -> int:
    max_abs = max((max(abs(d.c[0]), abs(d.c[1])) for d in domains), default=0)
    return max(horizon, 1) * max(max_abs, 1) * max(len(domains), 1) + 1


RULE_CHOICES = (ALL_RULES, FORBID_ONLY, RuleFlags(True, False, False), RuleFlags(False, True, True))


def differential_test(seed: int, trials: int, **kwargs):
    """Run ``trials`` random soundness trials; returns ``(counterexample or None, stats)``."""
    rng = np.random.default_rng(seed)
    stats = {"trials": 0, "tasks": 0, "optional": 0, "failed": 0, "pruned": 0}
    for _ in range(trials):
        domains, lo, hi = random_instance(rng, **kwargs)
        rules = ALL_RULES if rng.random() < 0.7 else RULE_CHOICES[int(rng.integers(len(RULE_CHOICES)))]
        stats["trials"] += 1
        stats["tasks"] += len(domains)
        stats["optional"] += sum(d.status is None for d in domains)
        cex = run_trial(domains, lo, hi, rules, stats)
        if cex is not None:
            return cex, stats
    return None, stats


def random_fixed_instance(rng, max_tasks: int = 5, max_horizon: int = 12):
    """Fully fixed tasks (present or absent) and a capacity range."""
    n = int(rng.integers(1, max_tasks + 1))
    horizon = int(rng.integers(1, max_horizon + 1))
    tasks = []
    for _ in range(n):
        s = int(rng.integers(0, horizon))
        d = int(rng.integers(0, horizon - s + 1))
        c = int(rng.integers(-3, 4))
        tasks.append(FixedTask.make(bool(rng.random() < 0.85), s, d, c))
    lo = int(rng.integers(-4, 3))
    hi = int(rng.integers(max(lo, 0), 7))
    return tasks, lo, hi


def timeline_verdict(tasks: Sequence[FixedTask], c_lo: int, c_hi: int) -> bool:
    """Whether :func:`initialize_timeline` accepts the fixed tasks."""
    domains = [
        TaskDomain(t.present, (t.s, t.s), (t.d, t.d), (t.e, t.e), (t.c, t.c)) for t in tasks
    ]
    eng = Engine()
    built = build_tasks(eng, domains)
    try:
        initialize_timeline(built, c_lo, c_hi)
    except Inconsistency:
        return False
    return True


def check_fixed_equivalence(seed: int, trials: int, **kwargs):
    """Compare the timeline check with :func:`check_assignment`; returns the first mismatch."""
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        tasks, lo, hi = random_fixed_instance(rng, **kwargs)
        if timeline_verdict(tasks, lo, hi) != check_assignment(tasks, lo, hi):
            return tasks, lo, hi
    return None


def _satisfies(option, decision) -> bool:
    i, attr, op, v = decision
    if attr == "p":
        return (option is not None) == v
    if option is None:
        return True
    s, d, c = option
    x = {"s": s, "d": d, "e": s + d, "c": c}[attr]
    return x <= v if op == "le" else x >= v


def _decision_vars(task: CumulTask):
    iv = task.iv
    return {"s": iv.start, "d": iv.duration, "e": iv.end, "c": task.c}


def propagator_trial(
    domains: Sequence[TaskDomain],
    c_lo: int,
    c_hi: int,
    rng,
    incremental: bool = True,
    rules="all",
    max_nodes: int = 200,
) -> Optional[str]:
    """Random depth-first search over the posted propagator, checked at every node.

    Decisions halve one bound of one task or fix a presence. At each node the
    solutions compatible with the decisions so far must survive propagation,
    and once every task is decided the propagator must accept exactly the
    valid assignments. Returns a description of the first violation or None.
    """
    options, mask = solution_mask(domains, c_lo, c_hi)
    solutions = [tuple(options[i][r] for i, r in enumerate(idx)) for idx in np.argwhere(mask)]
    eng = Engine()
    tasks = build_tasks(eng, domains)
    prop = eng.post(GeneralizedCumulative(eng, tasks, c_lo, c_hi, rules=rules))
    prop.incremental = incremental
    nodes = [0]

    def compatible(decisions):
        return [sol for sol in solutions if all(_satisfies(sol[dec[0]], dec) for dec in decisions)]

    def visit(decisions) -> Optional[str]:
        nodes[0] += 1
        alive = compatible(decisions)
        if not eng.fixpoint():
            if alive:
                return f"failure with {len(alive)} solutions left after {decisions}"
            return None
        post = [snapshot(t) for t in tasks]
        for sol in alive:
            for i, opt in enumerate(sol):
                if not post[i].allows(opt):
                    return f"task {i} option {opt} pruned after {decisions}; domain {post[i]}"
        open_tasks = [
            i for i, t in enumerate(tasks)
            if t.iv.presence._value is not False and not t.is_fixed()
        ]
        if not open_tasks:
            fixed = [
                FixedTask.make(True, t.iv.start.lo, t.iv.duration.lo, t.c.lo)
                if t.iv.presence._value else FixedTask(False, 0, 0, 0, 0)
                for t in tasks
            ]
            if not check_assignment(fixed, c_lo, c_hi):
                return f"accepted invalid assignment {fixed}"
            return None
        if nodes[0] >= max_nodes:
            return None
        i = open_tasks[int(rng.integers(len(open_tasks)))]
        task = tasks[i]
        if task.iv.presence._value is None and rng.random() < 0.4:
            v = bool(rng.random() < 0.5)
            branches = [(i, "p", "eq", v), (i, "p", "eq", not v)]
        else:
            wide = [(a, var) for a, var in _decision_vars(task).items() if not var.is_fixed()]
            if not wide:
                branches = [(i, "p", "eq", True), (i, "p", "eq", False)]
            else:
                a, var = wide[int(rng.integers(len(wide)))]
                mid = (var.lo + var.hi) // 2
                branches = [(i, a, "le", mid), (i, a, "ge", mid + 1)]
                if rng.random() < 0.5:
                    branches.reverse()
        for dec in branches:
            eng.save()
            j, attr, op, v = dec
            try:
                if attr == "p":
                    tasks[j].iv.presence.assign(v)
                else:
                    var = _decision_vars(tasks[j])[attr]
                    if op == "le":
                        var.set_max(v)
                    else:
                        var.set_min(v)
                err = visit(decisions + [dec])
            except Inconsistency:
                eng._clear_queue()
                alive = compatible(decisions + [dec])
                err = f"decision failed with {len(alive)} solutions left" if alive else None
            eng.restore()
            if err:
                return err
            if nodes[0] >= max_nodes:
                break
        return None

    return visit([])
