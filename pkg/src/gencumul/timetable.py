"""Timetable filtering for the generalized cumulative constraint.

The timeline is a sorted sequence of time points. Each point starts a
rectangle of the profile and stores the minimum and maximum aggregated height
over that rectangle together with the number of fixed parts covering it.
Points are held in parallel lists, so ``prev``/``next`` are index
arithmetic; every task keeps direct indices to the points of its earliest
start and latest end.

The filtering pass confronts every unfixed task with the timeline built at
entry and applies four rules: Forbid (push the time window away from
rectangles where the task cannot run), Mandatory (force a task that is the
only way to repair a rectangle), Height and Length.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .cumul import CumulTask
from .engine import Engine, Inconsistency, Propagator
from .interval import tighten_max, tighten_min

__all__ = [
    "CapacityRange",
    "GeneralizedCumulative",
    "RuleFlags",
    "TimePoint",
    "Timeline",
    "check_if_mandatory",
    "check_outside",
    "initialize_timeline",
    "remove_fruitless_fixed_tasks",
    "select_rules",
    "timetable_filter",
    "unfixed_span",
]

_S_MIN, _E_MAX, _S_MAX, _E_MIN = 0, 1, 2, 3
_INF = float("inf")


@dataclass(frozen=True)
class CapacityRange:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty capacity range [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class RuleFlags:
    """Which rules run besides Forbid, which is always on."""

    mandatory: bool = True
    height: bool = True
    length: bool = True

    @property
    def any(self) -> bool:
        return self.mandatory or self.height or self.length


ALL_RULES = RuleFlags(True, True, True)
FORBID_ONLY = RuleFlags(False, False, False)


class TimePoint:
    """Read-only view of one time point."""

    __slots__ = ("_tl", "index")

    def __init__(self, timeline: "Timeline", index: int):
        self._tl = timeline
        self.index = index

    @property
    def time(self) -> int:
        return self._tl.time[self.index]

    @property
    def pmin(self) -> int:
        return self._tl.pmin[self.index]

    @property
    def pmax(self) -> int:
        return self._tl.pmax[self.index]

    @property
    def nfixed(self) -> int:
        return self._tl.nfp[self.index]

    @property
    def prev(self) -> Optional["TimePoint"]:
        return TimePoint(self._tl, self.index - 1) if self.index > 0 else None

    @property
    def next(self) -> Optional["TimePoint"]:
        if self.index + 1 < len(self._tl.time):
            return TimePoint(self._tl, self.index + 1)
        return None

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.time, self.pmin, self.pmax, self.nfixed)

    def __repr__(self) -> str:
        return f"TimePoint{self.as_tuple()}"


class Timeline:
    """Profile of a task set: parallel lists plus per-task entry indices."""

    __slots__ = ("time", "pmin", "pmax", "nfp", "start_tp", "end_tp")

    def __init__(self, n_tasks: int):
        self.time: list[int] = []
        self.pmin: list[int] = []
        self.pmax: list[int] = []
        self.nfp: list[int] = []
        self.start_tp = [-1] * n_tasks
        self.end_tp = [-1] * n_tasks

    def __len__(self) -> int:
        return len(self.time)

    def point(self, index: int) -> TimePoint:
        return TimePoint(self, index)

    def points(self) -> list[TimePoint]:
        return [TimePoint(self, k) for k in range(len(self.time))]

    def as_tuples(self) -> list[tuple[int, int, int, int]]:
        return list(zip(self.time, self.pmin, self.pmax, self.nfp))

    def tp_start_min(self, i: int) -> TimePoint:
        return TimePoint(self, self.start_tp[i])

    def tp_end_max(self, i: int) -> TimePoint:
        return TimePoint(self, self.end_tp[i])


def initialize_timeline(
    tasks: Sequence[CumulTask], c_lo: int, c_hi: int, segments: Optional[list] = None
) -> Timeline:
    """Build the timeline of the non-absent ``tasks`` and check it.

    Raises :class:`Inconsistency` when a rectangle covered by some fixed part
    has a profile range that misses ``[c_lo, c_hi]``. With ``segments`` (a
    sorted list of disjoint closed ``(a, b)`` ranges) only rectangles meeting
    a segment are checked; the caller guarantees the profile is exact there.
    """
    check = segments is None
    events = []
    append = events.append
    for i, task in enumerate(tasks):
        iv = task.iv
        status = iv.presence._value
        if status is False:
            continue
        code = 4 * i
        s_lo, e_hi = iv.start.lo, iv.end.hi
        append((s_lo, code + _S_MIN))
        append((e_hi, code + _E_MAX))
        if status:
            s_hi, e_lo = iv.start.hi, iv.end.lo
            if s_hi < e_lo:
                append((s_hi, code + _S_MAX))
                append((e_lo, code + _E_MIN))
    events.sort()

    tl = Timeline(len(tasks))
    times, pmins, pmaxs, nfps = tl.time, tl.pmin, tl.pmax, tl.nfp
    start_tp, end_tp = tl.start_tp, tl.end_tp
    p_lo = p_hi = fp = 0
    last = None
    k = -1
    for t, code in events:
        if t != last:
            if check and fp > 0 and (p_lo > c_hi or p_hi < c_lo):
                raise Inconsistency("timeline")
            times.append(t)
            pmins.append(p_lo)
            pmaxs.append(p_hi)
            nfps.append(fp)
            k += 1
            last = t
        i, kind = divmod(code, 4)
        c = tasks[i].c
        if kind == _S_MIN:
            cl, ch = c.lo, c.hi
            p_lo += cl if cl < 0 else 0
            p_hi += ch if ch > 0 else 0
            start_tp[i] = k
        elif kind == _E_MAX:
            cl, ch = c.lo, c.hi
            p_lo -= cl if cl < 0 else 0
            p_hi -= ch if ch > 0 else 0
            end_tp[i] = k
        elif kind == _S_MAX:
            cl, ch = c.lo, c.hi
            p_lo += cl if cl > 0 else 0
            p_hi += ch if ch < 0 else 0
            fp += 1
        else:
            cl, ch = c.lo, c.hi
            p_lo -= cl if cl > 0 else 0
            p_hi -= ch if ch < 0 else 0
            fp -= 1
        pmins[k] = p_lo
        pmaxs[k] = p_hi
        nfps[k] = fp
    if fp > 0 and (p_lo > c_hi or p_hi < c_lo):
        raise Inconsistency("timeline")
    if not check:
        last_k = len(times) - 1
        for k in range(last_k):
            if nfps[k] > 0 and (pmins[k] > c_hi or pmaxs[k] < c_lo):
                if _touches(segments, times[k], times[k + 1] - 1):
                    raise Inconsistency("timeline")
    return tl


def _touches(segments, a: int, b: int) -> bool:
    i = bisect_right(segments, (b, _INF)) - 1
    return i >= 0 and segments[i][1] >= a


def _merge(ranges) -> list:
    out = []
    for a, b in sorted(ranges):
        if out and a <= out[-1][1] + 1:
            if b > out[-1][1]:
                out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return out


def check_if_mandatory(task: CumulTask, tl: Timeline, k: int, c_lo: int, c_hi: int) -> bool:
    """Mandatory rule at time point ``k``; returns whether it fired."""
    if tl.nfp[k] <= 0:
        return False
    c = task.c
    cl, ch = c.lo, c.hi
    without_lo = tl.pmin[k] - (cl if cl < 0 else 0)
    without_hi = tl.pmax[k] - (ch if ch > 0 else 0)
    if not (without_lo > c_hi or without_hi < c_lo):
        return False
    iv = task.iv
    p = iv.presence
    if p._value is None:
        p.assign(True)
    tighten_max(p, iv.start, tl.time[k])
    tighten_min(p, iv.end, tl.time[k + 1])
    deficit = c_lo - without_hi
    overload = c_hi - without_lo
    if deficit > 0:
        tighten_min(p, c, deficit)
    if overload < 0:
        tighten_max(p, c, overload)
    return True


def unfixed_span(tasks: Sequence[CumulTask]) -> Optional[tuple[int, int]]:
    """``(min s_min, max e_max)`` over the non-absent unfixed tasks, or None."""
    lo = hi = None
    for t in tasks:
        iv = t.iv
        if iv.presence._value is False or t.is_fixed():
            continue
        if lo is None or iv.start.lo < lo:
            lo = iv.start.lo
        if hi is None or iv.end.hi > hi:
            hi = iv.end.hi
    return None if lo is None else (lo, hi)


def remove_fruitless_fixed_tasks(tasks: Sequence[CumulTask]) -> list[CumulTask]:
    """Drop fixed tasks lying wholly outside the span of the unfixed ones.

    Returns an empty list when every task is fixed. The profile of the kept
    tasks is exact only inside the span, so a consistency check built on
    them must be restricted to it (see :func:`check_outside`).
    """
    span = unfixed_span(tasks)
    if span is None:
        return []
    lo, hi = span
    kept = []
    for t in tasks:
        iv = t.iv
        if iv.presence._value is False:
            continue
        if t.is_fixed() and (iv.end.lo <= lo or iv.start.lo >= hi):
            continue
        kept.append(t)
    return kept


def check_outside(tasks: Sequence[CumulTask], span: tuple[int, int], c_lo: int, c_hi: int) -> None:
    """Check the profile outside ``span``, where only fixed tasks can run."""
    fixed = [t for t in tasks if t.is_fixed() and t.iv.presence._value]
    if fixed:
        lo, hi = span
        initialize_timeline(fixed, c_lo, c_hi, segments=[(-_INF, lo - 1), (hi, _INF)])


def select_rules(
    tasks: Sequence[CumulTask],
    c_lo: int,
    c_hi: int,
    lo_sentinel: bool = False,
    hi_sentinel: bool = False,
) -> RuleFlags:
    """Skip rules that cannot prune on this task set.

    Mandatory needs a task whose removal can break a real bound: a
    negative-capable task against a real maximum, or a positive-capable task
    against a real minimum. Height needs an unfixed height, Length an unfixed
    duration.
    """
    neg = pos = var_height = var_length = False
    for t in tasks:
        if t.iv.presence._value is False:
            continue
        c = t.c
        cl, ch = c.lo, c.hi
        if cl < 0:
            neg = True
        if ch > 0:
            pos = True
        if cl != ch:
            var_height = True
        d = t.iv.duration
        if d.lo != d.hi:
            var_length = True
    mandatory = (neg and not hi_sentinel) or (pos and not lo_sentinel)
    return RuleFlags(mandatory, var_height, var_length)


def timetable_filter(
    tasks: Sequence[CumulTask],
    c_lo: int,
    c_hi: int,
    rules: RuleFlags = ALL_RULES,
    timeline: Optional[Timeline] = None,
    only: Optional[Sequence[int]] = None,
) -> Timeline:
    """One timetabling pass over ``tasks`` against capacity ``[c_lo, c_hi]``.

    The timeline is built once at entry; adjustments made while processing a
    task are visible to that task's later loops through the live bounds but
    never alter the profile used for the other tasks. ``only`` restricts the
    pass to the given task positions (ascending). Raises
    :class:`Inconsistency` on failure.
    """
    tl = timeline if timeline is not None else initialize_timeline(tasks, c_lo, c_hi)
    times, pmins, pmaxs, nfps = tl.time, tl.pmin, tl.pmax, tl.nfp
    mandatory, height, length = rules.mandatory, rules.height, rules.length
    third_step = mandatory or height or length

    for i in range(len(tasks)) if only is None else only:
        task = tasks[i]
        iv = task.iv
        p = iv.presence
        if p._value is False or task.is_fixed():
            continue
        s, d, e, c = iv.start, iv.duration, iv.end, task.c

        # forward sweep over [s_min, min(s_max, e_min))
        k = tl.start_tp[i]
        while times[k] < min(s.hi, e.lo):
            cl, ch = c.lo, c.hi
            if pmins[k] + (cl if cl > 0 else 0) > c_hi or pmaxs[k] + (ch if ch < 0 else 0) < c_lo:
                nxt = times[k + 1]
                tighten_min(p, s, nxt if d.lo > 0 else min(nxt, e.lo))
            elif mandatory and nfps[k] > 0:
                check_if_mandatory(task, tl, k, c_lo, c_hi)
            if p._value is False:
                break
            k += 1
        if p._value is False:
            continue

        # backward sweep over [max(s_max, e_min), e_max)
        b = tl.end_tp[i] - 1
        while b >= 0 and times[b + 1] > max(s.hi, e.lo):
            cl, ch = c.lo, c.hi
            if pmins[b] + (cl if cl > 0 else 0) > c_hi or pmaxs[b] + (ch if ch < 0 else 0) < c_lo:
                tighten_max(p, e, times[b] if d.lo > 0 else max(times[b], s.hi))
            elif mandatory and nfps[b] > 0:
                check_if_mandatory(task, tl, b, c_lo, c_hi)
            if p._value is False:
                break
            b -= 1
        if p._value is False or not third_step:
            continue

        if s.hi < e.lo:
            # fixed part: Mandatory and Height, case with a fixed part
            if not (mandatory or height):
                continue
            # the fixed part may have appeared during the sweeps: start at the
            # rectangle holding s_max, never before it
            while k > 0 and times[k] > s.hi:
                k -= 1
            while k + 1 < len(times) and times[k + 1] <= s.hi:
                k += 1
            while times[k] < e.lo:
                if mandatory and nfps[k] > 0:
                    check_if_mandatory(task, tl, k, c_lo, c_hi)
                    if p._value is False:
                        break
                if height:
                    cl, ch = c.lo, c.hi
                    need = c_lo - (pmaxs[k] - (ch if ch > 0 else 0))
                    room = c_hi - (pmins[k] - (cl if cl < 0 else 0))
                    if p._value is True:
                        need += ch if ch < 0 else 0
                        room += cl if cl > 0 else 0
                    tighten_min(p, c, need)
                    tighten_max(p, c, room)
                    if p._value is False:
                        break
                k += 1
            continue

        # no fixed part: Length and Height over the minimum overlapping interval
        d_star = 0
        s_prime = s.lo
        cl, ch = c.lo, c.hi
        if k > tl.start_tp[i]:
            # the last point swept forward holds e_min - 1
            need_star = c_lo - pmaxs[k - 1] + (ch if ch > 0 else 0)
            room_star = c_hi - pmins[k - 1] + (cl if cl < 0 else 0)
        else:
            need_star = None
            room_star = None
        while times[k] < s.hi:
            t = times[k]
            if t - s_prime > d_star:
                d_star = t - s_prime
            cl, ch = c.lo, c.hi
            if pmins[k] + (cl if cl > 0 else 0) > c_hi or pmaxs[k] + (ch if ch < 0 else 0) < c_lo:
                s_prime = times[k + 1]
            elif mandatory and nfps[k] > 0:
                check_if_mandatory(task, tl, k, c_lo, c_hi)
                if p._value is False:
                    break
                cl, ch = c.lo, c.hi
            need = c_lo - pmaxs[k] + (ch if ch > 0 else 0)
            room = c_hi - pmins[k] + (cl if cl < 0 else 0)
            if need_star is None or need < need_star:
                need_star = need
            if room_star is None or room > room_star:
                room_star = room
            k += 1
        if p._value is False:
            continue
        if times[k] == s.hi and k + 1 < len(times):
            # a task starting exactly at s_max runs in the rectangle opening there
            cl, ch = c.lo, c.hi
            need = c_lo - pmaxs[k] + (ch if ch > 0 else 0)
            room = c_hi - pmins[k] + (cl if cl < 0 else 0)
            if need_star is None or need < need_star:
                need_star = need
            if room_star is None or room > room_star:
                room_star = room
        if length:
            if e.hi - s_prime > d_star:
                d_star = e.hi - s_prime
            tighten_max(p, d, d_star)
            if p._value is False:
                continue
        if height and d.lo > 0 and need_star is not None:
            tighten_min(p, c, need_star)
            tighten_max(p, c, room_star)
    return tl


RulesArg = Union[str, RuleFlags]


class _TaskWatch(Propagator):
    """Records that task ``index`` changed and wakes the owning constraint."""

    def __init__(self, owner: "GeneralizedCumulative", index: int):
        super().__init__(owner.engine)
        self.owner = owner
        self.index = index

    def propagate(self):
        self.owner._changed.add(self.index)
        self.engine.schedule(self.owner)


class GeneralizedCumulative(Propagator):
    """Keeps the summed height of executing tasks within ``[c_lo, c_hi]``.

    ``rules`` is ``"auto"`` (skip rules that cannot prune), ``"all"``,
    ``"forbid-only"`` or an explicit :class:`RuleFlags`.

    A call only re-filters the tasks whose window meets the window of a task
    changed since the previous successful call; every other task would be
    left untouched by a full pass because its own bounds and the profile over
    its window are the same as when it was last filtered. The timeline is
    rebuilt per call from the tasks overlapping that region. After a
    backtrack, a failure or on the first call the pass covers every task.
    """

    def __init__(
        self,
        engine: Engine,
        tasks: Sequence[CumulTask],
        c_lo: int,
        c_hi: int,
        rules: RulesArg = "auto",
        lo_sentinel: bool = False,
        hi_sentinel: bool = False,
    ):
        super().__init__(engine)
        if c_lo > c_hi:
            raise ValueError(f"empty capacity range [{c_lo}, {c_hi}]")
        if isinstance(rules, str) and rules not in ("auto", "all", "forbid-only"):
            raise ValueError(f"unknown rule set {rules!r}")
        self.tasks = list(tasks)
        self.c_lo = c_lo
        self.c_hi = c_hi
        self.rules = rules
        self.lo_sentinel = lo_sentinel
        self.hi_sentinel = hi_sentinel
        self.calls = 0
        self.incremental = True
        self._changed: set[int] = set()
        self._valid = False
        self._restores = -1
        n = len(self.tasks)
        self._win_lo = [0] * n
        self._win_hi = [0] * n
        self._index_starts: list = []
        self._index_order: list = []
        self._index_span = 0
        self._index_lo = None
        self._index_hi = None

    def setup(self):
        for i, t in enumerate(self.tasks):
            watch = _TaskWatch(self, i)
            iv = t.iv
            seen = set()
            for var in (iv.start, iv.duration, iv.end, iv.presence, t.c):
                key = id(getattr(var, "base", var))
                if key not in seen:
                    seen.add(key)
                    var.subscribe(watch)

    def rule_flags(self, tasks: Sequence[CumulTask]) -> RuleFlags:
        if self.rules == "auto":
            return select_rules(tasks, self.c_lo, self.c_hi, self.lo_sentinel, self.hi_sentinel)
        if self.rules == "all":
            return ALL_RULES
        if self.rules == "forbid-only":
            return FORBID_ONLY
        return self.rules

    def _reindex(self):
        """Index tasks by earliest start; windows only shrink until a restore."""
        wins = sorted((t.iv.start.lo, i) for i, t in enumerate(self.tasks))
        self._index_starts = [w[0] for w in wins]
        self._index_order = [w[1] for w in wins]
        self._index_span = max((t.iv.end.hi - t.iv.start.lo for t in self.tasks), default=0)
        for i, t in enumerate(self.tasks):
            self._win_lo[i] = t.iv.start.lo
            self._win_hi[i] = t.iv.end.hi
        self._index_lo = list(self._win_lo)
        self._index_hi = list(self._win_hi)

    def _overlapping(self, segments) -> list[int]:
        """Non-absent tasks whose current window meets a segment, in order."""
        tasks = self.tasks
        starts, order, span = self._index_starts, self._index_order, self._index_span
        found = set()
        for a, b in segments:
            lo = bisect_left(starts, a - span)
            hi = bisect_right(starts, b)
            for j in order[lo:hi]:
                iv = tasks[j].iv
                if iv.presence._value is not False and iv.start.lo <= b and iv.end.hi >= a:
                    found.add(j)
        return sorted(found)

    def propagate(self):
        self.calls += 1
        eng = self.engine
        full = not (self.incremental and self._valid and self._restores == eng.restores)
        changed = self._changed
        self._changed = set()
        self._restores = eng.restores
        self._valid = False
        if full:
            self._propagate_full()
        else:
            self._propagate_local(changed)
        self._valid = True

    def _propagate_full(self):
        tasks = self.tasks
        lo, hi = self._index_lo, self._index_hi
        if lo is None or any(
            t.iv.start.lo < lo[i] or t.iv.end.hi > hi[i] for i, t in enumerate(tasks)
        ):
            self._reindex()
        for i, t in enumerate(tasks):
            self._win_lo[i] = t.iv.start.lo
            self._win_hi[i] = t.iv.end.hi
        active = [t for t in tasks if t.iv.presence._value is not False]
        span = unfixed_span(active)
        if span is None:
            # every task fixed: only the consistency check remains
            initialize_timeline(active, self.c_lo, self.c_hi)
            return
        check_outside(active, span, self.c_lo, self.c_hi)
        reduced = remove_fruitless_fixed_tasks(active)
        tl = initialize_timeline(reduced, self.c_lo, self.c_hi, segments=[(span[0], span[1] - 1)])
        timetable_filter(reduced, self.c_lo, self.c_hi, self.rule_flags(reduced), timeline=tl)

    def _propagate_local(self, changed: set):
        if not changed:
            return
        tasks = self.tasks
        win_lo, win_hi = self._win_lo, self._win_hi
        # windows as of the previous call contain the current ones
        touched = _merge((win_lo[j], win_hi[j]) for j in changed)
        for j in changed:
            iv = tasks[j].iv
            win_lo[j] = iv.start.lo
            win_hi[j] = iv.end.hi
        process = [i for i in self._overlapping(touched) if not tasks[i].is_fixed()]
        region = _merge(
            touched + [(tasks[i].iv.start.lo, tasks[i].iv.end.hi) for i in process]
        )
        members = self._overlapping(region)
        local = [tasks[i] for i in members]
        position = {j: k for k, j in enumerate(members)}
        tl = initialize_timeline(local, self.c_lo, self.c_hi, segments=region)
        if process:
            only = [position[i] for i in process]
            timetable_filter(local, self.c_lo, self.c_hi, self.rule_flags(local), timeline=tl, only=only)
