"""Conditional time-interval variables.

An interval is the tuple (start, duration, end, presence) with ``start +
duration = end`` kept bound consistent by an internal propagator. Tightening
an attribute of an optional interval past its domain makes the interval
absent instead of failing; on a present interval it fails.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence, TypeVar

from .engine import BoolVar, Engine, Inconsistency, IntVar, Propagator

__all__ = ["IntervalVar", "make_interval", "status_partition", "tighten_min", "tighten_max"]


def tighten_min(presence: BoolVar, var, v: int) -> bool:
    """Raise ``var``'s lower bound under the absence semantics of ``presence``."""
    status = presence._value
    if status is False or v <= var.lo:
        return False
    if v > var.hi:
        if status is None:
            presence.assign(False)
            return True
        raise Inconsistency(var.name)
    return var.set_min(v)


def tighten_max(presence: BoolVar, var, v: int) -> bool:
    status = presence._value
    if status is False or v >= var.hi:
        return False
    if v < var.lo:
        if status is None:
            presence.assign(False)
            return True
        raise Inconsistency(var.name)
    return var.set_max(v)


class _SumBounds(Propagator):
    """Bound consistency of start + duration = end, skipped once absent."""

    def __init__(self, iv: "IntervalVar"):
        super().__init__(iv.engine)
        self.iv = iv

    def setup(self):
        iv = self.iv
        for var in (iv.start, iv.duration, iv.end):
            var.subscribe(self)
        iv.presence.subscribe(self)

    def propagate(self):
        iv = self.iv
        p = iv.presence
        s, d, e = iv.start, iv.duration, iv.end
        while p._value is not False:
            s_lo = max(s.lo, e.lo - d.hi)
            s_hi = min(s.hi, e.hi - d.lo)
            d_lo = max(d.lo, e.lo - s.hi)
            d_hi = min(d.hi, e.hi - s.lo)
            e_lo = max(e.lo, s.lo + d.lo)
            e_hi = min(e.hi, s.hi + d.hi)
            if s_lo > s_hi or d_lo > d_hi or e_lo > e_hi:
                if p._value is None:
                    p.assign(False)
                    return
                raise Inconsistency(iv.name)
            changed = s.set_min(s_lo) | s.set_max(s_hi)
            changed |= d.set_min(d_lo) | d.set_max(d_hi)
            changed |= e.set_min(e_lo) | e.set_max(e_hi)
            if not changed:
                return


class IntervalVar:
    """Conditional interval ``<start, duration, end, presence>``.

    The component variables may be shared with other intervals; the fresh
    intervals built for step functions share start (or end) and presence
    with their parent.
    """

    def __init__(
        self,
        engine: Engine,
        start: IntVar,
        duration: IntVar,
        end: IntVar,
        presence: BoolVar,
        name: Optional[str] = None,
    ):
        if duration.lo < 0:
            raise ValueError("duration must be non-negative")
        self.engine = engine
        self.start = start
        self.duration = duration
        self.end = end
        self.presence = presence
        self.name = name
        self._link = engine.post(_SumBounds(self))

    # -- status ------------------------------------------------------------

    @property
    def status(self) -> Optional[bool]:
        return self.presence._value

    def is_present(self) -> bool:
        return self.presence._value is True

    def is_absent(self) -> bool:
        return self.presence._value is False

    def is_optional(self) -> bool:
        return self.presence._value is None

    def set_present(self) -> bool:
        return self.presence.assign(True)

    def set_absent(self) -> bool:
        return self.presence.assign(False)

    # -- bounds ------------------------------------------------------------

    @property
    def s_min(self) -> int:
        return self.start.lo

    @property
    def s_max(self) -> int:
        return self.start.hi

    @property
    def e_min(self) -> int:
        return self.end.lo

    @property
    def e_max(self) -> int:
        return self.end.hi

    @property
    def d_min(self) -> int:
        return self.duration.lo

    @property
    def d_max(self) -> int:
        return self.duration.hi

    def has_fixed_part(self) -> bool:
        return self.start.hi < self.end.lo

    def is_fixed(self) -> bool:
        if self.presence._value is False:
            return True
        return (
            self.presence._value is True
            and self.start.is_fixed()
            and self.duration.is_fixed()
            and self.end.is_fixed()
        )

    def set_start_min(self, v: int) -> bool:
        return tighten_min(self.presence, self.start, v)

    def set_start_max(self, v: int) -> bool:
        return tighten_max(self.presence, self.start, v)

    def set_end_min(self, v: int) -> bool:
        return tighten_min(self.presence, self.end, v)

    def set_end_max(self, v: int) -> bool:
        return tighten_max(self.presence, self.end, v)

    def set_duration_min(self, v: int) -> bool:
        return tighten_min(self.presence, self.duration, v)

    def set_duration_max(self, v: int) -> bool:
        return tighten_max(self.presence, self.duration, v)

    def tighten(self, attr: str, lo: Optional[int] = None, hi: Optional[int] = None) -> bool:
        """Tighten attribute ``'s'``, ``'d'`` or ``'e'`` to ``[lo, hi]``."""
        try:
            var = {"s": self.start, "d": self.duration, "e": self.end}[attr]
        except KeyError:
            raise ValueError(f"unknown attribute {attr!r}") from None
        changed = False
        if lo is not None:
            changed |= tighten_min(self.presence, var, lo)
        if hi is not None:
            changed |= tighten_max(self.presence, var, hi)
        return changed

    def __repr__(self) -> str:
        status = {None: "?", True: "present", False: "absent"}[self.presence._value]
        return (
            f"Interval({self.name or ''} s=[{self.start.lo},{self.start.hi}] "
            f"d=[{self.duration.lo},{self.duration.hi}] "
            f"e=[{self.end.lo},{self.end.hi}] {status})"
        )


def make_interval(
    engine: Engine,
    start: tuple[int, int],
    duration: tuple[int, int],
    end: tuple[int, int],
    optional: bool = False,
    name: Optional[str] = None,
) -> IntervalVar:
    """Create an interval from ``(lo, hi)`` ranges.

    Incompatible ranges are not detected here; the first fixpoint fails (or
    makes an optional interval absent).
    """
    label = name or "iv"
    s = engine.int_var(*start, name=f"{label}.s")
    d = engine.int_var(*duration, name=f"{label}.d")
    e = engine.int_var(*end, name=f"{label}.e")
    p = engine.bool_var(None if optional else True, name=f"{label}.p")
    return IntervalVar(engine, s, d, e, p, name=name)


T = TypeVar("T")


def status_partition(items: Iterable[T], key=None) -> tuple[list[T], list[T], list[T]]:
    """Split into (optional, required, excluded) by presence status.

    ``key`` maps an item to its :class:`IntervalVar`; by default the item
    itself or its ``iv`` attribute is used.
    """
    optional, required, excluded = [], [], []
    for item in items:
        iv = key(item) if key else getattr(item, "iv", item)
        status = iv.presence._value
        if status is None:
            optional.append(item)
        elif status:
            required.append(item)
        else:
            excluded.append(item)
    return optional, required, excluded
