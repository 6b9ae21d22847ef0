"""Instance records for the three benchmark problems.

Each record parses from and dumps to the data-file dialect of
:mod:`gencumul.dzn`. Successor sets are 1-based in files and 0-based in
memory.
"""

from __future__ import annotations

from dataclasses import dataclass
from graphlib import CycleError, TopologicalSorter
from typing import Union

import numpy as np

from .dzn import ParseError, dump_dzn, parse_dzn

__all__ = [
    "MespInstance",
    "RcpspCprInstance",
    "SmicInstance",
    "generate_mesp",
    "parse_instance",
    "parse_mesp",
    "parse_rcpsp_cpr",
    "parse_smic",
]

Text = Union[str, bytes]


def _get(data: dict, key: str):
    if key not in data:
        raise ParseError(f"missing key {key!r}")
    return data[key]


def _int(data: dict, key: str, lo: int | None = None) -> int:
    v = _get(data, key)
    if not isinstance(v, int):
        raise ParseError(f"{key} must be an integer")
    if lo is not None and v < lo:
        raise ParseError(f"{key} must be >= {lo}, got {v}")
    return v


def _vec(data: dict, key: str, n: int, lo: int | None = None) -> tuple[int, ...]:
    v = _get(data, key)
    if not isinstance(v, list) or not all(isinstance(x, int) for x in v):
        raise ParseError(f"{key} must be a 1-D integer array")
    if len(v) != n:
        raise ParseError(f"{key} has length {len(v)}, expected {n}")
    if lo is not None and any(x < lo for x in v):
        raise ParseError(f"{key} entries must be >= {lo}")
    return tuple(v)


def _matrix(data: dict, key: str, rows: int, cols: int, lo: int | None = None):
    v = _get(data, key)
    if not isinstance(v, list) or not all(isinstance(r, list) for r in v):
        raise ParseError(f"{key} must be a 2-D integer array")
    if len(v) != rows or any(len(r) != cols for r in v):
        shape = f"{len(v)}x{len(v[0]) if v else 0}"
        raise ParseError(f"{key} has shape {shape}, expected {rows}x{cols}")
    if not all(isinstance(x, int) for r in v for x in r):
        raise ParseError(f"{key} must contain integers")
    if lo is not None and any(x < lo for r in v for x in r):
        raise ParseError(f"{key} entries must be >= {lo}")
    return tuple(tuple(r) for r in v)


def _succ_sets(data: dict, key: str, n: int) -> tuple[frozenset, ...]:
    v = _get(data, key)
    if not isinstance(v, list) or len(v) != n:
        raise ParseError(f"{key} must be an array of {n} sets")
    out = []
    for i, row in enumerate(v):
        if isinstance(row, list):
            row = frozenset(row)
        if not isinstance(row, frozenset) or not all(isinstance(x, int) for x in row):
            raise ParseError(f"{key}[{i + 1}] must be a set of task indices")
        if any(not 1 <= x <= n for x in row):
            raise ParseError(f"{key}[{i + 1}] refers to a task outside 1..{n}")
        out.append(frozenset(x - 1 for x in row))
    return tuple(out)


@dataclass(frozen=True)
class RcpspCprInstance:
    n_res: int
    rc: tuple
    n_cp_res: int
    rcp: tuple
    n_tasks: int
    d: tuple
    rr: tuple  # n_res rows, one column per task
    rr_c: tuple  # n_cp_res rows
    rr_p: tuple
    suc: tuple  # 0-based successor sets

    def __post_init__(self):
        topological_order(self.suc)

    @classmethod
    def from_dict(cls, data: dict) -> "RcpspCprInstance":
        n_res = _int(data, "n_res", 0)
        n_cp = _int(data, "n_cp_res", 0)
        n = _int(data, "n_tasks", 0)
        suc = _succ_sets(data, "suc", n)
        try:
            topological_order(suc)
        except ValueError as exc:
            raise ParseError(str(exc)) from None
        return cls(
            n_res=n_res,
            rc=_vec(data, "rc", n_res, 0),
            n_cp_res=n_cp,
            rcp=_vec(data, "rcp", n_cp, 0),
            n_tasks=n,
            d=_vec(data, "d", n, 0),
            rr=_matrix(data, "rr", n_res, n, 0),
            rr_c=_matrix(data, "rr_c", n_cp, n, 0),
            rr_p=_matrix(data, "rr_p", n_cp, n, 0),
            suc=suc,
        )

    def to_dict(self) -> dict:
        return {
            "n_res": self.n_res,
            "rc": list(self.rc),
            "n_cp_res": self.n_cp_res,
            "rcp": list(self.rcp),
            "n_tasks": self.n_tasks,
            "d": list(self.d),
            "rr": [list(r) for r in self.rr],
            "rr_c": [list(r) for r in self.rr_c],
            "rr_p": [list(r) for r in self.rr_p],
            "suc": [frozenset(j + 1 for j in s) for s in self.suc],
        }

    def to_text(self) -> str:
        return dump_dzn(self.to_dict())


def topological_order(suc) -> list[int]:
    """Tasks in an order compatible with the successor sets."""
    graph = {i: set() for i in range(len(suc))}
    for i, succs in enumerate(suc):
        for j in succs:
            graph[j].add(i)
    try:
        return list(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise ValueError(f"precedence graph has a cycle through tasks {exc.args[1]}") from None


@dataclass(frozen=True)
class SmicInstance:
    n_jobs: int
    init_inventory: int
    capa_inventory: int
    type_inventory: tuple  # 1 produces, 0 consumes
    processing: tuple
    release: tuple
    inventory: tuple

    @classmethod
    def from_dict(cls, data: dict) -> "SmicInstance":
        n = _int(data, "n_jobs", 0)
        types = _vec(data, "type_inventory", n)
        if any(t not in (0, 1) for t in types):
            raise ParseError("type_inventory entries must be 0 or 1")
        return cls(
            n_jobs=n,
            init_inventory=_int(data, "init_inventory", 0),
            capa_inventory=_int(data, "capa_inventory", 0),
            type_inventory=types,
            processing=_vec(data, "processing", n, 0),
            release=_vec(data, "release", n, 0),
            inventory=_vec(data, "inventory", n, 0),
        )

    def to_dict(self) -> dict:
        return {
            "n_jobs": self.n_jobs,
            "init_inventory": self.init_inventory,
            "capa_inventory": self.capa_inventory,
            "type_inventory": list(self.type_inventory),
            "processing": list(self.processing),
            "release": list(self.release),
            "inventory": list(self.inventory),
        }

    def to_text(self) -> str:
        return dump_dzn(self.to_dict())


@dataclass(frozen=True)
class MespInstance:
    n_tasks: int
    capa: int
    max_length: int
    start_min: tuple
    height_min: tuple
    height_max: tuple

    def __post_init__(self):
        if self.max_length < 1:
            raise ValueError("max_length must be >= 1")
        for i, (lo, hi) in enumerate(zip(self.height_min, self.height_max)):
            if lo > hi:
                raise ValueError(f"task {i + 1}: height_min {lo} > height_max {hi}")

    @classmethod
    def from_dict(cls, data: dict) -> "MespInstance":
        n = _int(data, "n_tasks", 0)
        lo = _vec(data, "height_min", n)
        hi = _vec(data, "height_max", n)
        for i, (a, b) in enumerate(zip(lo, hi)):
            if a > b:
                raise ParseError(f"task {i + 1}: height_min {a} > height_max {b}")
        return cls(
            n_tasks=n,
            capa=_int(data, "capa"),
            max_length=_int(data, "max_length", 1),
            start_min=_vec(data, "start_min", n, 0),
            height_min=lo,
            height_max=hi,
        )

    def to_dict(self) -> dict:
        return {
            "n_tasks": self.n_tasks,
            "capa": self.capa,
            "max_length": self.max_length,
            "start_min": list(self.start_min),
            "height_min": list(self.height_min),
            "height_max": list(self.height_max),
        }

    def to_text(self) -> str:
        return dump_dzn(self.to_dict())

    @property
    def horizon(self) -> int:
        # latest start plus longest duration
        return max(self.start_min, default=0) + 2 * self.max_length - 1


def parse_rcpsp_cpr(text: Text) -> RcpspCprInstance:
    return RcpspCprInstance.from_dict(parse_dzn(text))


def parse_smic(text: Text) -> SmicInstance:
    return SmicInstance.from_dict(parse_dzn(text))


def parse_mesp(text: Text) -> MespInstance:
    return MespInstance.from_dict(parse_dzn(text))


PARSERS = {"rcpsp-cpr": parse_rcpsp_cpr, "smic": parse_smic, "mesp": parse_mesp}


def parse_instance(problem: str, text: Text):
    try:
        parser = PARSERS[problem]
    except KeyError:
        raise ValueError(f"unknown problem {problem!r}") from None
    return parser(text)


# generator constants
MESP_CAPA = 10
MESP_MAX_LENGTH = 6
MESP_START_SPREAD = 1  # start_min drawn from [0, spread * n)
MESP_KIND_WEIGHTS = (0.4, 0.3, 0.3)  # positive-only, negative-only, hybrid


def generate_mesp(n: int, seed: int) -> MespInstance:
    """Random MESP instance, deterministic in ``(n, seed)``.

    Start minima are spread over ``[0, n)`` and sorted so that declaration
    order follows time. Heights are positive-only, negative-only or hybrid
    (negative minimum, positive maximum) with the weights above.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    start_min = np.sort(rng.integers(0, max(MESP_START_SPREAD * n, 1), size=n))
    kinds = rng.choice(3, size=n, p=MESP_KIND_WEIGHTS)
    lo = np.empty(n, dtype=np.int64)
    hi = np.empty(n, dtype=np.int64)
    pos = kinds == 0
    neg = kinds == 1
    hyb = kinds == 2
    lo[pos] = rng.integers(0, 4, size=pos.sum())
    hi[pos] = lo[pos] + rng.integers(1, 6, size=pos.sum())
    hi[neg] = -rng.integers(1, 4, size=neg.sum())
    lo[neg] = hi[neg] - rng.integers(0, 4, size=neg.sum())
    lo[hyb] = -rng.integers(1, 5, size=hyb.sum())
    hi[hyb] = rng.integers(1, 7, size=hyb.sum())
    return MespInstance(
        n_tasks=n,
        capa=MESP_CAPA,
        max_length=MESP_MAX_LENGTH,
        start_min=tuple(int(v) for v in start_min),
        height_min=tuple(int(v) for v in lo),
        height_max=tuple(int(v) for v in hi),
    )
