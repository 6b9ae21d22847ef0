"""A small subset of the MiniZinc data-file dialect.

Grammar (``%`` starts a comment that runs to the end of the line)::

    file   := { ident "=" value ";" }
    value  := int | list | rows | set | "array2d(" range "," range "," list ")"
    list   := "[" [ value { "," value } [","] ] "]"
    rows   := "[|" [ int { "," int } ] { "|" [ int { "," int } ] } "|]"
    set    := "{" [ int { "," int } ] "}"
    range  := int ".." int

Lists nest at most three deep. Parsing never raises anything other than
:class:`ParseError`.
"""

from __future__ import annotations

import re
from typing import Union

__all__ = ["ParseError", "dump_dzn", "format_value", "parse_dzn"]

Value = Union[int, list, frozenset]

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<int>[-+]?\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>\[\||\|\]|\.\.|[=;,\[\]{}()|])
    """,
    re.VERBOSE,
)

_MAX_DEPTH = 3


class ParseError(ValueError):
    """Malformed or invalid instance text; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _tokenize(text: str):
    tokens = []
    line = 1
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
        elif kind == "int":
            digits = m.group()
            if len(digits) > 1000:
                raise ParseError("integer literal too long", line)
            tokens.append(("int", int(digits), line))
        elif kind == "ident":
            tokens.append(("ident", m.group(), line))
        elif kind == "sym":
            tokens.append(("sym", m.group(), line))
        pos = m.end()
    tokens.append(("eof", None, line))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        if tok[0] != "eof":
            self.i += 1
        return tok

    def expect(self, kind, text=None):
        tok = self.take()
        if tok[0] != kind or (text is not None and tok[1] != text):
            want = text if text is not None else kind
            got = "end of input" if tok[0] == "eof" else repr(tok[1])
            raise ParseError(f"expected {want!r}, got {got}", tok[2])
        return tok

    def at(self, text) -> bool:
        tok = self.peek()
        return tok[0] == "sym" and tok[1] == text

    def file(self) -> dict:
        out = {}
        while self.peek()[0] != "eof":
            name_tok = self.expect("ident")
            name = name_tok[1]
            if name in out:
                raise ParseError(f"duplicate key {name!r}", name_tok[2])
            self.expect("sym", "=")
            out[name] = self.value(0)
            self.expect("sym", ";")
        return out

    def value(self, depth: int) -> Value:
        tok = self.peek()
        if tok[0] == "int":
            self.take()
            return tok[1]
        if depth >= _MAX_DEPTH:
            raise ParseError("values nested too deeply", tok[2])
        if tok[0] == "sym" and tok[1] == "[":
            return self.list(depth)
        if tok[0] == "sym" and tok[1] == "[|":
            return self.rows()
        if tok[0] == "sym" and tok[1] == "{":
            return self.set()
        if tok[0] == "ident" and tok[1] == "array2d":
            return self.array2d()
        got = "end of input" if tok[0] == "eof" else repr(tok[1])
        raise ParseError(f"expected a value, got {got}", tok[2])

    def list(self, depth: int) -> list:
        self.expect("sym", "[")
        items = []
        while not self.at("]"):
            items.append(self.value(depth + 1))
            if not self.at("]"):
                self.expect("sym", ",")
        self.expect("sym", "]")
        return items

    def ints(self, stop: tuple) -> list[int]:
        items = []
        while not (self.peek()[0] == "sym" and self.peek()[1] in stop):
            items.append(self.expect("int")[1])
            if self.peek()[0] == "sym" and self.peek()[1] in stop:
                break
            self.expect("sym", ",")
        return items

    def rows(self) -> list:
        start = self.expect("sym", "[|")
        rows = []
        while True:
            rows.append(self.ints(("|", "|]")))
            if self.take()[1] == "|]":
                break
        if rows == [[]]:
            return []
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ParseError("ragged rows in [| |] array", start[2])
        return rows

    def set(self) -> frozenset:
        self.expect("sym", "{")
        items = self.ints(("}",))
        self.expect("sym", "}")
        return frozenset(items)

    def range(self) -> tuple[int, int]:
        lo = self.expect("int")[1]
        self.expect("sym", "..")
        hi = self.expect("int")[1]
        return lo, hi

    def array2d(self) -> list:
        start = self.expect("ident", "array2d")
        self.expect("sym", "(")
        r_lo, r_hi = self.range()
        self.expect("sym", ",")
        c_lo, c_hi = self.range()
        self.expect("sym", ",")
        self.expect("sym", "[")
        flat = self.ints(("]",))
        self.expect("sym", "]")
        self.expect("sym", ")")
        n_rows = max(r_hi - r_lo + 1, 0)
        n_cols = max(c_hi - c_lo + 1, 0)
        if n_rows * n_cols != len(flat):
            raise ParseError(
                f"array2d expects {n_rows}x{n_cols} values, got {len(flat)}", start[2]
            )
        return [flat[r * n_cols : (r + 1) * n_cols] for r in range(n_rows)]


def parse_dzn(text: Union[str, bytes]) -> dict:
    """Parse data-file text into ``{name: value}``.

    Integers become ``int``, arrays become (nested) lists and sets become
    ``frozenset``.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc.reason}") from None
    if not isinstance(text, str):
        raise ParseError(f"expected text, got {type(text).__name__}")
    return _Parser(_tokenize(text)).file()


def format_value(value) -> str:
    if isinstance(value, bool):
        raise TypeError("booleans are not part of the dialect")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, (set, frozenset)):
        return "{" + ", ".join(str(v) for v in sorted(value)) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    raise TypeError(f"cannot format {type(value).__name__}")


def dump_dzn(data: dict) -> str:
    """Serialize ``{name: value}`` one ``key = value;`` line per entry."""
    return "".join(f"{key} = {format_value(value)};\n" for key, value in data.items())
