"""Sectioned-text reader shared by tool configs, target descriptor files,
and vector generator specs.

The surface is deliberately tiny::

    file     := section*
    section  := NAME '{' item* '}'
    item     := NAME '=' value ';'                 ("kv")
              | NAME ':' NAME '(' kwargs ')' ';'   ("pin", e.g. b: axi(bundle=0);)
              | NAME '(' values ')' ';'            ("call", e.g. share(p, q);)
              | value (',' value)* ';'             ("row", e.g. 5,2,3;)
    value    := INT | HEX | DECIMAL | NAME | "string" | call

'#' starts a comment running to the end of the line. Integers come back as
int, numbers with a '.' as Decimal, names and quoted strings as str. A call
value comes back as Call(fn, args, kwargs).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal

from .errors import ConfigError

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<hex>0[xX][0-9a-fA-F]+)
  | (?P<dec>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<str>"[^"\n]*")
  | (?P<punct>[{}()=,:;\-])
""", re.VERBOSE)


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple = ()
    kwargs: tuple = ()      # ordered (key, value) pairs

    def kwarg_map(self) -> dict:
        return dict(self.kwargs)


@dataclass
class Item:
    kind: str               # kv | pin | call | row
    line: int
    key: str | None = None
    value: object = None    # kv: value, pin/call: Call, row: list of values


@dataclass
class Section:
    name: str
    line: int
    items: list[Item] = field(default_factory=list)


def _tokenize(text: str, path: str):
    toks = []
    line = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ConfigError(f"{path}:{line}: unexpected character {text[pos]!r}")
        kind = m.lastgroup
        val = m.group()
        if kind == "ws":
            line += val.count("\n")
        elif kind == "str":
            toks.append(("str", val[1:-1], line))
        else:
            toks.append((kind, val, line))
        pos = m.end()
    toks.append(("eof", "", line))
    return toks


class _Reader:
    def __init__(self, text: str, path: str):
        self.toks = _tokenize(text, path)
        self.path = path
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        t = self.toks[self.i]
        if t[0] != "eof":
            self.i += 1
        return t

    def fail(self, msg: str, line: int | None = None):
        if line is None:
            line = self.peek()[2]
        raise ConfigError(f"{self.path}:{line}: {msg}")

    def expect(self, val: str):
        kind, got, line = self.next()
        if got != val or kind not in ("punct", "name"):
            self.fail(f"expected {val!r}, found {got!r}", line)

    def name(self) -> str:
        kind, got, line = self.next()
        if kind != "name":
            self.fail(f"expected a name, found {got!r}", line)
        return got

    # -- values ------------------------------------------------------------

    def value(self):
        kind, got, line = self.peek()
        if got == "-":
            self.next()
            v = self.value()
            if not isinstance(v, (int, Decimal)):
                self.fail("'-' needs a number", line)
            return -v
        if kind == "hex":
            self.next()
            return int(got, 16)
        if kind == "int":
            self.next()
            return int(got)
        if kind == "dec":
            self.next()
            return Decimal(got)
        if kind == "str":
            self.next()
            return got
        if kind == "name":
            self.next()
            if self.peek()[1] == "(":
                return self._call(got)
            return got
        self.fail(f"expected a value, found {got!r}", line)

    def _call(self, fn: str) -> Call:
        self.expect("(")
        args = []
        kwargs = []
        while self.peek()[1] != ")":
            kind, got, _line = self.peek()
            if kind == "name" and self.toks[self.i + 1][1] == "=":
                self.next()
                self.next()
                kwargs.append((got, self.value()))
            else:
                args.append(self.value())
            if self.peek()[1] == ",":
                self.next()
            elif self.peek()[1] != ")":
                self.fail("expected ',' or ')'")
        self.next()
        return Call(fn, tuple(args), tuple(kwargs))

    # -- items ---------------------------------------------------------------

    def item(self) -> Item:
        kind, got, line = self.peek()
        if kind == "name":
            nxt = self.toks[self.i + 1][1]
            if nxt == "=":
                self.next()
                self.next()
                v = self.value()
                self.expect(";")
                return Item("kv", line, key=got, value=v)
            if nxt == ":":
                self.next()
                self.next()
                fn = self.name()
                call = self._call(fn)
                self.expect(";")
                return Item("pin", line, key=got, value=call)
            if nxt == "(":
                self.next()
                call = self._call(got)
                self.expect(";")
                return Item("call", line, value=call)
        row = [self.value()]
        while self.peek()[1] == ",":
            self.next()
            row.append(self.value())
        self.expect(";")
        return Item("row", line, value=row)

    def sections(self) -> list[Section]:
        out = []
        while self.peek()[0] != "eof":
            line = self.peek()[2]
            sec = Section(self.name(), line)
            self.expect("{")
            while self.peek()[1] != "}":
                if self.peek()[0] == "eof":
                    self.fail(f"section {sec.name} is not closed", line)
                sec.items.append(self.item())
            self.next()
            out.append(sec)
        return out


def read_sections(text: str, path: str = "<config>") -> list[Section]:
    return _Reader(text, path).sections()


def section_map(sections: list[Section], allowed: set[str],
                path: str = "<config>") -> dict[str, Section]:
    out: dict[str, Section] = {}
    for sec in sections:
        if sec.name not in allowed:
            raise ConfigError(
                f"{path}:{sec.line}: unknown section {sec.name!r} "
                f"(expected one of {', '.join(sorted(allowed))})")
        if sec.name in out:
            raise ConfigError(f"{path}:{sec.line}: duplicate section {sec.name!r}")
        out[sec.name] = sec
    return out
