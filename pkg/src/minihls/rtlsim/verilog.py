"""Reader for the emitted Verilog subset.

This is not a general Verilog front end. It accepts exactly the shapes the
emitters produce, which keeps both sides honest: anything the interpreter
cannot execute is a bug in the emitter, not a feature request here.

Accepted module items:
  * ANSI port lists (input/output, wire or reg, constant ranges)
  * wire/reg/localparam/integer declarations, reg memories ``[0:N]``
  * continuous assigns (also the declaration form ``wire w = e;``)
  * ``always @(posedge clk)`` blocks with nonblocking assigns, if/else,
    case/endcase and ``$display``/``$finish``
  * ``initial`` blocks with blocking assigns, ``$readmemh`` and constant
    ``for`` loops
  * the bench clock idiom ``always #<n> c = ~c;``
  * module instantiation with named port connections

Expressions: sized and plain decimal literals, identifiers, bit and
constant part selects, memory indexing, concatenation, replication, ``~``
and ``!``, the usual binary operators, and the ternary operator.

Everything is parsed into plain tuples; widths and meaning are resolved by
the elaborator in hdlsim.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import HdlError

_PUNCT2 = ("<=", ">=", "==", "!=", "<<", ">>", "&&", "||")
_PUNCT1 = "()[]{};,.:?~^&|+-*<>=!#@"

_KEYWORDS = {
    "module", "endmodule", "input", "output", "wire", "reg", "localparam",
    "integer", "assign", "always", "initial", "begin", "end", "if", "else",
    "case", "endcase", "default", "posedge", "for",
}


@dataclass
class Tok:
    kind: str          # id kw num str punct eof
    val: object
    line: int
    col: int


def tokenize(text: str, path: str = "<hdl>") -> list[Tok]:
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i)
            if j < 0:
                raise HdlError(f"{path}:{line}: unterminated comment")
            seg = text[i:j]
            line += seg.count("\n")
            i = j + 2
            col = 1
            continue
        start_col = col
        if c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise HdlError(f"{path}:{line}: unterminated string")
                j += 1
            if j >= n:
                raise HdlError(f"{path}:{line}: unterminated string")
            toks.append(Tok("str", text[i + 1:j], line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and (text[j].isdigit() or text[j] == "_"):
                j += 1
            if j < n and text[j] == "'":
                size = int(text[i:j].replace("_", ""))
                base = text[j + 1].lower() if j + 1 < n else ""
                if base not in "hdbo":
                    raise HdlError(f"{path}:{line}: bad literal base")
                k = j + 2
                digits = ""
                while k < n and (text[k].isalnum() or text[k] == "_"):
                    digits += text[k]
                    k += 1
                radix = {"h": 16, "d": 10, "b": 2, "o": 8}[base]
                try:
                    value = int(digits.replace("_", ""), radix)
                except ValueError:
                    raise HdlError(f"{path}:{line}: bad literal digits "
                                   f"{digits!r}") from None
                toks.append(Tok("num", (size, value & ((1 << size) - 1)),
                                line, start_col))
                col += k - i
                i = k
                continue
            toks.append(Tok("num", (None, int(text[i:j].replace("_", ""))),
                            line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c in "_$":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_$"):
                j += 1
            word = text[i:j]
            toks.append(Tok("kw" if word in _KEYWORDS else "id", word,
                            line, start_col))
            col += j - i
            i = j
            continue
        two = text[i:i + 2]
        if two in _PUNCT2 or two in ("==", "!="):
            # === and !== collapse onto their two-state forms
            if text[i:i + 3] in ("===", "!=="):
                toks.append(Tok("punct", two, line, start_col))
                i += 3
                col += 3
                continue
            toks.append(Tok("punct", two, line, start_col))
            i += 2
            col += 2
            continue
        if c in _PUNCT1:
            toks.append(Tok("punct", c, line, start_col))
            i += 1
            col += 1
            continue
        raise HdlError(f"{path}:{line}:{col}: stray character {c!r}")
    toks.append(Tok("eof", None, line, col))
    return toks


@dataclass
class Port:
    direction: str     # input | output
    kind: str          # wire | reg
    width: int
    name: str


@dataclass
class Module:
    name: str
    ports: list[Port] = field(default_factory=list)
    items: list[tuple] = field(default_factory=list)


class _Parser:
    def __init__(self, toks: list[Tok], path: str):
        self.toks = toks
        self.pos = 0
        self.path = path

    def peek(self, ahead: int = 0) -> Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, tok: Tok, msg: str):
        raise HdlError(f"{self.path}:{tok.line}:{tok.col}: {msg}")

    def expect(self, val: str) -> Tok:
        t = self.next()
        if t.val != val:
            self.fail(t, f"expected {val!r}, found {t.val!r}")
        return t

    def accept(self, val: str) -> bool:
        if self.peek().val == val:
            self.next()
            return True
        return False

    def ident(self) -> str:
        t = self.next()
        if t.kind != "id":
            self.fail(t, f"expected an identifier, found {t.val!r}")
        return t.val

    # ---- static numbers ----------------------------------------------

    def const_int(self) -> int:
        t = self.next()
        if t.kind != "num":
            self.fail(t, f"expected a constant, found {t.val!r}")
        return t.val[1]

    def range_msb_lsb(self) -> int:
        """Parse [msb:lsb] and return the width; lsb must be zero."""
        self.expect("[")
        msb = self.const_int()
        self.expect(":")
        lsb = self.const_int()
        self.expect("]")
        if lsb != 0:
            self.fail(self.peek(), "ranges must end at bit 0")
        return msb + 1

    # ---- modules -----------------------------------------------------

    def parse_source(self) -> list[Module]:
        mods = []
        while self.peek().kind != "eof":
            mods.append(self.parse_module())
        return mods

    def parse_module(self) -> Module:
        self.expect("module")
        m = Module(self.ident())
        if self.accept("("):
            if not self.accept(")"):
                while True:
                    m.ports.append(self.parse_port())
                    if not self.accept(","):
                        break
                self.expect(")")
        self.expect(";")
        while not self.accept("endmodule"):
            self.parse_item(m)
        return m

    def parse_port(self) -> Port:
        t = self.next()
        if t.val not in ("input", "output"):
            self.fail(t, f"expected a port direction, found {t.val!r}")
        kind = "wire"
        if self.peek().val in ("wire", "reg"):
            kind = self.next().val
        width = 1
        if self.peek().val == "[":
            width = self.range_msb_lsb()
        return Port(t.val, kind, width, self.ident())

    # ---- module items ------------------------------------------------

    def parse_item(self, m: Module):
        t = self.peek()
        v = t.val
        if v == "wire":
            self.next()
            width = self.range_msb_lsb() if self.peek().val == "[" else 1
            name = self.ident()
            if self.accept("="):
                expr = self.parse_expr()
                m.items.append(("wire", name, width, expr))
            else:
                m.items.append(("wire", name, width, None))
            self.expect(";")
        elif v == "reg":
            self.next()
            width = self.range_msb_lsb() if self.peek().val == "[" else 1
            name = self.ident()
            if self.peek().val == "[":
                self.expect("[")
                lo = self.const_int()
                self.expect(":")
                hi = self.const_int()
                self.expect("]")
                if lo != 0:
                    self.fail(t, "memories must start at index 0")
                m.items.append(("mem", name, width, hi + 1))
            else:
                m.items.append(("reg", name, width))
            self.expect(";")
        elif v == "integer":
            self.next()
            m.items.append(("integer", self.ident()))
            self.expect(";")
        elif v == "localparam":
            self.next()
            width = self.range_msb_lsb() if self.peek().val == "[" else 32
            while True:
                name = self.ident()
                self.expect("=")
                m.items.append(("localparam", name, width,
                                self.parse_expr()))
                if not self.accept(","):
                    break
            self.expect(";")
        elif v == "assign":
            self.next()
            name = self.ident()
            self.expect("=")
            m.items.append(("assign", name, self.parse_expr()))
            self.expect(";")
        elif v == "always":
            self.next()
            if self.accept("#"):
                self.const_int()
                name = self.ident()
                self.expect("=")
                self.expect("~")
                other = self.ident()
                if other != name:
                    self.fail(t, "clock generator must toggle itself")
                self.expect(";")
                m.items.append(("clockgen", name))
                return
            self.expect("@")
            self.expect("(")
            self.expect("posedge")
            clk = self.ident()
            self.expect(")")
            m.items.append(("always", clk, self.parse_stmt(clocked=True)))
        elif v == "initial":
            self.next()
            m.items.append(("initial", self.parse_stmt(clocked=False)))
        elif t.kind == "id":
            self.parse_instance(m)
        else:
            self.fail(t, f"unsupported module item at {v!r}")

    def parse_instance(self, m: Module):
        mod = self.ident()
        inst = self.ident()
        self.expect("(")
        conns = []
        if not self.accept(")"):
            while True:
                self.expect(".")
                port = self.ident()
                self.expect("(")
                conns.append((port, self.parse_expr()))
                self.expect(")")
                if not self.accept(","):
                    break
            self.expect(")")
        self.expect(";")
        m.items.append(("instance", mod, inst, conns))

    # ---- statements ----------------------------------------------------

    def parse_stmt(self, clocked: bool) -> list[tuple]:
        """One statement, flattened to a list (begin/end folds away)."""
        t = self.peek()
        v = t.val
        if v == "begin":
            self.next()
            out = []
            while not self.accept("end"):
                out.extend(self.parse_stmt(clocked))
            return out
        if v == ";":
            self.next()
            return []
        if v == "if":
            self.next()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then = self.parse_stmt(clocked)
            els = []
            if self.accept("else"):
                els = self.parse_stmt(clocked)
            return [("if", cond, then, els)]
        if v == "case":
            return self.parse_case(clocked)
        if v == "for":
            if clocked:
                self.fail(t, "for loops belong in initial blocks")
            return self.parse_for()
        if v == "$display":
            self.next()
            self.expect("(")
            s = self.next()
            if s.kind != "str":
                self.fail(s, "$display takes one string")
            self.expect(")")
            self.expect(";")
            return [("display", s.val)]
        if v == "$finish":
            self.next()
            self.expect(";")
            return [("finish",)]
        if v == "$readmemh":
            if clocked:
                self.fail(t, "$readmemh belongs in initial blocks")
            self.next()
            self.expect("(")
            s = self.next()
            if s.kind != "str":
                self.fail(s, "$readmemh takes a file name string")
            self.expect(",")
            mem = self.ident()
            self.expect(")")
            self.expect(";")
            return [("readmemh", s.val, mem)]
        if t.kind == "id":
            return [self.parse_assign_stmt(clocked)]
        self.fail(t, f"unsupported statement at {v!r}")

    def parse_assign_stmt(self, clocked: bool) -> tuple:
        name = self.ident()
        idx = None
        if self.accept("["):
            idx = self.parse_expr()
            self.expect("]")
        t = self.next()
        if t.val == "<=":
            if not clocked:
                self.fail(t, "nonblocking assignment outside a clocked block")
            tag = "nb"
        elif t.val == "=":
            if clocked:
                self.fail(t, "blocking assignment inside a clocked block")
            tag = "b"
        else:
            self.fail(t, f"expected an assignment, found {t.val!r}")
        rhs = self.parse_expr()
        self.expect(";")
        return (tag, name, idx, rhs)

    def parse_case(self, clocked: bool) -> list[tuple]:
        self.expect("case")
        self.expect("(")
        subj = self.parse_expr()
        self.expect(")")
        arms = []
        default = None
        while not self.accept("endcase"):
            if self.accept("default"):
                self.expect(":")
                default = self.parse_stmt(clocked)
                continue
            label = self.parse_expr()
            self.expect(":")
            arms.append((label, self.parse_stmt(clocked)))
        return [("case", subj, arms, default)]

    def parse_for(self) -> list[tuple]:
        self.expect("for")
        self.expect("(")
        var = self.ident()
        self.expect("=")
        init = self.parse_expr()
        self.expect(";")
        cond = self.parse_expr()
        self.expect(";")
        var2 = self.ident()
        self.expect("=")
        step = self.parse_expr()
        self.expect(")")
        if var2 != var:
            self.fail(self.peek(), "for loop must step its own variable")
        body = self.parse_stmt(clocked=False)
        return [("for", var, init, cond, step, body)]

    # ---- expressions ---------------------------------------------------

    _BINARY = [          # precedence levels, loosest first
        ("|",), ("^",), ("&",), ("==", "!="), ("<", "<=", ">", ">="),
        ("<<", ">>"), ("+", "-"), ("*",),
    ]

    def parse_expr(self) -> tuple:
        e = self.parse_binary(0)
        if self.accept("?"):
            a = self.parse_expr()
            self.expect(":")
            b = self.parse_expr()
            return ("ternary", e, a, b)
        return e

    def parse_binary(self, level: int) -> tuple:
        if level >= len(self._BINARY):
            return self.parse_unary()
        ops = self._BINARY[level]
        e = self.parse_binary(level + 1)
        while self.peek().kind == "punct" and self.peek().val in ops:
            op = self.next().val
            rhs = self.parse_binary(level + 1)
            e = ("binop", op, e, rhs)
        return e

    def parse_unary(self) -> tuple:
        t = self.peek()
        if t.val == "~":
            self.next()
            return ("unop", "~", self.parse_unary())
        if t.val == "!":
            self.next()
            return ("unop", "!", self.parse_unary())
        return self.parse_primary()

    def parse_primary(self) -> tuple:
        t = self.next()
        if t.kind == "num":
            return ("num", t.val[0], t.val[1])
        if t.val == "(":
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.val == "{":
            first = self.parse_expr()
            if self.peek().val == "{":
                if first[0] != "num":
                    self.fail(t, "replication count must be a constant")
                self.expect("{")
                inner = self.parse_expr()
                self.expect("}")
                self.expect("}")
                return ("rep", first[2], inner)
            parts = [first]
            while self.accept(","):
                parts.append(self.parse_expr())
            self.expect("}")
            return ("concat", parts)
        if t.kind == "id":
            name = t.val
            if self.accept("["):
                first = self.parse_expr()
                if self.accept(":"):
                    if first[0] != "num":
                        self.fail(t, "part selects must be constant")
                    lo = self.parse_expr()
                    if lo[0] != "num":
                        self.fail(t, "part selects must be constant")
                    self.expect("]")
                    return ("slice", name, first[2], lo[2])
                self.expect("]")
                return ("index", name, first)
            return ("id", name)
        self.fail(t, f"unsupported expression at {t.val!r}")


def parse_source(text: str, path: str = "<hdl>") -> list[Module]:
    """Parse every module in the text."""
    return _Parser(tokenize(text, path), path).parse_source()
