"""Execution of the emitted Verilog subset.

The module hierarchy is flattened (instances become prefixed signals plus
port alias assigns), then compiled to three Python functions:

    init(S, M, readmem)       initial blocks, run once
    settle(S, M)              continuous assigns in dependency order
    edge(S, NS, M, MW, out)   every posedge block; nonblocking writes go
                              to NS and the memory write buffer MW

State is two-valued and starts at zero, like the cycle simulator it is
checked against, so an uninitialized read is 0, never X. Expression widths
follow the usual context rules: arithmetic is evaluated at the widest of
the operand and assignment widths and masked there, shift amounts and
concatenation parts are self-determined, comparisons size to their wider
operand. Continuous assigns are ordered by their dependencies; a cycle
among them is a combinational loop and is rejected up front.

One simulated cycle = settle, then one clock edge. The bench clock idiom
``always #5 clk = ~clk;`` is recognized and replaced by that loop, so the
interpreter never schedules events in time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import HdlError, SimError
from .verilog import Module, parse_source

_MASKS = {}


def _mask(w: int) -> int:
    m = _MASKS.get(w)
    if m is None:
        m = _MASKS[w] = (1 << w) - 1
    return m


class _Fin(Exception):
    """Raised by generated code on $finish."""


@dataclass
class _Scope:
    prefix: str
    params: dict[str, tuple[int, int]] = field(default_factory=dict)


class _Elab:
    """Flattens a module tree and compiles it."""

    def __init__(self, modules: dict[str, Module], top: str):
        if top not in modules:
            raise HdlError(f"no module named {top}")
        self.modules = modules
        self.top = modules[top]
        self.slots: dict[str, int] = {}
        self.widths: list[int] = []
        self.kinds: list[str] = []          # input | wire | reg
        self.mems: dict[str, int] = {}
        self.mem_sizes: list[tuple[int, int]] = []   # (elem width, count)
        self.drivers: dict[int, tuple] = {}          # slot -> (expr, scope)
        self.always: list[tuple] = []                # (stmts, scope)
        self.initials: list[tuple] = []
        self.clocks: set[str] = set()
        self.clockgens: list[str] = []
        self.elab(self.top, "", None, None)

    # ---- symbols -------------------------------------------------------

    def declare(self, name: str, width: int, kind: str) -> int:
        if name in self.slots or name in self.mems:
            raise HdlError(f"duplicate declaration of {name}")
        if width <= 0:
            raise HdlError(f"zero-width signal {name}")
        self.slots[name] = idx = len(self.widths)
        self.widths.append(width)
        self.kinds.append(kind)
        return idx

    def declare_mem(self, name: str, width: int, count: int):
        if name in self.slots or name in self.mems:
            raise HdlError(f"duplicate declaration of {name}")
        self.mems[name] = len(self.mem_sizes)
        self.mem_sizes.append((width, count))

    def slot(self, scope: _Scope, name: str) -> int:
        idx = self.slots.get(scope.prefix + name)
        if idx is None:
            raise HdlError(f"unknown signal {scope.prefix}{name}")
        return idx

    def set_driver(self, idx: int, expr, scope: _Scope):
        if self.kinds[idx] != "wire":
            raise HdlError(
                f"continuous assignment to non-wire "
                f"{self._name_of(idx)}")
        if idx in self.drivers:
            raise HdlError(f"multiple drivers for {self._name_of(idx)}")
        self.drivers[idx] = (expr, scope)

    def _name_of(self, idx: int) -> str:
        for n, i in self.slots.items():
            if i == idx:
                return n
        return f"slot{idx}"

    def canon(self, name: str) -> str:
        """Follow plain-identifier drivers (port aliases) to the source."""
        seen = set()
        while True:
            idx = self.slots.get(name)
            if idx is None or idx in seen:
                return name
            seen.add(idx)
            drv = self.drivers.get(idx)
            if drv is None or drv[0][0] != "id":
                return name
            expr, scope = drv
            if expr[1] in scope.params:
                return name
            nxt = scope.prefix + expr[1]
            if nxt not in self.slots:
                return name
            name = nxt

    # ---- flattening ------------------------------------------------------

    def elab(self, mod: Module, prefix: str, conns, parent_scope):
        scope = _Scope(prefix)
        is_top = parent_scope is None
        for p in mod.ports:
            kind = "reg" if p.kind == "reg" else "wire"
            if is_top and p.direction == "input":
                kind = "input"
            self.declare(prefix + p.name, p.width, kind)
        for item in mod.items:
            tag = item[0]
            if tag == "wire":
                _t, name, width, expr = item
                idx = self.declare(prefix + name, width, "wire")
                if expr is not None:
                    self.set_driver(idx, expr, scope)
            elif tag == "reg":
                self.declare(prefix + item[1], item[2], "reg")
            elif tag == "integer":
                self.declare(prefix + item[1], 32, "reg")
            elif tag == "mem":
                self.declare_mem(prefix + item[1], item[2], item[3])
            elif tag == "localparam":
                _t, name, width, expr = item
                v = self.const_eval(expr, scope) & _mask(width)
                scope.params[name] = (width, v)
            elif tag == "assign":
                _t, name, expr = item
                self.set_driver(self.slot(scope, name), expr, scope)
            elif tag == "always":
                _t, clk, stmts = item
                self.clocks.add(prefix + clk)
                self.always.append((stmts, scope))
            elif tag == "initial":
                self.initials.append((item[1], scope))
            elif tag == "clockgen":
                self.clockgens.append(prefix + item[1])
            else:   # instance
                _t, modname, inst, sub_conns = item
                child = self.modules.get(modname)
                if child is None:
                    raise HdlError(f"instance of unknown module {modname}")
                self.elab(child, prefix + inst + ".", sub_conns, scope)
        if conns is not None:
            self._connect(mod, prefix, conns, parent_scope, scope)

    def _connect(self, mod, prefix, conns, parent_scope, scope):
        ports = {p.name: p for p in mod.ports}
        for pname, expr in conns:
            p = ports.get(pname)
            if p is None:
                raise HdlError(f"{mod.name} has no port {pname}")
            outer_w = self.self_width(expr, parent_scope)
            if outer_w != p.width:
                raise HdlError(
                    f"port {prefix}{pname}: width {p.width} connected "
                    f"to {outer_w} bits")
            if p.direction == "input":
                self.set_driver(self.slot(scope, pname), expr, parent_scope)
            else:
                if expr[0] != "id":
                    raise HdlError(
                        f"output port {prefix}{pname} needs a plain "
                        f"signal connection")
                self.set_driver(self.slot(parent_scope, expr[1]),
                                ("id", pname), scope)

    # ---- widths and constants -------------------------------------------

    def self_width(self, e, scope: _Scope) -> int:
        tag = e[0]
        if tag == "num":
            return e[1] if e[1] is not None else 32
        if tag == "id":
            if e[1] in scope.params:
                return scope.params[e[1]][0]
            full = scope.prefix + e[1]
            if full in self.mems:
                raise HdlError(f"memory {full} used without an index")
            return self.widths[self.slot(scope, e[1])]
        if tag == "index":
            full = scope.prefix + e[1]
            if full in self.mems:
                return self.mem_sizes[self.mems[full]][0]
            return 1
        if tag == "slice":
            _t, _n, hi, lo = e
            if hi < lo:
                raise HdlError(f"reversed part select on {e[1]}")
            return hi - lo + 1
        if tag == "concat":
            total = 0
            for part in e[1]:
                if part[0] == "num" and part[1] is None:
                    raise HdlError("unsized literal inside a concatenation")
                total += self.self_width(part, scope)
            return total
        if tag == "rep":
            return e[1] * self.self_width(e[2], scope)
        if tag == "unop":
            return 1 if e[1] == "!" else self.self_width(e[2], scope)
        if tag == "binop":
            op = e[1]
            if op in ("==", "!=", "<", "<=", ">", ">="):
                return 1
            if op in ("<<", ">>"):
                return self.self_width(e[2], scope)
            return max(self.self_width(e[2], scope),
                       self.self_width(e[3], scope))
        if tag == "ternary":
            return max(self.self_width(e[2], scope),
                       self.self_width(e[3], scope))
        raise HdlError(f"unknown expression {tag}")

    def const_eval(self, e, scope: _Scope) -> int:
        tag = e[0]
        if tag == "num":
            return e[2]
        if tag == "id" and e[1] in scope.params:
            return scope.params[e[1]][1]
        if tag == "unop" and e[1] == "~":
            w = self.self_width(e, scope)
            return self.const_eval(e[2], scope) ^ _mask(w)
        if tag == "binop":
            a = self.const_eval(e[2], scope)
            b = self.const_eval(e[3], scope)
            w = self.self_width(e, scope)
            op = e[1]
            if op == "+":
                return (a + b) & _mask(w)
            if op == "-":
                return (a - b) & _mask(w)
            if op == "*":
                return (a * b) & _mask(w)
            if op in ("|", "^", "&"):
                return {"|": a | b, "^": a ^ b, "&": a & b}[op]
            if op == "<<":
                return (a << b) & _mask(w)
            if op == ">>":
                return a >> b
        if tag == "concat":
            v = 0
            for part in e[1]:
                w = self.self_width(part, scope)
                v = (v << w) | self.const_eval(part, scope)
            return v
        if tag == "rep":
            w = self.self_width(e[2], scope)
            inner = self.const_eval(e[2], scope)
            return sum(inner << (w * k) for k in range(e[1]))
        raise HdlError("expression is not constant")

    # ---- dependency scan ---------------------------------------------

    def deps(self, e, scope: _Scope, out: set):
        tag = e[0]
        if tag == "id":
            if e[1] not in scope.params:
                full = scope.prefix + e[1]
                if full in self.mems:
                    raise HdlError(f"memory {full} used without an index")
                out.add(self.slot(scope, e[1]))
        elif tag == "index":
            full = scope.prefix + e[1]
            if full not in self.mems:
                out.add(self.slot(scope, e[1]))
            self.deps(e[2], scope, out)
        elif tag == "slice":
            if e[1] not in scope.params:
                out.add(self.slot(scope, e[1]))
        elif tag == "concat":
            for part in e[1]:
                self.deps(part, scope, out)
        elif tag == "rep":
            self.deps(e[2], scope, out)
        elif tag == "unop":
            self.deps(e[2], scope, out)
        elif tag == "binop":
            self.deps(e[2], scope, out)
            self.deps(e[3], scope, out)
        elif tag == "ternary":
            self.deps(e[1], scope, out)
            self.deps(e[2], scope, out)
            self.deps(e[3], scope, out)

    def assign_order(self) -> list[int]:
        """Driver slots in evaluation order; cycles are fatal."""
        edges = {}
        for idx, (expr, scope) in self.drivers.items():
            used: set = set()
            self.deps(expr, scope, used)
            edges[idx] = [d for d in used if d in self.drivers]
        order, state = [], {}

        def visit(n, chain):
            c = state.get(n)
            if c == 2:
                return
            if c == 1:
                names = [self._name_of(x) for x in chain[chain.index(n):]]
                raise HdlError("combinational loop detected: "
                               + " -> ".join(names + [names[0]]))
            state[n] = 1
            chain.append(n)
            for d in edges[n]:
                visit(d, chain)
            chain.pop()
            state[n] = 2
            order.append(n)

        for n in sorted(edges):
            visit(n, [])
        return order


class _Gen:
    """Compiles the flattened design to Python source."""

    def __init__(self, e: _Elab):
        self.e = e
        self.lines: list[str] = []
        self.tmp = 0

    def fresh(self) -> str:
        self.tmp += 1
        return f"_t{self.tmp}"

    def put(self, depth: int, text: str):
        self.lines.append("    " * depth + text)

    # ---- expressions -------------------------------------------------

    def gx(self, e, scope: _Scope, W: int) -> str:
        """Python expression for e evaluated at context width W, whose
        value is always within W bits."""
        el = self.e
        tag = e[0]
        if tag == "num":
            return str(e[2])
        if tag == "id":
            if e[1] in scope.params:
                return str(scope.params[e[1]][1])
            return f"S[{el.slot(scope, e[1])}]"
        if tag == "index":
            full = scope.prefix + e[1]
            a = self.gx(e[2], scope, el.self_width(e[2], scope))
            if full in el.mems:
                mi = el.mems[full]
                count = el.mem_sizes[mi][1]
                t = self.fresh()
                return f"(M[{mi}][{t}] if ({t} := {a}) < {count} else 0)"
            return f"((S[{el.slot(scope, e[1])}] >> ({a})) & 1)"
        if tag == "slice":
            _t, name, hi, lo = e
            src = (str(scope.params[name][1]) if name in scope.params
                   else f"S[{el.slot(scope, name)}]")
            return f"(({src} >> {lo}) & {_mask(hi - lo + 1)})"
        if tag == "concat":
            parts = []
            shift = 0
            for part in reversed(e[1]):
                w = el.self_width(part, scope)
                code = self.gx(part, scope, w)
                parts.append(f"({code} << {shift})" if shift else code)
                shift += w
            return "(" + " | ".join(reversed(parts)) + ")"
        if tag == "rep":
            w = el.self_width(e[2], scope)
            factor = sum(1 << (w * k) for k in range(e[1]))
            return f"(({self.gx(e[2], scope, w)}) * {factor})"
        if tag == "unop":
            if e[1] == "!":
                return f"(0 if {self.gx(e[2], scope, el.self_width(e[2], scope))} else 1)"
            return f"(({self.gx(e[2], scope, W)}) ^ {_mask(W)})"
        if tag == "binop":
            return self.gx_binop(e, scope, W)
        if tag == "ternary":
            c = self.gx(e[1], scope, self.e.self_width(e[1], scope))
            a = self.gx(e[2], scope, W)
            b = self.gx(e[3], scope, W)
            return f"(({a}) if {c} else ({b}))"
        raise HdlError(f"unknown expression {tag}")

    def gx_binop(self, e, scope: _Scope, W: int) -> str:
        el = self.e
        op = e[1]
        if op in ("==", "!=", "<", "<=", ">", ">="):
            wc = max(el.self_width(e[2], scope), el.self_width(e[3], scope))
            a = self.gx(e[2], scope, wc)
            b = self.gx(e[3], scope, wc)
            return f"(1 if {a} {op} {b} else 0)"
        if op in ("|", "^", "&"):
            return f"(({self.gx(e[2], scope, W)}) {op} " \
                   f"({self.gx(e[3], scope, W)}))"
        if op in ("+", "-", "*"):
            a = self.gx(e[2], scope, W)
            b = self.gx(e[3], scope, W)
            return f"((({a}) {op} ({b})) & {_mask(W)})"
        # shifts: the amount is self-determined
        wa = el.self_width(e[3], scope)
        amt = self.gx(e[3], scope, wa)
        a = self.gx(e[2], scope, W)
        if op == ">>":
            return f"(({a}) >> ({amt}))"
        if wa > 8:          # clamp silly amounts before they eat memory
            t = self.fresh()
            return (f"((({a}) << {t}) & {_mask(W)} "
                    f"if ({t} := ({amt})) <= {W} else 0)")
        return f"((({a}) << ({amt})) & {_mask(W)})"

    def store_rhs(self, expr, scope: _Scope, lhs_width: int) -> str:
        selfw = self.e.self_width(expr, scope)
        W = max(lhs_width, selfw)
        code = self.gx(expr, scope, W)
        if selfw > lhs_width:
            return f"({code}) & {_mask(lhs_width)}"
        return code

    # ---- statements ----------------------------------------------------

    def g_stmts(self, stmts, scope: _Scope, depth: int, blocking: bool):
        el = self.e
        if not stmts:
            self.put(depth, "pass")
            return
        for st in stmts:
            tag = st[0]
            if tag in ("nb", "b"):
                if (tag == "b") != blocking:
                    raise HdlError("assignment kind does not fit the block")
                _t, name, idx, rhs = st
                full = scope.prefix + name
                if idx is not None and full in el.mems:
                    mi = el.mems[full]
                    ew, count = el.mem_sizes[mi]
                    a = self.gx(idx, scope, el.self_width(idx, scope))
                    v = self.store_rhs(rhs, scope, ew)
                    t = self.fresh()
                    self.put(depth, f"{t} = {a}")
                    self.put(depth, f"if {t} < {count}:")
                    if blocking:
                        self.put(depth + 1, f"M[{mi}][{t}] = {v}")
                    else:
                        self.put(depth + 1, f"MW.append(({mi}, {t}, {v}))")
                    continue
                if idx is not None:
                    raise HdlError(f"bit-indexed assignment to {full} is "
                                   "outside the subset")
                slot = el.slot(scope, name)
                if el.kinds[slot] == "wire":
                    raise HdlError(f"procedural assignment to wire {full}")
                v = self.store_rhs(rhs, scope, el.widths[slot])
                dst = "S" if blocking else "NS"
                self.put(depth, f"{dst}[{slot}] = {v}")
            elif tag == "if":
                _t, cond, then, els = st
                c = self.gx(cond, scope, el.self_width(cond, scope))
                self.put(depth, f"if {c}:")
                self.g_stmts(then, scope, depth + 1, blocking)
                if els:
                    self.put(depth, "else:")
                    self.g_stmts(els, scope, depth + 1, blocking)
            elif tag == "case":
                _t, subj, arms, default = st
                sw = el.self_width(subj, scope)
                t = self.fresh()
                self.put(depth, f"{t} = {self.gx(subj, scope, sw)}")
                kw = "if"
                for label, body in arms:
                    lw = max(sw, el.self_width(label, scope))
                    lv = self.gx(label, scope, lw)
                    self.put(depth, f"{kw} {t} == {lv}:")
                    self.g_stmts(body, scope, depth + 1, blocking)
                    kw = "elif"
                if default is not None:
                    if kw == "if":
                        self.g_stmts(default, scope, depth, blocking)
                    else:
                        self.put(depth, "else:")
                        self.g_stmts(default, scope, depth + 1, blocking)
            elif tag == "display":
                self.put(depth, f"out.append({st[1]!r})")
            elif tag == "finish":
                self.put(depth, "raise _Fin")
            elif tag == "readmemh":
                if not blocking:
                    raise HdlError("$readmemh outside an initial block")
                full = scope.prefix + st[2]
                if full not in el.mems:
                    raise HdlError(f"$readmemh into unknown memory {full}")
                self.put(depth, f"readmem({st[1]!r}, {el.mems[full]})")
            elif tag == "for":
                if not blocking:
                    raise HdlError("for loop outside an initial block")
                _t, var, init, cond, step, body = st
                slot = el.slot(scope, var)
                w = el.widths[slot]
                self.put(depth, f"S[{slot}] = "
                         f"{self.store_rhs(init, scope, w)}")
                c = self.gx(cond, scope, el.self_width(cond, scope))
                self.put(depth, f"while {c}:")
                self.g_stmts(body, scope, depth + 1, blocking)
                self.put(depth + 1, f"S[{slot}] = "
                         f"{self.store_rhs(step, scope, w)}")
            else:
                raise HdlError(f"unsupported statement {tag}")

    # ---- whole program -------------------------------------------------

    def build(self) -> str:
        el = self.e
        self.put(0, "def init(S, M, readmem, out):")
        if el.initials:
            for stmts, scope in el.initials:
                self.g_stmts(stmts, scope, 1, blocking=True)
        else:
            self.put(1, "pass")
        self.put(0, "def settle(S, M):")
        order = el.assign_order()
        if order:
            for idx in order:
                expr, scope = el.drivers[idx]
                self.put(1, f"S[{idx}] = "
                         f"{self.store_rhs(expr, scope, el.widths[idx])}")
        else:
            self.put(1, "pass")
        self.put(0, "def edge(S, NS, M, MW, out):")
        if el.always:
            for stmts, scope in el.always:
                self.g_stmts(stmts, scope, 1, blocking=False)
        else:
            self.put(1, "pass")
        return "\n".join(self.lines) + "\n"


def _read_hex_tokens(text: str) -> list[int]:
    vals = []
    for line in text.splitlines():
        cut = line.find("//")
        if cut >= 0:
            line = line[:cut]
        for tok in line.split():
            vals.append(int(tok, 16))
    return vals


class HdlSim:
    """One elaborated design plus its mutable state."""

    def __init__(self, modules, top: str, files: dict[str, str] | None = None,
                 base_dir=None):
        if isinstance(modules, str):
            modules = {m.name: m for m in parse_source(modules)}
        elif isinstance(modules, list):
            modules = {m.name: m for m in modules}
        self.e = _Elab(modules, top)
        e = self.e
        clocks = {e.canon(c) for c in e.clocks}
        if len(clocks) > 1:
            raise HdlError(f"multiple clocks: {sorted(clocks)}")
        if e.clockgens:
            if len(e.clockgens) > 1:
                raise HdlError("more than one clock generator")
            if clocks and e.clockgens[0] not in clocks:
                raise HdlError("clock generator does not drive the clock")
        self.files = dict(files or {})
        self.base_dir = Path(base_dir) if base_dir is not None else None
        src = _Gen(e).build()
        env = {"_Fin": _Fin}
        exec(compile(src, "<hdl>", "exec"), env)
        self._init = env["init"]
        self._settle = env["settle"]
        self._edge = env["edge"]
        self.S = [0] * len(e.widths)
        self.NS = [0] * len(e.widths)
        self.M = [[0] * count for _w, count in e.mem_sizes]
        self.MW: list = []
        self.out: list[str] = []
        self.finished = False
        self._init(self.S, self.M, self._readmem, self.out)

    def _readmem(self, fname: str, mi: int):
        if fname in self.files:
            text = self.files[fname]
        elif self.base_dir is not None and (self.base_dir / fname).exists():
            text = (self.base_dir / fname).read_text()
        else:
            raise SimError(f"$readmemh: no file {fname}")
        mem = self.M[mi]
        vals = _read_hex_tokens(text)
        if len(vals) > len(mem):
            raise SimError(f"$readmemh: {fname} overflows the memory")
        w = self.e.mem_sizes[mi][0]
        for i, v in enumerate(vals):
            mem[i] = v & _mask(w)

    # ---- harness access ----------------------------------------------

    def slot(self, name: str) -> int:
        idx = self.e.slots.get(name)
        if idx is None:
            raise HdlError(f"no signal named {name}")
        return idx

    def poke(self, name: str, value: int):
        idx = self.slot(name)
        self.S[idx] = value & _mask(self.e.widths[idx])

    def peek(self, name: str) -> int:
        return self.S[self.slot(name)]

    def settle(self):
        self._settle(self.S, self.M)

    def tick(self):
        """One clock edge: run every clocked block, then commit."""
        S, NS = self.S, self.NS
        NS[:] = S
        try:
            self._edge(S, NS, self.M, self.MW, self.out)
        except _Fin:
            self.finished = True
        for mi, a, v in self.MW:
            self.M[mi][a] = v
        self.MW.clear()
        self.S, self.NS = NS, S

    def cycle(self):
        self.settle()
        self.tick()
