"""Golden reference interpreter for typed MiniC programs.

Walks the typed tree directly (calls are evaluated, not inlined) under the
shared integer semantics from minihls.intops, so every later stage of the
flow has an independent source of expected results. A step budget guards
against non-terminating inputs.

Array access semantics, identical to the generated hardware:
  * local arrays: the byte offset index*elem_size wraps at 2^32, the word
    index keeps only the RAM address width ceil(log2(n)) bits; lanes at or
    beyond the element count read 0 and drop writes;
  * external arrays: byte address (base + index*elem_size) mod 2^32 into the
    bundle's byte image, little-endian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import SimError
from ..frontend.nodes import (
    ArrayRefType, ArrayType, Assign, Binary, Block, BoolLit, Call, Convert,
    Expr, ExprStmt, For, FunctionDef, If, Index, IntLit, Name, Return,
    ScalarType, Stmt, TypedProgram, Unary, VarDecl, While, BOOL,
)
from .. import intops
from .memimage import MemoryImage

DEFAULT_STEP_BUDGET = 10 ** 8

_BINOP_NAME = {
    "+": "add", "-": "sub", "*": "mul", "/": "div", "%": "mod",
    "<<": "shl", ">>": "shr", "&": "and", "|": "or", "^": "xor",
    "==": "eq", "!=": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge",
}


class StepBudgetExceeded(SimError):
    pass


@dataclass
class InterpResult:
    value: int            # canonical value of the top function's return type
    value_bits: int       # raw bit pattern zero-extended into a 64-bit container
    steps: int
    warnings: list[str] = field(default_factory=list)


class MemRef:
    elem: ScalarType

    def load(self, index: int) -> int:
        raise NotImplementedError

    def store(self, index: int, value: int):
        raise NotImplementedError


class LocalArrayRef(MemRef):
    def __init__(self, elem: ScalarType, count: int):
        self.elem = elem
        self.count = count
        self.data = [0] * count
        self.addr_width = max(1, (count - 1).bit_length()) if count > 1 else 1

    def _word_index(self, index: int) -> int:
        esz = self.elem.width // 8
        byte_off = (intops.bits_of(index, 32) * esz) & 0xFFFFFFFF
        word = byte_off >> (esz.bit_length() - 1)
        return word & ((1 << self.addr_width) - 1)

    def load(self, index: int) -> int:
        w = self._word_index(index)
        if w < self.count:
            return self.data[w]
        return 0

    def store(self, index: int, value: int):
        w = self._word_index(index)
        if w < self.count:
            self.data[w] = intops.wrap(value, self.elem.width, self.elem.signed)

    def fill(self, values: list[int]):
        for i, v in enumerate(values[: self.count]):
            self.data[i] = intops.wrap(v, self.elem.width, self.elem.signed)
        for i in range(len(values), self.count):
            self.data[i] = 0


class ExtArrayRef(MemRef):
    def __init__(self, elem: ScalarType, image: MemoryImage, base: int):
        self.elem = elem
        self.image = image
        self.base = base & 0xFFFFFFFF

    def _addr(self, index: int) -> int:
        esz = self.elem.width // 8
        return (self.base + intops.bits_of(index, 32) * esz) & 0xFFFFFFFF

    def load(self, index: int) -> int:
        esz = self.elem.width // 8
        raw = self.image.read(self._addr(index), esz)
        return intops.wrap(raw, self.elem.width, self.elem.signed)

    def store(self, index: int, value: int):
        esz = self.elem.width // 8
        self.image.write(self._addr(index), esz, intops.bits_of(value, self.elem.width))


class _Return(Exception):
    def __init__(self, value: int):
        self.value = value


class _Interp:
    def __init__(self, prog: TypedProgram, budget: int):
        self.prog = prog
        self.budget = budget
        self.steps = 0
        self.warnings: list[str] = []

    def tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise StepBudgetExceeded(
                f"step budget exceeded ({self.budget} steps)")

    def run(self, args: dict[str, object]) -> int:
        f = self.prog.top_function
        env: dict[str, object] = {}
        for p in f.params:
            if p.name not in args:
                raise SimError(f"missing argument: {p.name}")
            a = args[p.name]
            if isinstance(p.ty, ArrayRefType):
                if isinstance(a, MemRef):
                    env[p.name] = a
                else:
                    image, base = a
                    env[p.name] = ExtArrayRef(p.ty.elem, image, base)
            else:
                env[p.name] = intops.wrap(int(a), p.ty.width, p.ty.signed)
        return self.call_body(f, env)

    def call_body(self, f: FunctionDef, env: dict[str, object]) -> int:
        try:
            self.exec_block(f.body, env)
        except _Return as r:
            return r.value
        # falling off the end returns zero
        return 0

    # ---- statements -------------------------------------------------------

    def exec_block(self, b: Block, env):
        for s in b.stmts:
            self.exec_stmt(s, env)

    def exec_stmt(self, s: Stmt, env):
        self.tick()
        if isinstance(s, Block):
            self.exec_block(s, env)
        elif isinstance(s, VarDecl):
            if isinstance(s.declared, ArrayType):
                ref = LocalArrayRef(s.declared.elem, s.declared.count)
                if s.const_init is not None:
                    ref.fill(s.const_init)
                env[s.name] = ref
            else:
                env[s.name] = (self.eval(s.init, env)
                               if s.init is not None else 0)
        elif isinstance(s, Assign):
            v = self.eval(s.value, env)
            t = s.target
            if isinstance(t, Name):
                env[t.ident] = v
            else:
                idx = self.eval(t.index, env)
                env[t.base].store(idx, v)
        elif isinstance(s, If):
            if self.eval(s.cond, env):
                self.exec_block(s.then, env)
            elif s.els is not None:
                self.exec_block(s.els, env)
        elif isinstance(s, While):
            while True:
                self.tick()
                if not self.eval(s.cond, env):
                    break
                self.exec_block(s.body, env)
        elif isinstance(s, For):
            if s.init is not None:
                self.exec_stmt(s.init, env)
            while True:
                self.tick()
                if s.cond is not None and not self.eval(s.cond, env):
                    break
                self.exec_block(s.body, env)
                if s.step is not None:
                    self.exec_stmt(s.step, env)
        elif isinstance(s, Return):
            raise _Return(self.eval(s.value, env))
        elif isinstance(s, ExprStmt):
            self.eval(s.expr, env)
        else:
            raise AssertionError(type(s))

    # ---- expressions ------------------------------------------------------

    def eval(self, e: Expr, env) -> int:
        self.tick()
        if isinstance(e, IntLit):
            return intops.wrap(e.value, e.ty.width, e.ty.signed)
        if isinstance(e, BoolLit):
            return int(e.value)
        if isinstance(e, Name):
            return env[e.ident]
        if isinstance(e, Index):
            idx = self.eval(e.index, env)
            return env[e.base].load(idx)
        if isinstance(e, Convert):
            v = self.eval(e.operand, env)
            st = e.operand.ty
            return intops.convert(e.kind, v, st.width, st.signed,
                                  e.ty.width, e.ty.signed)
        if isinstance(e, Unary):
            v = self.eval(e.operand, env)
            if e.op == "-":
                return intops.unop("neg", v, e.ty.width, e.ty.signed)
            if e.op == "~":
                return intops.unop("not", v, e.ty.width, e.ty.signed)
            if e.op == "!":
                return int(v == 0)
            raise AssertionError(e.op)
        if isinstance(e, Binary):
            a = self.eval(e.left, env)
            b = self.eval(e.right, env)
            if e.op in ("&&", "||"):
                # both operands always evaluated; see the language notes
                return int(bool(a) and bool(b)) if e.op == "&&" else int(bool(a) or bool(b))
            op = _BINOP_NAME[e.op]
            t = e.left.ty
            if op in ("div", "mod") and b == 0:
                self.warn("division by zero")
            return intops.binop(op, a, b, t.width, t.signed)
        if isinstance(e, Call):
            f = self.prog.function(e.func)
            cenv: dict[str, object] = {}
            for p, a in zip(f.params, e.args):
                if isinstance(p.ty, ArrayRefType):
                    cenv[p.name] = env[a.ident]     # pass by reference
                else:
                    cenv[p.name] = self.eval(a, env)
            return self.call_body(f, cenv)
        raise AssertionError(type(e))

    def warn(self, msg: str):
        if len(self.warnings) < 64:
            self.warnings.append(msg)


def interpret(prog: TypedProgram, args: dict[str, object],
              step_budget: int = DEFAULT_STEP_BUDGET) -> InterpResult:
    """Run the top function. `args` maps parameter names to ints for scalars
    and to (MemoryImage, base_address) pairs for array references; external
    images are updated in place."""
    it = _Interp(prog, step_budget)
    v = it.run(args)
    ret = prog.top_function.ret
    return InterpResult(
        value=v,
        value_bits=intops.bits_of(v, ret.width),
        steps=it.steps,
        warnings=it.warnings,
    )
