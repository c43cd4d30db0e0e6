"""Type checking and semantic analysis for MiniC.

Responsibilities:
  * one flat scope per function, no shadowing, names unique;
  * every expression annotated with its ScalarType and every implicit
    conversion made explicit via Convert nodes (binary operands widen to the
    wider type, unsigned wins ties; bool promotes to i32 in arithmetic;
    assignments/arguments/returns may also truncate);
  * conditions become bool via an explicit "tobool" (compare-to-zero) node;
  * array bounds fold to compile-time constants >= 1;
  * the call graph must be acyclic; calls inside expressions are limited to
    pure functions (no stores through array references anywhere below them),
    because && and || evaluate both operands;
  * the named top function must exist.

Collects as many independent errors as it can before raising.
"""

from __future__ import annotations

from .nodes import (
    ArrayRefType, ArrayType, Assign, Binary, Block, BoolLit, BOOL, Call,
    Convert, Diagnostic, Expr, ExprStmt, For, FrontendError, FunctionDef, I32,
    If, Index, IntLit, Name, Pos, Program, Return, ScalarType, Stmt,
    TypedProgram, U32, U64, VarDecl, While, scalar_type, I64,
)

_ARITH = {"+", "-", "*", "/", "%", "&", "|", "^"}
_SHIFT = {"<<", ">>"}
_COMPARE = {"==", "!=", "<", "<=", ">", ">="}
_LOGIC = {"&&", "||"}


def _mask(v: int, w: int) -> int:
    return v & ((1 << w) - 1)


def _wrap(v: int, t: ScalarType) -> int:
    v = _mask(v, t.width)
    if t.signed and v >> (t.width - 1):
        v -= 1 << t.width
    return v


class _Checker:
    def __init__(self, prog: Program, top: str):
        self.prog = prog
        self.top = top
        self.diags: list[Diagnostic] = []
        self.funcs: dict[str, FunctionDef] = {}
        self.scope: dict[str, object] = {}
        self.current: FunctionDef | None = None

    # ---- diagnostics ------------------------------------------------------

    def error(self, pos: Pos, msg: str):
        self.diags.append(Diagnostic("error", msg, self.prog.path, pos.line, pos.col))

    # ---- entry ------------------------------------------------------------

    def run(self) -> TypedProgram:
        for f in self.prog.functions:
            if f.name in self.funcs:
                self.error(f.pos, f"redefinition of {f.name}")
            else:
                self.funcs[f.name] = f
        if self.top not in self.funcs:
            self.error(Pos(1, 1), f"top function not found: {self.top}")
        for f in self.prog.functions:
            self.check_function(f)
        if not self.diags:
            self.check_call_graph()
        if not self.diags:
            self.classify_purity()
            for f in self.prog.functions:
                self.check_call_positions(f)
        if self.diags:
            raise FrontendError(self.diags)
        return TypedProgram(self.prog.functions, self.top, self.prog.path)

    # ---- functions ----------------------------------------------------------

    def check_function(self, f: FunctionDef):
        self.current = f
        self.scope = {}
        f.locals = []
        for p in f.params:
            if p.name in self.scope:
                self.error(p.pos, f"redefinition of {p.name}")
            self.scope[p.name] = p.ty
        self.check_block(f.body)

    def check_block(self, b: Block):
        for s in b.stmts:
            self.check_stmt(s)

    def check_stmt(self, s: Stmt):
        if isinstance(s, Block):
            self.check_block(s)
        elif isinstance(s, VarDecl):
            self.check_decl(s)
        elif isinstance(s, Assign):
            self.check_assign(s)
        elif isinstance(s, If):
            s.cond = self.check_cond(s.cond)
            self.check_block(s.then)
            if s.els:
                self.check_block(s.els)
        elif isinstance(s, While):
            s.cond = self.check_cond(s.cond)
            self.check_block(s.body)
        elif isinstance(s, For):
            if s.init is not None:
                self.check_stmt(s.init)
            if s.cond is not None:
                s.cond = self.check_cond(s.cond)
            if s.step is not None:
                self.check_stmt(s.step)
            self.check_block(s.body)
        elif isinstance(s, Return):
            s.value = self.coerce(self.check_expr(s.value), self.current.ret, s.pos)
        elif isinstance(s, ExprStmt):
            s.expr = self.check_expr(s.expr)
        else:
            raise AssertionError(type(s))

    def check_decl(self, s: VarDecl):
        if s.name in self.scope:
            self.error(s.pos, f"redefinition of {s.name}")
            return
        if isinstance(s.declared, tuple):            # deferred array type
            _, elem, bound_expr = s.declared
            bound = self.const_eval(bound_expr)
            if bound is None:
                self.error(s.pos, "array bound not a constant")
                bound = 1
            if bound < 1:
                self.error(s.pos, f"array element count must be >= 1, got {bound}")
                bound = 1
            s.declared = ArrayType(elem, bound)
            const_init = None
            if s.array_init is not None:
                if len(s.array_init) > bound:
                    self.error(s.pos, f"too many initializers for {s.name}[{bound}]")
                const_init = []
                for e in s.array_init:
                    v = self.const_eval(e)
                    if v is None:
                        self.error(e.pos, "array initializer element is not a constant")
                        v = 0
                    const_init.append(_wrap(v, elem))
                const_init += [0] * (bound - len(const_init))
            s.const_init = const_init
            self.scope[s.name] = s.declared
            self.current.locals.append((s.name, s.declared, const_init))
            return
        self.scope[s.name] = s.declared
        self.current.locals.append((s.name, s.declared, None))
        if s.init is not None:
            s.init = self.coerce(self.check_expr(s.init), s.declared, s.pos)

    def check_assign(self, s: Assign):
        t = s.target
        if isinstance(t, Name):
            ty = self.scope.get(t.ident)
            if ty is None:
                self.error(t.pos, f"undefined identifier: {t.ident}")
                return
            if not isinstance(ty, ScalarType):
                self.error(t.pos, f"cannot assign to array {t.ident}")
                return
            t.ty = ty
        elif isinstance(t, Index):
            ty = self.element_type_of(t)
            if ty is None:
                return
            t.index = self.index_expr(t.index)
            t.ty = ty
        else:
            self.error(s.pos, "assignment target must be a variable or array element")
            return
        s.value = self.coerce(self.check_expr(s.value), t.ty, s.pos)

    def check_cond(self, e: Expr) -> Expr:
        return self.to_bool(self.check_expr(e))

    # ---- expressions ----------------------------------------------------------

    def check_expr(self, e: Expr) -> Expr:
        if isinstance(e, IntLit):
            e.ty = self.literal_type(e)
            return e
        if isinstance(e, BoolLit):
            e.ty = BOOL
            return e
        if isinstance(e, Name):
            ty = self.scope.get(e.ident)
            if ty is None:
                self.error(e.pos, f"undefined identifier: {e.ident}")
                e.ty = I32
                return e
            if not isinstance(ty, ScalarType):
                self.error(e.pos, f"array {e.ident} used as a scalar value")
                e.ty = I32
                return e
            e.ty = ty
            return e
        if isinstance(e, Index):
            ty = self.element_type_of(e)
            e.ty = ty if ty is not None else I32
            if ty is not None:
                e.index = self.index_expr(e.index)
            return e
        if isinstance(e, Call):
            return self.check_call(e)
        if isinstance(e, Binary):
            return self.check_binary(e)
        from .nodes import Unary
        if isinstance(e, Unary):
            return self.check_unary(e)
        raise AssertionError(type(e))

    def literal_type(self, e: IntLit) -> ScalarType:
        v = e.value
        if e.unsigned_suffix:
            if v <= 0xFFFFFFFF:
                return U32
            if v <= 0xFFFFFFFFFFFFFFFF:
                return U64
            self.error(e.pos, f"integer literal too large: {v}")
            return U64
        if v <= 0x7FFFFFFF:
            return I32
        if v <= 0xFFFFFFFF:
            return U32
        if v <= 0x7FFFFFFFFFFFFFFF:
            return I64
        if v <= 0xFFFFFFFFFFFFFFFF:
            return U64
        self.error(e.pos, f"integer literal too large: {v}")
        return U64

    def element_type_of(self, e: Index) -> ScalarType | None:
        ty = self.scope.get(e.base)
        if ty is None:
            self.error(e.pos, f"undefined identifier: {e.base}")
            return None
        if isinstance(ty, ArrayType):
            return ty.elem
        if isinstance(ty, ArrayRefType):
            return ty.elem
        self.error(e.pos, f"scalar {e.base} cannot be indexed")
        return None

    def index_expr(self, e: Expr) -> Expr:
        """Array index expressions are typed as unsigned 32-bit."""
        return self.coerce(self.check_expr(e), U32, e.pos)

    def check_call(self, e: Call) -> Expr:
        f = self.funcs.get(e.func)
        if f is None:
            self.error(e.pos, f"call to undefined function: {e.func}")
            e.ty = I32
            return e
        if len(e.args) != len(f.params):
            self.error(e.pos, f"{e.func} expects {len(f.params)} arguments, got {len(e.args)}")
            e.ty = f.ret
            return e
        new_args = []
        for a, p in zip(e.args, f.params):
            if isinstance(p.ty, ArrayRefType):
                # array arguments are passed by reference: a named local array
                # or another array-reference parameter of the same element type
                if not isinstance(a, Name):
                    self.error(a.pos, f"argument for array parameter {p.name} must be an array name")
                    new_args.append(a)
                    continue
                aty = self.scope.get(a.ident)
                if aty is None:
                    self.error(a.pos, f"undefined identifier: {a.ident}")
                elif isinstance(aty, ScalarType):
                    self.error(a.pos, "scalar parameter passed where array expected")
                elif aty.elem != p.ty.elem:
                    self.error(a.pos, f"array element type mismatch: {aty.elem} vs {p.ty.elem}")
                new_args.append(a)
            elif isinstance(a, Name) and isinstance(self.scope.get(a.ident), (ArrayType, ArrayRefType)):
                self.error(a.pos, f"array passed where scalar parameter {p.name} expected")
                new_args.append(a)
            else:
                new_args.append(self.coerce(self.check_expr(a), p.ty, a.pos))
        e.args = new_args
        e.ty = f.ret
        return e

    def check_unary(self, e):
        e.operand = self.check_expr(e.operand)
        if e.op == "!":
            e.operand = self.to_bool(e.operand)
            e.ty = BOOL
            return e
        # - and ~ : bool promotes to i32 first
        e.operand = self.promote_bool(e.operand)
        e.ty = e.operand.ty
        return e

    def check_binary(self, e: Binary) -> Expr:
        e.left = self.check_expr(e.left)
        e.right = self.check_expr(e.right)
        if e.op in _LOGIC:
            e.left = self.to_bool(e.left)
            e.right = self.to_bool(e.right)
            e.ty = BOOL
            return e
        if e.op in _SHIFT:
            e.left = self.promote_bool(e.left)
            e.right = self.coerce(self.promote_bool(e.right), U32, e.pos)
            e.ty = e.left.ty
            return e
        e.left = self.promote_bool(e.left)
        e.right = self.promote_bool(e.right)
        common = self.common_type(e.left.ty, e.right.ty)
        e.left = self.coerce(e.left, common, e.pos)
        e.right = self.coerce(e.right, common, e.pos)
        if e.op in _COMPARE:
            e.ty = BOOL
        else:
            e.ty = common
        return e

    # ---- conversions ------------------------------------------------------

    def common_type(self, a: ScalarType, b: ScalarType) -> ScalarType:
        """Wider width wins; on equal width, unsigned wins."""
        if a.width > b.width:
            w, s = a.width, a.signed
        elif b.width > a.width:
            w, s = b.width, b.signed
        else:
            w, s = a.width, a.signed and b.signed
        return scalar_type(w, s)

    def promote_bool(self, e: Expr) -> Expr:
        if e.ty == BOOL:
            return self.coerce(e, I32, e.pos)
        return e

    def to_bool(self, e: Expr) -> Expr:
        if e.ty == BOOL:
            return e
        c = Convert(e.pos, BOOL, "tobool", e)
        return c

    def coerce(self, e: Expr, to: ScalarType, pos: Pos) -> Expr:
        frm = e.ty
        if frm is None or frm == to:
            e.ty = e.ty or to
            return e
        if to == BOOL:
            return self.to_bool(e)
        if frm == BOOL:
            return Convert(e.pos, to, "zext", e)
        if frm.width < to.width:
            kind = "sext" if frm.signed else "zext"
        elif frm.width > to.width:
            kind = "trunc"
        else:
            # same width, signedness reinterpretation: bits unchanged
            kind = "sext" if frm.signed else "zext"
        return Convert(e.pos, to, kind, e)

    # ---- constant folding (array bounds and initializers) -----------------

    def const_eval(self, e: Expr) -> int | None:
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, BoolLit):
            return int(e.value)
        from .nodes import Unary
        if isinstance(e, Unary):
            v = self.const_eval(e.operand)
            if v is None:
                return None
            if e.op == "-":
                return -v
            if e.op == "~":
                return ~v
            if e.op == "!":
                return int(v == 0)
        if isinstance(e, Binary):
            a = self.const_eval(e.left)
            b = self.const_eval(e.right)
            if a is None or b is None:
                return None
            try:
                return {
                    "+": a + b, "-": a - b, "*": a * b,
                    "/": a // b if b else None, "%": a % b if b else None,
                    "<<": a << b, ">>": a >> b,
                    "&": a & b, "|": a | b, "^": a ^ b,
                }[e.op]
            except KeyError:
                return None
        return None

    # ---- call graph -------------------------------------------------------

    def calls_in(self, f: FunctionDef) -> list[str]:
        found: list[str] = []

        def walk_expr(e):
            if isinstance(e, Call):
                found.append(e.func)
                for a in e.args:
                    walk_expr(a)
            elif isinstance(e, Binary):
                walk_expr(e.left)
                walk_expr(e.right)
            elif isinstance(e, Convert):
                walk_expr(e.operand)
            elif isinstance(e, Index):
                walk_expr(e.index)
            else:
                from .nodes import Unary
                if isinstance(e, Unary):
                    walk_expr(e.operand)

        def walk_stmt(s):
            if isinstance(s, Block):
                for x in s.stmts:
                    walk_stmt(x)
            elif isinstance(s, VarDecl):
                if s.init is not None:
                    walk_expr(s.init)
            elif isinstance(s, Assign):
                walk_expr(s.target)
                walk_expr(s.value)
            elif isinstance(s, If):
                walk_expr(s.cond)
                walk_stmt(s.then)
                if s.els:
                    walk_stmt(s.els)
            elif isinstance(s, While):
                walk_expr(s.cond)
                walk_stmt(s.body)
            elif isinstance(s, For):
                if s.init:
                    walk_stmt(s.init)
                if s.cond:
                    walk_expr(s.cond)
                if s.step:
                    walk_stmt(s.step)
                walk_stmt(s.body)
            elif isinstance(s, Return):
                walk_expr(s.value)
            elif isinstance(s, ExprStmt):
                walk_expr(s.expr)

        walk_stmt(f.body)
        return found

    def check_call_graph(self):
        color: dict[str, int] = {}
        stack: list[str] = []

        def visit(name: str):
            color[name] = 1
            stack.append(name)
            for callee in self.calls_in(self.funcs[name]):
                if callee not in self.funcs:
                    continue
                if color.get(callee, 0) == 1:
                    cycle = stack[stack.index(callee):]
                    self.error(self.funcs[name].pos,
                               "recursive call cycle: " + " -> ".join(cycle))
                    continue
                if color.get(callee, 0) == 0:
                    visit(callee)
            stack.pop()
            color[name] = 2

        for name in self.funcs:
            if color.get(name, 0) == 0:
                visit(name)
            if self.diags:
                return

    def classify_purity(self):
        """A function is pure when it stores through no array reference/local
        array and calls only pure functions."""

        def writes_arrays(f: FunctionDef) -> bool:
            hit = False

            def walk(s):
                nonlocal hit
                if isinstance(s, Block):
                    for x in s.stmts:
                        walk(x)
                elif isinstance(s, Assign) and isinstance(s.target, Index):
                    hit = True
                elif isinstance(s, If):
                    walk(s.then)
                    if s.els:
                        walk(s.els)
                elif isinstance(s, While):
                    walk(s.body)
                elif isinstance(s, For):
                    if s.init:
                        walk(s.init)
                    if s.step:
                        walk(s.step)
                    walk(s.body)

            walk(f.body)
            return hit

        # propagate: impure if writes arrays or calls impure (call graph acyclic)
        order: list[str] = []
        seen: set[str] = set()

        def post(name):
            seen.add(name)
            for c in self.calls_in(self.funcs[name]):
                if c in self.funcs and c not in seen:
                    post(c)
            order.append(name)

        for name in self.funcs:
            if name not in seen:
                post(name)
        for name in order:
            f = self.funcs[name]
            f.pure = not writes_arrays(f) and all(
                self.funcs[c].pure for c in self.calls_in(f) if c in self.funcs)

    def check_call_positions(self, f: FunctionDef):
        """Impure calls may appear only as a whole statement or as the entire
        right-hand side of an assignment; && and || evaluate both sides."""

        def expr_ok(e, toplevel=False):
            if isinstance(e, Call):
                callee = self.funcs.get(e.func)
                if callee is not None and not callee.pure and not toplevel:
                    self.error(e.pos,
                               f"call to {e.func} (writes arrays) must be a whole statement")
                for a in e.args:
                    expr_ok(a)
            elif isinstance(e, Binary):
                expr_ok(e.left)
                expr_ok(e.right)
            elif isinstance(e, Convert):
                expr_ok(e.operand, toplevel)
            elif isinstance(e, Index):
                expr_ok(e.index)
            else:
                from .nodes import Unary
                if isinstance(e, Unary):
                    expr_ok(e.operand)

        def walk(s):
            if isinstance(s, Block):
                for x in s.stmts:
                    walk(x)
            elif isinstance(s, VarDecl):
                if s.init is not None:
                    expr_ok(s.init, toplevel=True)
            elif isinstance(s, Assign):
                expr_ok(s.value, toplevel=True)
                if isinstance(s.target, Index):
                    expr_ok(s.target.index)
            elif isinstance(s, If):
                expr_ok(s.cond)
                walk(s.then)
                if s.els:
                    walk(s.els)
            elif isinstance(s, While):
                expr_ok(s.cond)
                walk(s.body)
            elif isinstance(s, For):
                if s.init:
                    walk(s.init)
                if s.cond:
                    expr_ok(s.cond)
                if s.step:
                    walk(s.step)
                walk(s.body)
            elif isinstance(s, Return):
                expr_ok(s.value, toplevel=True)
            elif isinstance(s, ExprStmt):
                expr_ok(s.expr, toplevel=True)

        walk(f.body)


def typecheck(prog: Program, top: str) -> TypedProgram:
    """Check and annotate a parsed program; raises FrontendError on any error."""
    return _Checker(prog, top).run()
