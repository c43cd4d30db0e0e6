"""Canonical MiniC pretty-printer. parse(print(parse(src))) is structurally
identical to parse(src); Convert nodes are transparent (they reprint as their
operand, since re-typechecking reinserts them)."""

from __future__ import annotations

from .nodes import (
    ArrayRefType, ArrayType, Assign, Binary, Block, BoolLit, Call, Convert,
    Expr, ExprStmt, For, FunctionDef, If, Index, IntLit, Name, Program,
    Return, Stmt, TypedProgram, Unary, VarDecl, While,
)

_PREC = {
    "||": 1, "&&": 2, "|": 3, "^": 4, "&": 5,
    "==": 6, "!=": 6,
    "<": 7, "<=": 7, ">": 7, ">=": 7,
    "<<": 8, ">>": 8,
    "+": 9, "-": 9,
    "*": 10, "/": 10, "%": 10,
}
_UNARY_PREC = 11


def print_expr(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, Convert):
        return print_expr(e.operand, parent_prec)
    if isinstance(e, IntLit):
        return str(e.value) + ("u" if e.unsigned_suffix else "")
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Name):
        return e.ident
    if isinstance(e, Index):
        return f"{e.base}[{print_expr(e.index)}]"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(print_expr(a) for a in e.args)})"
    if isinstance(e, Unary):
        s = f"{e.op}{print_expr(e.operand, _UNARY_PREC)}"
        return s if parent_prec < _UNARY_PREC else f"({s})"
    if isinstance(e, Binary):
        p = _PREC[e.op]
        s = f"{print_expr(e.left, p - 1)} {e.op} {print_expr(e.right, p)}"
        # left-associative: the left child may share this level, the right may not
        return s if parent_prec < p else f"({s})"
    raise AssertionError(type(e))


def _print_decl(s: VarDecl) -> str:
    if isinstance(s.declared, ArrayType):
        out = f"{s.declared.elem} {s.name}[{s.declared.count}]"
        if s.array_init is not None:
            out += " = {" + ", ".join(print_expr(e) for e in s.array_init) + "}"
        return out
    if isinstance(s.declared, tuple):     # not yet typechecked
        _, elem, bound = s.declared
        out = f"{elem} {s.name}[{print_expr(bound)}]"
        if s.array_init is not None:
            out += " = {" + ", ".join(print_expr(e) for e in s.array_init) + "}"
        return out
    out = f"{s.declared} {s.name}"
    if s.init is not None:
        out += f" = {print_expr(s.init)}"
    return out


def _print_simple(s: Stmt) -> str:
    """A statement without trailing ';' (for-loop init/step position)."""
    if isinstance(s, VarDecl):
        return _print_decl(s)
    if isinstance(s, Assign):
        return f"{print_expr(s.target)} = {print_expr(s.value)}"
    if isinstance(s, ExprStmt):
        return print_expr(s.expr)
    raise AssertionError(type(s))


def _print_stmt(s: Stmt, ind: int, out: list[str]):
    pad = "    " * ind
    if isinstance(s, Block):
        out.append(pad + "{")
        for x in s.stmts:
            _print_stmt(x, ind + 1, out)
        out.append(pad + "}")
    elif isinstance(s, (VarDecl, Assign, ExprStmt)):
        out.append(pad + _print_simple(s) + ";")
    elif isinstance(s, If):
        out.append(pad + f"if ({print_expr(s.cond)}) {{")
        for x in s.then.stmts:
            _print_stmt(x, ind + 1, out)
        if s.els is not None:
            out.append(pad + "} else {")
            for x in s.els.stmts:
                _print_stmt(x, ind + 1, out)
        out.append(pad + "}")
    elif isinstance(s, While):
        out.append(pad + f"while ({print_expr(s.cond)}) {{")
        for x in s.body.stmts:
            _print_stmt(x, ind + 1, out)
        out.append(pad + "}")
    elif isinstance(s, For):
        init = _print_simple(s.init) if s.init is not None else ""
        cond = print_expr(s.cond) if s.cond is not None else ""
        step = _print_simple(s.step) if s.step is not None else ""
        out.append(pad + f"for ({init}; {cond}; {step}) {{")
        for x in s.body.stmts:
            _print_stmt(x, ind + 1, out)
        out.append(pad + "}")
    elif isinstance(s, Return):
        out.append(pad + f"return {print_expr(s.value)};")
    else:
        raise AssertionError(type(s))


def print_function(f: FunctionDef) -> str:
    params = []
    for p in f.params:
        if isinstance(p.ty, ArrayRefType):
            params.append(f"{p.ty.elem}* {p.name}")
        else:
            params.append(f"{p.ty} {p.name}")
    out = [f"{f.ret} {f.name}({', '.join(params)}) {{"]
    for s in f.body.stmts:
        _print_stmt(s, 1, out)
    out.append("}")
    return "\n".join(out)


def print_program(prog: Program | TypedProgram) -> str:
    return "\n\n".join(print_function(f) for f in prog.functions) + "\n"
