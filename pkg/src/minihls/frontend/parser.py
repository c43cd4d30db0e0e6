"""Recursive-descent parser for MiniC.

Produces an untyped tree; compound assignments and increment/decrement
statements are desugared here so the rest of the flow sees plain assignments.
The accepted grammar is written out in docs/minic.md.
"""

from __future__ import annotations

from .lexer import Token, tokenize
from .nodes import (
    ArrayRefType, ArrayType, Assign, Binary, Block, BoolLit, C_TYPE_ALIASES,
    Diagnostic, Expr, ExprStmt, For, FrontendError, FunctionDef, If, Index,
    IntLit, Name, Param, Pos, Program, Return, SCALAR_TYPES, ScalarType, Stmt,
    Unary, VarDecl, While, scalar_type,
)

_ASSIGN_OPS = {"=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^="}

# binary precedence, loosest first
_BIN_LEVELS = [
    ["||"],
    ["&&"],
    ["|"],
    ["^"],
    ["&"],
    ["==", "!="],
    ["<", "<=", ">", ">="],
    ["<<", ">>"],
    ["+", "-"],
    ["*", "/", "%"],
]

_TYPE_START = set(SCALAR_TYPES) | set(C_TYPE_ALIASES) | {"unsigned", "signed", "float", "double", "void"}


class _Parser:
    def __init__(self, toks: list[Token], path: str):
        self.toks = toks
        self.path = path
        self.i = 0

    # ---- token plumbing -------------------------------------------------

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    def accept(self, kind: str) -> Token | None:
        if self.at(kind):
            return self.next()
        return None

    def expect(self, kind: str, what: str = "") -> Token:
        t = self.peek()
        if t.kind != kind:
            got = t.text if t.kind != "eof" else "end of input"
            self.fail(t, f"expected {what or kind!r}, found {got!r}")
        return self.next()

    def fail(self, tok: Token, msg: str):
        raise FrontendError([Diagnostic("error", msg, self.path, tok.line, tok.col)])

    def pos(self, tok: Token) -> Pos:
        return Pos(tok.line, tok.col)

    # ---- types ----------------------------------------------------------

    def at_type(self) -> bool:
        t = self.peek()
        return t.kind == "kw" and t.text in _TYPE_START

    def parse_scalar_type(self) -> ScalarType:
        t = self.next()
        if t.text in ("float", "double", "void"):
            self.fail(t, f"unsupported type: {t.text}")
        if t.text in SCALAR_TYPES:
            return SCALAR_TYPES[t.text]
        if t.text in C_TYPE_ALIASES:
            return C_TYPE_ALIASES[t.text]
        if t.text == "signed":
            nxt = self.peek()
            if nxt.kind == "kw" and nxt.text in C_TYPE_ALIASES:
                self.next()
                return C_TYPE_ALIASES[nxt.text]
            return SCALAR_TYPES["i32"]
        if t.text == "unsigned":
            nxt = self.peek()
            if nxt.kind == "kw" and nxt.text in C_TYPE_ALIASES:
                self.next()
                base = C_TYPE_ALIASES[nxt.text]
                return scalar_type(base.width, False)
            return SCALAR_TYPES["u32"]
        self.fail(t, f"expected a type, found {t.text!r}")

    # ---- program --------------------------------------------------------

    def parse_program(self) -> Program:
        funcs = []
        while not self.at("eof"):
            funcs.append(self.parse_function())
        return Program(funcs, self.path)

    def parse_function(self) -> FunctionDef:
        start = self.peek()
        ret = self.parse_scalar_type()
        name = self.expect("ident", "function name")
        self.expect("(")
        params: list[Param] = []
        if not self.at(")"):
            while True:
                params.append(self.parse_param())
                if not self.accept(","):
                    break
        self.expect(")")
        body = self.parse_block()
        return FunctionDef(name.text, ret, params, body, self.pos(start))

    def parse_param(self) -> Param:
        start = self.peek()
        elem = self.parse_scalar_type()
        is_ref = self.accept("*") is not None
        name = self.expect("ident", "parameter name")
        if self.accept("["):
            self.expect("]")
            is_ref = True
        ty = ArrayRefType(elem) if is_ref else elem
        return Param(name.text, ty, self.pos(start))

    # ---- statements -----------------------------------------------------

    def parse_block(self) -> Block:
        start = self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.at("eof"):
                self.fail(self.peek(), "unterminated block")
            stmts.append(self.parse_stmt())
        self.expect("}")
        return Block(self.pos(start), stmts)

    def parse_stmt(self) -> Stmt:
        t = self.peek()
        if t.kind == "{":
            return self.parse_block()
        if t.kind == "kw" and t.text == "if":
            return self.parse_if()
        if t.kind == "kw" and t.text == "while":
            return self.parse_while()
        if t.kind == "kw" and t.text == "for":
            return self.parse_for()
        if t.kind == "kw" and t.text == "return":
            self.next()
            value = self.parse_expr()
            self.expect(";")
            return Return(self.pos(t), value)
        if self.at_type():
            s = self.parse_decl()
            self.expect(";")
            return s
        s = self.parse_simple_stmt()
        self.expect(";")
        return s

    def parse_decl(self) -> VarDecl:
        start = self.peek()
        elem = self.parse_scalar_type()
        name = self.expect("ident", "variable name")
        if self.accept("["):
            bound = self.parse_expr()
            self.expect("]")
            arr_init = None
            if self.accept("="):
                self.expect("{")
                arr_init = []
                if not self.at("}"):
                    while True:
                        arr_init.append(self.parse_expr())
                        if not self.accept(","):
                            break
                self.expect("}")
            # the bound must fold to a constant; checked by the typechecker
            decl = VarDecl(self.pos(start), name.text, None, None, arr_init)
            decl.declared = ("array", elem, bound)
            return decl
        init = None
        if self.accept("="):
            init = self.parse_expr()
        return VarDecl(self.pos(start), name.text, elem, init, None)

    def parse_if(self) -> If:
        start = self.next()
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self.parse_stmt_as_block()
        els = None
        if self.peek().kind == "kw" and self.peek().text == "else":
            self.next()
            els = self.parse_stmt_as_block()
        return If(self.pos(start), cond, then, els)

    def parse_stmt_as_block(self) -> Block:
        if self.at("{"):
            return self.parse_block()
        s = self.parse_stmt()
        return Block(s.pos, [s])

    def parse_while(self) -> While:
        start = self.next()
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        return While(self.pos(start), cond, self.parse_stmt_as_block())

    def parse_for(self) -> For:
        start = self.next()
        self.expect("(")
        init = None
        if not self.at(";"):
            init = self.parse_decl() if self.at_type() else self.parse_simple_stmt()
        self.expect(";")
        cond = None
        if not self.at(";"):
            cond = self.parse_expr()
        self.expect(";")
        step = None
        if not self.at(")"):
            step = self.parse_simple_stmt()
        self.expect(")")
        return For(self.pos(start), init, cond, step, self.parse_stmt_as_block())

    def parse_simple_stmt(self) -> Stmt:
        """Assignment, increment/decrement, or expression statement (no ';')."""
        t = self.peek()
        if t.kind in ("++", "--"):
            self.next()
            target = self.parse_unary()
            return self._incdec(target, t)
        e = self.parse_expr()
        nxt = self.peek()
        if nxt.kind in _ASSIGN_OPS:
            self.next()
            self._check_target(e, nxt)
            rhs = self.parse_expr()
            if nxt.kind == "=":
                return Assign(e.pos, e, rhs)
            op = nxt.kind[:-1]
            return Assign(e.pos, e, Binary(e.pos, None, op, self._copy_target(e), rhs))
        if nxt.kind in ("++", "--"):
            self.next()
            self._check_target(e, nxt)
            return self._incdec(e, nxt)
        return ExprStmt(e.pos, e)

    def _incdec(self, target: Expr, tok: Token) -> Assign:
        self._check_target(target, tok)
        op = "+" if tok.kind == "++" else "-"
        one = IntLit(self.pos(tok), None, 1, False)
        return Assign(target.pos, target, Binary(target.pos, None, op, self._copy_target(target), one))

    def _check_target(self, e: Expr, tok: Token):
        if not isinstance(e, (Name, Index)):
            self.fail(tok, "assignment target must be a variable or array element")

    def _copy_target(self, e: Expr) -> Expr:
        if isinstance(e, Name):
            return Name(e.pos, None, e.ident)
        assert isinstance(e, Index)
        return Index(e.pos, None, e.base, e.index)

    # ---- expressions ------------------------------------------------------

    def parse_expr(self, level: int = 0) -> Expr:
        if level >= len(_BIN_LEVELS):
            return self.parse_unary()
        left = self.parse_expr(level + 1)
        while self.peek().kind in _BIN_LEVELS[level]:
            op = self.next()
            right = self.parse_expr(level + 1)
            left = Binary(left.pos, None, op.kind, left, right)
        return left

    def parse_unary(self) -> Expr:
        t = self.peek()
        if t.kind in ("-", "~", "!"):
            self.next()
            return Unary(self.pos(t), None, t.kind, self.parse_unary())
        if t.kind == "+":
            self.next()
            return self.parse_unary()
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        t = self.peek()
        if t.kind == "(":
            self.next()
            e = self.parse_expr()
            self.expect(")")
            return self._maybe_index(e)
        if t.kind == "int":
            self.next()
            return IntLit(self.pos(t), None, t.value, t.unsigned_suffix)
        if t.kind == "kw" and t.text in ("true", "false"):
            self.next()
            return BoolLit(self.pos(t), None, t.text == "true")
        if t.kind == "kw":
            self.fail(t, f"unexpected keyword {t.text!r} in expression")
        if t.kind == "ident":
            self.next()
            if self.at("("):
                self.next()
                args = []
                if not self.at(")"):
                    while True:
                        args.append(self.parse_expr())
                        if not self.accept(","):
                            break
                self.expect(")")
                from .nodes import Call
                return Call(self.pos(t), None, t.text, args)
            return self._maybe_index(Name(self.pos(t), None, t.text))
        self.fail(t, f"expected an expression, found {t.text or t.kind!r}")

    def _maybe_index(self, e: Expr) -> Expr:
        if self.at("["):
            if not isinstance(e, Name):
                self.fail(self.peek(), "only named arrays can be indexed")
            self.next()
            idx = self.parse_expr()
            self.expect("]")
            return Index(e.pos, None, e.ident, idx)
        return e


def parse_program(src: str, path: str = "<input>") -> Program:
    """Parse MiniC source; raises FrontendError with >=1 diagnostic on bad input."""
    return _Parser(tokenize(src, path), path).parse_program()
