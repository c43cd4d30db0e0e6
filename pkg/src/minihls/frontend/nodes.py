"""Syntax tree and type definitions for MiniC.

MiniC is the integer C subset the flow accepts: scalar integer types of 8 to
64 bits plus bool, fixed-size local arrays, array-reference parameters,
structured control flow, and calls to other defined functions. One node
family serves both the parsed and the typed tree; the typechecker fills in
the `ty` annotations and inserts explicit Convert nodes for every implicit
conversion, so later stages never widen implicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..errors import ToolError


# ======================================================================
# types
# ======================================================================

@dataclass(frozen=True)
class ScalarType:
    name: str
    width: int      # bits
    signed: bool

    def __str__(self) -> str:
        return self.name


BOOL = ScalarType("bool", 1, False)
I8 = ScalarType("i8", 8, True)
I16 = ScalarType("i16", 16, True)
I32 = ScalarType("i32", 32, True)
I64 = ScalarType("i64", 64, True)
U8 = ScalarType("u8", 8, False)
U16 = ScalarType("u16", 16, False)
U32 = ScalarType("u32", 32, False)
U64 = ScalarType("u64", 64, False)

SCALAR_TYPES = {t.name: t for t in (BOOL, I8, I16, I32, I64, U8, U16, U32, U64)}

# C spellings accepted by the grammar; canonical printing uses the short names.
C_TYPE_ALIASES = {
    "char": I8,
    "short": I16,
    "int": I32,
    "long": I64,
}


def scalar_type(width: int, signed: bool) -> ScalarType:
    for t in SCALAR_TYPES.values():
        if t.width == width and t.signed == signed and t is not BOOL:
            return t
    if width == 1 and not signed:
        return BOOL
    raise KeyError((width, signed))


@dataclass(frozen=True)
class ArrayType:
    """A fixed-size local array; the element count is compile-time constant."""
    elem: ScalarType
    count: int

    def __str__(self) -> str:
        return f"{self.elem}[{self.count}]"


@dataclass(frozen=True)
class ArrayRefType:
    """An array-reference parameter (`T* p` or `T p[]`): no size, no arithmetic."""
    elem: ScalarType

    def __str__(self) -> str:
        return f"{self.elem}*"


Type = Union[ScalarType, ArrayType, ArrayRefType]


# ======================================================================
# diagnostics
# ======================================================================

@dataclass(frozen=True)
class Pos:
    line: int
    col: int


@dataclass(frozen=True)
class Diagnostic:
    severity: str          # "error" | "warning"
    message: str
    path: str
    line: int
    col: int

    def render(self) -> str:
        return f"{self.path}:{self.line}:{self.col}: {self.severity}: {self.message}"


class FrontendError(ToolError):
    """Raised when parsing or typechecking produced error diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(d.render() for d in self.diagnostics))


# ======================================================================
# expressions
# ======================================================================

@dataclass
class Expr:
    pos: Pos
    ty: Optional[ScalarType] = field(default=None, compare=False)


@dataclass
class IntLit(Expr):
    value: int = 0
    unsigned_suffix: bool = False


@dataclass
class BoolLit(Expr):
    value: bool = False


@dataclass
class Name(Expr):
    ident: str = ""


@dataclass
class Unary(Expr):
    op: str = ""            # - ~ !
    operand: Expr = None


@dataclass
class Binary(Expr):
    op: str = ""            # + - * / % << >> & | ^ && || == != < <= > >=
    left: Expr = None
    right: Expr = None


@dataclass
class Index(Expr):
    base: str = ""          # array variables are always indexed by name
    index: Expr = None


@dataclass
class Call(Expr):
    func: str = ""
    args: list[Expr] = field(default_factory=list)


@dataclass
class Convert(Expr):
    """Explicit conversion inserted by the typechecker.

    kind: "sext" | "zext" | "trunc" | "tobool" (compare against zero).
    Width-preserving sext/zext reinterpret signedness without changing bits.
    """
    kind: str = ""
    operand: Expr = None


# ======================================================================
# statements
# ======================================================================

@dataclass
class Stmt:
    pos: Pos


@dataclass
class Block(Stmt):
    stmts: list[Stmt] = field(default_factory=list)


@dataclass
class VarDecl(Stmt):
    name: str = ""
    declared: Type = None                 # ScalarType or ArrayType
    init: Optional[Expr] = None           # scalar initializer expression
    array_init: Optional[list[Expr]] = None   # brace list; constants only
    # filled by the typechecker for array initializers:
    const_init: Optional[list[int]] = field(default=None, compare=False)


@dataclass
class Assign(Stmt):
    target: Expr = None     # Name or Index
    value: Expr = None


@dataclass
class If(Stmt):
    cond: Expr = None
    then: Block = None
    els: Optional[Block] = None


@dataclass
class While(Stmt):
    cond: Expr = None
    body: Block = None


@dataclass
class For(Stmt):
    init: Optional[Stmt] = None     # VarDecl or Assign
    cond: Optional[Expr] = None
    step: Optional[Stmt] = None     # Assign
    body: Block = None


@dataclass
class Return(Stmt):
    value: Expr = None


@dataclass
class ExprStmt(Stmt):
    expr: Expr = None


# ======================================================================
# functions and programs
# ======================================================================

@dataclass
class Param:
    name: str
    ty: Type                # ScalarType or ArrayRefType
    pos: Pos


@dataclass
class FunctionDef:
    name: str
    ret: ScalarType
    params: list[Param]
    body: Block
    pos: Pos
    # (name, type, constant initializer or None); filled by the typechecker.
    locals: list[tuple[str, Type, Optional[list[int]]]] = field(default_factory=list)
    # True when the body stores through no array reference and calls only pure
    # functions; impure calls are restricted to statement position.
    pure: bool = True


@dataclass
class Program:
    functions: list[FunctionDef]
    path: str


@dataclass
class TypedProgram:
    functions: list[FunctionDef]
    top: str
    path: str

    def function(self, name: str) -> FunctionDef:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    @property
    def top_function(self) -> FunctionDef:
        return self.function(self.top)


def structurally_equal(a, b) -> bool:
    """Tree equality ignoring positions and type annotations (round-trip check)."""
    if type(a) is not type(b):
        return False
    if isinstance(a, (ScalarType, ArrayType, ArrayRefType)):
        return a == b
    if isinstance(a, (list, tuple)):
        return len(a) == len(b) and all(structurally_equal(x, y) for x, y in zip(a, b))
    if not hasattr(a, "__dataclass_fields__"):
        return a == b
    for name in a.__dataclass_fields__:
        if name in ("pos", "ty", "const_init", "pure", "locals"):
            continue
        if not structurally_equal(getattr(a, name), getattr(b, name)):
            return False
    return True
