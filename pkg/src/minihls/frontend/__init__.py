"""MiniC frontend: lexer, parser, typechecker, pretty-printer."""

from .nodes import (
    ArrayRefType, ArrayType, BOOL, Diagnostic, FrontendError, FunctionDef,
    I8, I16, I32, I64, Param, Program, ScalarType, TypedProgram,
    U8, U16, U32, U64, SCALAR_TYPES, scalar_type, structurally_equal,
)
from .lexer import tokenize
from .parser import parse_program
from .printer import print_program
from .typecheck import typecheck


def load_program(text: str, path: str = "<input>",
                 top: str | None = None) -> TypedProgram:
    """Parse and typecheck in one step; raises FrontendError with diagnostics.

    Without an explicit top the last function in the file is used, matching
    the declare-before-use order the language enforces for helpers.
    """
    prog = parse_program(text, path)
    if top is None:
        if not prog.functions:
            raise FrontendError("no functions in the source file")
        top = prog.functions[-1].name
    return typecheck(prog, top)


__all__ = [
    "ArrayRefType", "ArrayType", "BOOL", "Diagnostic", "FrontendError",
    "FunctionDef", "I8", "I16", "I32", "I64", "Param", "Program",
    "ScalarType", "TypedProgram", "U8", "U16", "U32", "U64", "SCALAR_TYPES",
    "scalar_type", "structurally_equal", "tokenize", "parse_program",
    "print_program", "typecheck", "load_program",
]
