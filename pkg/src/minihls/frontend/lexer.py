"""Hand-written lexer for MiniC. Tracks line/column for diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

from .nodes import Diagnostic, FrontendError

KEYWORDS = {
    "bool", "i8", "i16", "i32", "i64", "u8", "u16", "u32", "u64",
    "char", "short", "int", "long", "unsigned", "signed",
    "if", "else", "while", "for", "return", "true", "false",
    # recognized so their use yields a clean "unsupported type" error
    "float", "double", "void",
}

# longest first so maximal munch works by scanning in order
PUNCT = [
    "<<=", ">>=",
    "==", "!=", "<=", ">=", "&&", "||", "<<", ">>", "++", "--",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "{", "}", "(", ")", "[", "]", ";", ",", "=",
    "<", ">", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!",
]


@dataclass(frozen=True)
class Token:
    kind: str     # "ident" | "int" | "kw" | punctuation text | "eof"
    text: str
    value: int | None
    unsigned_suffix: bool
    line: int
    col: int


def _err(path: str, line: int, col: int, msg: str) -> FrontendError:
    return FrontendError([Diagnostic("error", msg, path, line, col)])


def tokenize(src: str, path: str = "<input>") -> list[Token]:
    toks: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(src)

    def advance(k: int):
        nonlocal i, line, col
        for _ in range(k):
            if src[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = src[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if src.startswith("//", i):
            while i < n and src[i] != "\n":
                advance(1)
            continue
        if src.startswith("/*", i):
            sl, sc = line, col
            advance(2)
            while i < n and not src.startswith("*/", i):
                advance(1)
            if i >= n:
                raise _err(path, sl, sc, "unterminated block comment")
            advance(2)
            continue
        if c.isdigit():
            sl, sc = line, col
            j = i
            if src.startswith("0x", i) or src.startswith("0X", i):
                j = i + 2
                while j < n and src[j] in "0123456789abcdefABCDEF":
                    j += 1
                if j == i + 2:
                    raise _err(path, sl, sc, "malformed hex literal")
                text = src[i:j]
                value = int(text, 16)
            else:
                while j < n and src[j].isdigit():
                    j += 1
                if j < n and (src[j] == "." or src[j] in "eE"):
                    raise _err(path, sl, sc, "unsupported construct: float literal")
                text = src[i:j]
                value = int(text)
            unsigned = False
            while j < n and src[j] in "uUlL":
                if src[j] in "uU":
                    unsigned = True
                j += 1
            advance(j - i)
            toks.append(Token("int", text, value, unsigned, sl, sc))
            continue
        if c.isalpha() or c == "_":
            sl, sc = line, col
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            text = src[i:j]
            advance(j - i)
            kind = "kw" if text in KEYWORDS else "ident"
            toks.append(Token(kind, text, None, False, sl, sc))
            continue
        for p in PUNCT:
            if src.startswith(p, i):
                toks.append(Token(p, p, None, False, line, col))
                advance(len(p))
                break
        else:
            raise _err(path, line, col, f"unexpected character {c!r}")
    toks.append(Token("eof", "", None, False, line, col))
    return toks
