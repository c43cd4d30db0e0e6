"""Bit-exact integer operation semantics shared by every execution path.

The golden interpreter, the dataflow-graph executor, constant folding, the
FSMD simulator and the HDL-subset simulator all funnel arithmetic through
these helpers so the five implementations cannot drift apart.

Conventions (also implemented by the emitted Verilog):
  * two's-complement wraparound on every width;
  * division truncates toward zero; x/0 yields the all-ones bit pattern and
    x%0 yields the dividend (what a restoring divider naturally produces);
  * shift amounts are taken modulo the power-of-two ceiling of the left
    operand width (a hardware shifter consumes ceil(log2(w)) amount bits);
  * canonical Python representation: signed values live in
    [-2^(w-1), 2^(w-1)-1], unsigned in [0, 2^w-1].
"""

from __future__ import annotations


def mask(v: int, w: int) -> int:
    return v & ((1 << w) - 1)


def wrap(v: int, w: int, signed: bool) -> int:
    v &= (1 << w) - 1
    if signed and w > 0 and (v >> (w - 1)) & 1:
        v -= 1 << w
    return v


def bits_of(v: int, w: int) -> int:
    """Canonical value -> raw bit pattern."""
    return v & ((1 << w) - 1)


def shift_amount_mask(w: int) -> int:
    # ceil(log2(w)) amount bits; width 1 shifts are always by zero
    return (1 << (w - 1).bit_length()) - 1 if w > 1 else 0


def trunc_div(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def trunc_mod(a: int, b: int) -> int:
    return a - trunc_div(a, b) * b


def binop(op: str, a: int, b: int, w: int, signed: bool) -> int:
    """Binary operation on canonical values of a common type; canonical result.
    Comparison results are 0/1 regardless of the operand type."""
    if op == "add":
        return wrap(a + b, w, signed)
    if op == "sub":
        return wrap(a - b, w, signed)
    if op == "mul":
        return wrap(a * b, w, signed)
    if op == "div":
        if b == 0:
            return wrap((1 << w) - 1, w, signed)
        return wrap(trunc_div(a, b), w, signed)
    if op == "mod":
        if b == 0:
            return a
        return wrap(trunc_mod(a, b), w, signed)
    if op == "shl":
        amt = bits_of(b, 64) & shift_amount_mask(w)
        return wrap(a << amt, w, signed)
    if op == "shr":
        amt = bits_of(b, 64) & shift_amount_mask(w)
        if signed:
            return wrap(a >> amt, w, True)       # arithmetic
        return wrap(bits_of(a, w) >> amt, w, False)  # logical
    if op == "and":
        return wrap(bits_of(a, w) & bits_of(b, w), w, signed)
    if op == "or":
        return wrap(bits_of(a, w) | bits_of(b, w), w, signed)
    if op == "xor":
        return wrap(bits_of(a, w) ^ bits_of(b, w), w, signed)
    if op == "eq":
        return int(a == b)
    if op == "ne":
        return int(a != b)
    if op == "lt":
        return int(a < b)
    if op == "le":
        return int(a <= b)
    if op == "gt":
        return int(a > b)
    if op == "ge":
        return int(a >= b)
    raise ValueError(f"unknown op {op}")


def unop(op: str, a: int, w: int, signed: bool) -> int:
    if op == "neg":
        return wrap(-a, w, signed)
    if op == "not":
        return wrap(~bits_of(a, w), w, signed)
    raise ValueError(f"unknown op {op}")


def convert(kind: str, v: int, src_w: int, src_signed: bool,
            dst_w: int, dst_signed: bool) -> int:
    """sext/zext/trunc/tobool on a canonical value."""
    if kind == "tobool":
        return int(v != 0)
    if kind == "trunc":
        return wrap(bits_of(v, src_w), dst_w, dst_signed)
    if kind == "zext":
        return wrap(bits_of(v, src_w), dst_w, dst_signed)
    if kind == "sext":
        s = wrap(bits_of(v, src_w), src_w, True)
        return wrap(s, dst_w, dst_signed)
    raise ValueError(f"unknown conversion {kind}")
