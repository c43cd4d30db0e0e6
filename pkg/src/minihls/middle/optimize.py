"""CDFG optimization levels.

Level 0 is the identity. Level 1 runs, to fixpoint: constant folding,
algebraic identities, bitwidth narrowing from proven value ranges, and
dead-op elimination. Every pass preserves bit-exact semantics under the
tool's wrap/shift/divide conventions; loads are pure (removable when
unused), stores are never removed.

Narrowing derives an unsigned upper bound per value from constants and
structure, then re-expresses an op at the bound's width with a zero
extension back to the original width. Extensions cost nothing downstream
(pure wiring), while functional units and registers shrink.
"""

from __future__ import annotations

from .. import intops
from .cdfg import Cdfg, Op, COMPARE_OPS, eval_opcode

_FOLDABLE = COMPARE_OPS | {
    "add", "sub", "mul", "div_s", "div_u", "mod_s", "mod_u",
    "shl", "shr_s", "shr_u", "and", "or", "xor", "not",
    "sext", "zext", "trunc",
}
_NARROWABLE = {"add", "mul", "and", "or", "xor", "shl"}

_MAX_SWEEPS = 200


def optimize(g: Cdfg, level: int = 1) -> Cdfg:
    if level == 0:
        return g
    for _ in range(_MAX_SWEEPS):
        changed = _fold_and_simplify(g)
        changed |= _narrow_widths(g)
        changed |= _remove_dead_ops(g)
        if not changed:
            break
    g.validate()
    return g


# ---- constant folding and algebraic identities --------------------------------


def _full(w: int) -> int:
    return (1 << w) - 1


def _replace_uses(g: Cdfg, pending: dict[int, int]):
    if not pending:
        return

    def res(v: int) -> int:
        while v in pending:
            v = pending[v]
        return v

    for b in g.blocks.values():
        for op in b.ops:
            op.args = [res(a) for a in op.args]
        if b.term and b.term[0] in ("br", "ret"):
            b.term = tuple(res(t) if i == 1 else t for i, t in enumerate(b.term))


def _fold_and_simplify(g: Cdfg) -> bool:
    pending: dict[int, int] = {}
    changed = False
    w_of = g.value_width

    for block in g.blocks.values():
        out: list[Op] = []
        for op in block.ops:
            if op.opcode not in _FOLDABLE:
                out.append(op)
                continue
            consts = [g.constants.get(a) for a in op.args]
            if all(c is not None for c in consts):
                g.constants[op.result] = eval_opcode(
                    op.opcode, consts, [w_of(a) for a in op.args],
                    w_of(op.result))
                changed = True
                continue
            if not _apply_identity(g, op, consts, pending, out):
                out.append(op)
            else:
                changed = True
        block.ops = out
    _replace_uses(g, pending)
    return changed


def _apply_identity(g: Cdfg, op: Op, consts, pending, out: list[Op]) -> bool:
    """Rewrite op per algebraic rules. True if op was consumed or mutated;
    a mutated op is appended to out by this function."""
    w = g.value_width(op.result)
    oc = op.opcode
    if len(op.args) != 2:
        return False
    a, b = op.args
    ca, cb = consts

    def drop_for(v: int):
        pending[op.result] = v

    def to_const(bits: int):
        g.constants[op.result] = bits & _full(w)

    def mutate(opcode: str, args: list[int]):
        op.opcode = opcode
        op.args = args
        out.append(op)

    if oc == "add":
        if cb == 0:
            drop_for(a)
        elif ca == 0:
            drop_for(b)
        else:
            return False
        return True
    if oc == "sub" and cb == 0:
        drop_for(a)
        return True
    if oc == "mul":
        wa = g.value_width(a)
        if cb is not None:
            cst, var = cb, a
        elif ca is not None:
            cst, var = ca, b
        else:
            return False
        if cst == 0:
            to_const(0)
            return True
        if cst == 1:
            if w == wa:
                drop_for(var)
            else:
                mutate("zext", [var])
            return True
        if cst & (cst - 1) == 0:
            k = cst.bit_length() - 1
            src = var
            if w > wa:
                t = g.new_value(w)
                ext = Op(g._next_op, "zext", t, [var])
                g._next_op += 1
                out.append(ext)
                src = t
            mutate("shl", [src, g.new_const(32, k)])
            return True
        return False
    if oc in ("shl", "shr_u", "shr_s") and cb == 0:
        drop_for(a)
        return True
    if oc == "and":
        if cb == 0 or ca == 0:
            to_const(0)
        elif cb == _full(w):
            drop_for(a)
        elif ca == _full(w):
            drop_for(b)
        else:
            return False
        return True
    if oc == "or":
        if cb == 0:
            drop_for(a)
        elif ca == 0:
            drop_for(b)
        elif ca == _full(w) or cb == _full(w):
            to_const(_full(w))
        else:
            return False
        return True
    if oc == "xor":
        if cb == 0:
            drop_for(a)
        elif ca == 0:
            drop_for(b)
        else:
            return False
        return True
    if oc == "div_u" and cb is not None:
        if cb == 0:
            to_const(_full(w))   # restoring divider convention
        elif cb & (cb - 1) == 0:
            mutate("shr_u", [a, g.new_const(32, cb.bit_length() - 1)])
        else:
            return False
        return True
    if oc == "mod_u" and cb is not None:
        if cb == 0:
            drop_for(a)          # remainder convention: dividend passes through
        elif cb & (cb - 1) == 0:
            mutate("and", [a, g.new_const(w, cb - 1)])
        else:
            return False
        return True
    if oc == "div_s" and cb == 0:
        to_const(_full(w))
        return True
    if oc == "mod_s" and cb == 0:
        drop_for(a)
        return True
    return False


# ---- bitwidth narrowing ---------------------------------------------------------


def _value_bounds(g: Cdfg) -> dict[int, int]:
    """Unsigned upper bound per value; conservative (phis and loads are full)."""
    ub: dict[int, int] = {}
    w_of = g.value_width
    for v, bits in g.constants.items():
        ub[v] = bits
    for p in g.params:
        if hasattr(p, "width"):
            ub[p.value] = _full(p.width)

    def get(v: int) -> int:
        return ub.get(v, _full(w_of(v)))

    for block in g.block_order():
        for op in block.ops:
            if op.result is None:
                continue
            w = w_of(op.result)
            full = _full(w)
            oc = op.opcode
            if oc in ("phi", "load", "not") or oc in ("div_s", "mod_s"):
                u = full
            elif oc in COMPARE_OPS:
                u = 1
            elif oc == "add":
                u = min(get(op.args[0]) + get(op.args[1]), full)
            elif oc == "mul":
                u = min(get(op.args[0]) * get(op.args[1]), full)
            elif oc == "sub":
                u = full
            elif oc == "and":
                u = min(get(op.args[0]), get(op.args[1]))
            elif oc in ("or", "xor"):
                bits = max(get(op.args[0]).bit_length(),
                           get(op.args[1]).bit_length())
                u = _full(bits) if bits else 0
            elif oc == "shl":
                amt = g.constants.get(op.args[1])
                if amt is None:
                    u = full
                else:
                    amt &= intops.shift_amount_mask(w_of(op.args[0]))
                    u = min(get(op.args[0]) << amt, full)
            elif oc in ("shr_u", "shr_s"):
                sw = w_of(op.args[0])
                src = get(op.args[0])
                nonneg = oc == "shr_u" or src < (1 << (sw - 1))
                if not nonneg:
                    u = full
                else:
                    amt = g.constants.get(op.args[1])
                    if amt is None:
                        u = src
                    else:
                        u = src >> (amt & intops.shift_amount_mask(sw))
            elif oc in ("div_u", "mod_u"):
                u = get(op.args[0])
            elif oc == "zext":
                u = get(op.args[0])
            elif oc == "sext":
                sw = w_of(op.args[0])
                src = get(op.args[0])
                u = src if src < (1 << (sw - 1)) else full
            elif oc == "trunc":
                u = min(get(op.args[0]), full)
            else:
                u = full
            ub[op.result] = min(u, full)
    return ub


def _narrow_widths(g: Cdfg) -> bool:
    ub = _value_bounds(g)
    changed = False
    w_of = g.value_width

    for block in g.blocks.values():
        out: list[Op] = []
        for op in block.ops:
            if op.opcode not in _NARROWABLE or op.result not in ub:
                out.append(op)
                continue
            rw = w_of(op.result)
            nb = max(1, ub[op.result].bit_length())
            if nb >= rw:
                out.append(op)
                continue

            def narrowed(arg: int, target: int) -> int:
                aw = w_of(arg)
                if aw == target:
                    return arg
                if arg in g.constants:
                    return g.new_const(target, g.constants[arg] & _full(target))
                t = g.new_value(target)
                tr = Op(g._next_op, "trunc" if aw > target else "zext", t, [arg])
                g._next_op += 1
                out.append(tr)
                return t

            if op.opcode == "shl":
                amt = g.constants.get(op.args[1])
                if amt is None or (amt & intops.shift_amount_mask(rw)) != \
                        (amt & intops.shift_amount_mask(nb)):
                    out.append(op)
                    continue
                new_args = [narrowed(op.args[0], nb), op.args[1]]
            elif op.opcode == "mul":
                wa = w_of(op.args[0])
                if nb >= wa:
                    new_args = list(op.args)   # keep widening form, shrink result
                else:
                    new_args = [narrowed(op.args[0], nb), narrowed(op.args[1], nb)]
            else:
                new_args = [narrowed(a, nb) for a in op.args]
            t = g.new_value(nb)
            narrow = Op(g._next_op, op.opcode, t, new_args, pos=op.pos)
            g._next_op += 1
            out.append(narrow)
            out.append(Op(g._next_op, "zext", op.result, [t]))
            g._next_op += 1
            ub[t] = ub[op.result]
            changed = True
        block.ops = out
    return changed


# ---- dead op elimination -----------------------------------------------------------


def _remove_dead_ops(g: Cdfg) -> bool:
    changed = False
    while True:
        used: set[int] = set()
        for b in g.blocks.values():
            for op in b.ops:
                used.update(op.args)
            if b.term and b.term[0] in ("br", "ret"):
                used.add(b.term[1])
        removed = False
        for b in g.blocks.values():
            keep = [op for op in b.ops
                    if op.opcode == "store" or op.result in used]
            if len(keep) != len(b.ops):
                b.ops = keep
                removed = True
        if not removed:
            break
        changed = True
    if changed:
        g.constants = {v: c for v, c in g.constants.items() if v in used}
    return changed
