"""Control/dataflow graph in SSA form.

Values are bit patterns with a width; operation signedness is explicit in the
opcode (div_s/div_u, shr_s/shr_u, lt_s/lt_u, ...), so values need no sign.
Constants and scalar parameters are value-table entries, not ops. Each basic
block holds phis first, then body ops in program order (memory order per
MemObject is the list order), then exactly one terminator.

Opcode signatures (operand widths -> result width):
    add sub and or xor          (w, w) -> w
    mul                         (w, w) -> r, w <= r <= 2w (widening form
                                comes from the schoolbook decomposition)
    div_s div_u mod_s mod_u     (w, w) -> w
    shl shr_s shr_u             (w, amt<=64) -> w; amounts wrap at the
                                power-of-two ceiling of w
    eq ne lt_s lt_u le_s le_u gt_s gt_u ge_s ge_u   (w, w) -> 1
    not                         (w) -> w
    sext zext                   (w) -> r > w
    trunc                       (w) -> r < w
    load   args [offset(32)]            -> elem width   (attr mem)
    store  args [offset(32), data(elem)] (attr mem, no result)
    phi    one arg per predecessor, all result width
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .. import intops
from ..errors import ToolError

BINARY_OPS = {
    "add", "sub", "mul", "div_s", "div_u", "mod_s", "mod_u",
    "shl", "shr_s", "shr_u", "and", "or", "xor",
    "eq", "ne", "lt_s", "lt_u", "le_s", "le_u", "gt_s", "gt_u", "ge_s", "ge_u",
}
COMPARE_OPS = {"eq", "ne", "lt_s", "lt_u", "le_s", "le_u", "gt_s", "gt_u", "ge_s", "ge_u"}
EXT_OPS = {"sext", "zext", "trunc"}

# opcode -> characterized unit class
UNIT_CLASS = {
    "add": "add", "sub": "sub", "mul": "mul",
    "div_s": "div", "div_u": "div", "mod_s": "mod", "mod_u": "mod",
    "shl": "shl", "shr_s": "shr", "shr_u": "shr",
    "and": "bitop", "or": "bitop", "xor": "bitop", "not": "bitop",
    "eq": "cmp", "ne": "cmp", "lt_s": "cmp", "lt_u": "cmp",
    "le_s": "cmp", "le_u": "cmp", "gt_s": "cmp", "gt_u": "cmp",
    "ge_s": "cmp", "ge_u": "cmp",
    "sext": "ext", "zext": "ext", "trunc": "ext",
    "load": "load_port", "store": "store_port",
}


class CdfgError(ToolError):
    pass


@dataclass
class MemObject:
    id: int
    name: str
    kind: str                  # "local_array" | "external"
    elem_width: int            # bits, multiple of 8
    elem_count: Optional[int]  # None for external references
    backing: str               # "onchip_ram" | "axi"
    bundle: Optional[int] = None   # set by interface inference for axi backing

    @property
    def elem_bytes(self) -> int:
        return self.elem_width // 8

    @property
    def addr_width(self) -> int:
        n = self.elem_count or 1
        return max(1, (n - 1).bit_length()) if n > 1 else 1


@dataclass
class ScalarParam:
    name: str
    value: int        # value id
    width: int


@dataclass
class ArrayParam:
    name: str
    mem: int          # MemObject id


@dataclass
class Op:
    id: int
    opcode: str
    result: Optional[int]       # value id
    args: list[int]
    mem: Optional[int] = None   # MemObject id for load/store
    pos: Optional[tuple] = None  # (line, col) of the source construct


@dataclass
class Block:
    id: int
    name: str
    ops: list[Op] = field(default_factory=list)
    preds: list[int] = field(default_factory=list)
    term: tuple = ()   # ("jump", target) | ("br", cond, t, f) | ("ret", value)

    def successors(self) -> list[int]:
        if not self.term:
            return []
        if self.term[0] == "jump":
            return [self.term[1]]
        if self.term[0] == "br":
            return [self.term[2], self.term[3]]
        return []

    def phis(self) -> list[Op]:
        return [o for o in self.ops if o.opcode == "phi"]

    def body(self) -> list[Op]:
        return [o for o in self.ops if o.opcode != "phi"]


class Cdfg:
    def __init__(self, name: str, ret_width: int):
        self.name = name
        self.ret_width = ret_width
        self.blocks: dict[int, Block] = {}
        self.entry = 0
        self.values: dict[int, int] = {}          # value id -> width
        self.constants: dict[int, int] = {}       # value id -> bit pattern
        self.value_names: dict[int, str] = {}     # debug hints
        self.params: list = []                    # ScalarParam | ArrayParam
        self.memories: list[MemObject] = []
        self._next_value = 0
        self._next_op = 0
        self._next_block = 0

    # ---- construction -----------------------------------------------------

    def new_value(self, width: int, name: str | None = None) -> int:
        vid = self._next_value
        self._next_value += 1
        self.values[vid] = width
        if name:
            self.value_names[vid] = name
        return vid

    def new_const(self, width: int, bits: int, name: str | None = None) -> int:
        vid = self.new_value(width, name)
        self.constants[vid] = bits & ((1 << width) - 1)
        return vid

    def new_block(self, name: str) -> Block:
        b = Block(self._next_block, name)
        self._next_block += 1
        self.blocks[b.id] = b
        return b

    def new_op(self, block: Block, opcode: str, result: Optional[int],
               args: list[int], mem: Optional[int] = None,
               at_front: bool = False, pos: Optional[tuple] = None) -> Op:
        op = Op(self._next_op, opcode, result, list(args), mem, pos)
        self._next_op += 1
        if at_front:
            block.ops.insert(0, op)
        else:
            block.ops.append(op)
        return op

    def add_memory(self, name: str, kind: str, elem_width: int,
                   elem_count: Optional[int], backing: str) -> MemObject:
        m = MemObject(len(self.memories), name, kind, elem_width, elem_count, backing)
        self.memories.append(m)
        return m

    # ---- queries ----------------------------------------------------------

    def block_order(self) -> list[Block]:
        """Reverse postorder from the entry: dominators come first."""
        seen: set[int] = set()
        post: list[int] = []

        def dfs(bid: int):
            seen.add(bid)
            for s in self.blocks[bid].successors():
                if s not in seen:
                    dfs(s)
            post.append(bid)

        dfs(self.entry)
        return [self.blocks[b] for b in reversed(post)]

    def iter_ops(self):
        for b in self.block_order():
            for op in b.ops:
                yield b, op

    def op_count(self) -> int:
        return sum(len(b.ops) for b in self.blocks.values())

    def value_width(self, vid: int) -> int:
        return self.values[vid]

    def defining_op(self) -> dict[int, tuple[int, Op]]:
        d = {}
        for b, op in self.iter_ops():
            if op.result is not None:
                d[op.result] = (b.id, op)
        return d

    def uses(self) -> dict[int, list[tuple[int, Op]]]:
        u: dict[int, list[tuple[int, Op]]] = {}
        for b, op in self.iter_ops():
            for a in op.args:
                u.setdefault(a, []).append((b.id, op))
        for b in self.blocks.values():
            if b.term and b.term[0] == "br":
                u.setdefault(b.term[1], []).append((b.id, None))
            if b.term and b.term[0] == "ret":
                u.setdefault(b.term[1], []).append((b.id, None))
        return u

    def memory(self, mid: int) -> MemObject:
        return self.memories[mid]

    def external_params(self) -> list[ArrayParam]:
        return [p for p in self.params if isinstance(p, ArrayParam)
                and self.memories[p.mem].kind == "external"]

    # ---- validation ---------------------------------------------------------

    def validate(self):
        """SSA and signature well-formedness; raises CdfgError."""
        from .loops import dominators
        defs: dict[int, tuple[int, int]] = {}   # value -> (block, position)
        for b in self.block_order():
            seen_non_phi = False
            for i, op in enumerate(b.ops):
                if op.opcode == "phi":
                    if seen_non_phi:
                        raise CdfgError(f"phi after body op in block {b.name}")
                else:
                    seen_non_phi = True
                if op.result is not None:
                    if op.result in defs or op.result in self.constants:
                        raise CdfgError(f"value v{op.result} defined twice")
                    defs[op.result] = (b.id, i)
            if not b.term:
                raise CdfgError(f"block {b.name} lacks a terminator")
        param_vals = {p.value for p in self.params if isinstance(p, ScalarParam)}

        dom = dominators(self)

        def dominates(a: int, b: int) -> bool:
            while True:
                if a == b:
                    return True
                if b == self.entry:
                    return False
                b = dom[b]

        for b in self.block_order():
            for i, op in enumerate(b.ops):
                self._check_signature(op)
                if op.opcode == "phi":
                    if len(op.args) != len(b.preds):
                        raise CdfgError(
                            f"phi v{op.result} has {len(op.args)} args for "
                            f"{len(b.preds)} preds in {b.name}")
                for k, a in enumerate(op.args):
                    if a in self.constants or a in param_vals:
                        continue
                    if a not in defs:
                        raise CdfgError(f"use of undefined value v{a} in {b.name}")
                    db, di = defs[a]
                    if op.opcode == "phi":
                        # the arg must be available at the end of the pred
                        pred = b.preds[k]
                        if not dominates(db, pred):
                            raise CdfgError(
                                f"phi arg v{a} does not dominate pred of {b.name}")
                    elif db == b.id:
                        if di >= i:
                            raise CdfgError(f"use before def of v{a} in {b.name}")
                    elif not dominates(db, b.id):
                        raise CdfgError(f"def of v{a} does not dominate use in {b.name}")
            if b.term[0] == "br":
                if self.value_width(b.term[1]) != 1:
                    raise CdfgError(f"branch condition must be 1 bit in {b.name}")
            if b.term[0] == "ret":
                if self.value_width(b.term[1]) != self.ret_width:
                    raise CdfgError("return width mismatch")
            for s in b.successors():
                if b.id not in self.blocks[s].preds:
                    raise CdfgError(f"edge {b.name}->{self.blocks[s].name} missing pred link")

    def _check_signature(self, op: Op):
        w = self.value_width

        def rw():
            return w(op.result)

        if op.opcode == "phi":
            for a in op.args:
                if w(a) != rw():
                    raise CdfgError(f"phi width mismatch at op {op.id}")
        elif op.opcode in ("shl", "shr_s", "shr_u"):
            if w(op.args[0]) != rw() or w(op.args[1]) > 64:
                raise CdfgError(f"shift signature at op {op.id}")
        elif op.opcode == "mul":
            a, b = op.args
            if w(a) != w(b) or not (w(a) <= rw() <= 2 * w(a)):
                raise CdfgError(f"mul signature at op {op.id}")
        elif op.opcode in COMPARE_OPS:
            a, b = op.args
            if w(a) != w(b) or rw() != 1:
                raise CdfgError(f"compare signature at op {op.id}")
        elif op.opcode in BINARY_OPS:
            a, b = op.args
            if not (w(a) == w(b) == rw()):
                raise CdfgError(f"binary width mismatch at op {op.id} ({op.opcode})")
        elif op.opcode == "not":
            if w(op.args[0]) != rw():
                raise CdfgError(f"not width mismatch at op {op.id}")
        elif op.opcode in ("sext", "zext"):
            if w(op.args[0]) >= rw():
                raise CdfgError(f"extension must widen at op {op.id}")
        elif op.opcode == "trunc":
            if w(op.args[0]) <= rw():
                raise CdfgError(f"trunc must narrow at op {op.id}")
        elif op.opcode == "load":
            m = self.memories[op.mem]
            if w(op.args[0]) != 32 or rw() != m.elem_width:
                raise CdfgError(f"load signature at op {op.id}")
        elif op.opcode == "store":
            m = self.memories[op.mem]
            if w(op.args[0]) != 32 or w(op.args[1]) != m.elem_width:
                raise CdfgError(f"store signature at op {op.id}")
        else:
            raise CdfgError(f"unknown opcode {op.opcode}")

    # ---- evaluation of a single op (shared by executor and folding) --------

    def eval_op(self, opcode: str, args_bits: list[int], arg_widths: list[int],
                result_width: int) -> int:
        return eval_opcode(opcode, args_bits, arg_widths, result_width)

    # ---- dumps --------------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "name": self.name,
            "ret_width": self.ret_width,
            "entry": self.entry,
            "params": [
                {"name": p.name, "value": p.value, "width": p.width}
                if isinstance(p, ScalarParam) else {"name": p.name, "mem": p.mem}
                for p in self.params
            ],
            "memories": [
                {"id": m.id, "name": m.name, "kind": m.kind,
                 "elem_width": m.elem_width, "elem_count": m.elem_count,
                 "backing": m.backing, "bundle": m.bundle}
                for m in self.memories
            ],
            "constants": {str(k): self.constants[k] for k in sorted(self.constants)},
            "values": {str(k): self.values[k] for k in sorted(self.values)},
            "blocks": [
                {"id": b.id, "name": b.name, "preds": b.preds,
                 "term": list(b.term),
                 "ops": [{"id": o.id, "opcode": o.opcode, "result": o.result,
                          "args": o.args, "mem": o.mem} for o in b.ops]}
                for b in self.block_order()
            ],
        }
        return json.dumps(doc, indent=1, sort_keys=True)


def eval_opcode(opcode: str, args: list[int], arg_widths: list[int],
                result_width: int) -> int:
    """Evaluate one op on raw bit patterns; canonical semantics from intops."""
    w = arg_widths[0] if arg_widths else result_width
    if opcode in ("add", "sub", "mul"):
        base = {"add": lambda a, b: a + b, "sub": lambda a, b: a - b,
                "mul": lambda a, b: a * b}[opcode]
        return intops.mask(base(args[0], args[1]), result_width)
    if opcode in ("and", "or", "xor"):
        f = {"and": lambda a, b: a & b, "or": lambda a, b: a | b,
             "xor": lambda a, b: a ^ b}[opcode]
        return f(args[0], args[1])
    if opcode == "not":
        return intops.mask(~args[0], result_width)
    if opcode == "shl":
        amt = args[1] & intops.shift_amount_mask(w)
        return intops.mask(args[0] << amt, result_width)
    if opcode in ("shr_u", "shr_s"):
        amt = args[1] & intops.shift_amount_mask(w)
        a = args[0]
        if opcode == "shr_s":
            a = intops.wrap(a, w, True)
        return intops.mask(a >> amt, result_width)
    if opcode in ("div_s", "div_u", "mod_s", "mod_u"):
        signed = opcode.endswith("_s")
        a = intops.wrap(args[0], w, signed)
        b = intops.wrap(args[1], w, signed)
        return intops.bits_of(
            intops.binop(opcode[:3], a, b, w, signed), result_width)
    if opcode in COMPARE_OPS:
        signed = opcode.endswith("_s")
        base = opcode.split("_")[0]
        a = intops.wrap(args[0], w, signed)
        b = intops.wrap(args[1], w, signed)
        return intops.binop(base, a, b, w, signed)
    if opcode == "sext":
        return intops.mask(intops.wrap(args[0], w, True), result_width)
    if opcode == "zext":
        return args[0]
    if opcode == "trunc":
        return intops.mask(args[0], result_width)
    raise ValueError(f"eval_opcode cannot evaluate {opcode}")
