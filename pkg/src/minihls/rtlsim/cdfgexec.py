"""Direct execution of a CDFG on concrete inputs.

Used to check that lowering and every optimization level preserve the
source semantics: results here must match the source interpreter bit for
bit, including the wrap/shift/divide conventions and the local-array
out-of-range behaviour.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import SimError
from ..middle.cdfg import Cdfg, eval_opcode
from .memimage import MemoryImage

DEFAULT_STEP_BUDGET = 10**8


@dataclass
class ExecResult:
    value_bits: int
    ops_executed: int


class _LocalMem:
    def __init__(self, mem):
        self.elem_width = mem.elem_width
        self.count = mem.elem_count
        self.shift = (mem.elem_bytes - 1).bit_length()
        self.addr_mask = (1 << mem.addr_width) - 1
        self.data = [0] * mem.elem_count

    def _index(self, off: int) -> int:
        return ((off & 0xFFFFFFFF) >> self.shift) & self.addr_mask

    def load(self, off: int) -> int:
        i = self._index(off)
        return self.data[i] if i < self.count else 0

    def store(self, off: int, bits: int):
        i = self._index(off)
        if i < self.count:
            self.data[i] = bits


class _ExtMem:
    def __init__(self, mem, image: MemoryImage, base: int):
        self.elem_bytes = mem.elem_bytes
        self.image = image
        self.base = base & 0xFFFFFFFF

    def load(self, off: int) -> int:
        return self.image.read((self.base + off) & 0xFFFFFFFF, self.elem_bytes)

    def store(self, off: int, bits: int):
        self.image.write((self.base + off) & 0xFFFFFFFF, self.elem_bytes, bits)


def execute_cdfg(g: Cdfg, args: dict, step_budget: int = DEFAULT_STEP_BUDGET) -> ExecResult:
    """Run to the return terminator.

    args: scalar params map to plain ints (wrapped to width); array params
    map to (MemoryImage, base_address) pairs shared with the caller.
    """
    env: dict[int, int] = dict(g.constants)
    mems: dict[int, object] = {}
    for p in g.params:
        if hasattr(p, "width"):
            if p.name not in args:
                raise SimError(f"missing argument {p.name}")
            env[p.value] = args[p.name] & ((1 << p.width) - 1)
        else:
            image, base = args[p.name]
            mems[p.mem] = _ExtMem(g.memories[p.mem], image, base)
    for m in g.memories:
        if m.kind == "local_array":
            mems[m.id] = _LocalMem(m)

    widths = g.values
    executed = 0
    block = g.blocks[g.entry]
    prev: int | None = None
    while True:
        if prev is not None:
            pidx = block.preds.index(prev)
            staged = [(op.result, env[op.args[pidx]]) for op in block.phis()]
            for vid, bits in staged:
                env[vid] = bits
        for op in block.ops:
            if op.opcode == "phi":
                continue
            executed += 1
            if executed > step_budget:
                raise SimError(f"step budget exceeded ({step_budget} ops)")
            if op.opcode == "load":
                env[op.result] = mems[op.mem].load(env[op.args[0]])
            elif op.opcode == "store":
                mems[op.mem].store(env[op.args[0]], env[op.args[1]])
            else:
                env[op.result] = eval_opcode(
                    op.opcode, [env[a] for a in op.args],
                    [widths[a] for a in op.args], widths[op.result])
        t = block.term
        if t[0] == "ret":
            return ExecResult(env[t[1]], executed)
        prev = block.id
        block = g.blocks[t[1] if t[0] == "jump" else (t[2] if env[t[1]] else t[3])]
