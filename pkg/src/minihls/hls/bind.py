"""Binding: ops onto unit instances, values onto registers.

A value needs a register only if it is read after the step where it becomes
available (available values are forwarded combinationally within their
step). Lifetimes are convex intervals over a global linearization of
(block, step) positions in reverse postorder; back edges stay inside the
hull, so sharing decisions remain sound across loop iterations. Register
files are per width class and assigned left-edge, which is optimal for
interval overlap. Ops go to the lowest-numbered free instance of their unit
kind, scanning blocks in the same linear order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import BindingError
from ..middle.cdfg import Cdfg
from .allocate import Allocation
from .schedule import Schedule


@dataclass
class Interval:
    value: int
    width: int
    lo: int          # position whose closing edge writes the register
    hi: int          # last position that reads it

    def conflicts(self, other: "Interval") -> bool:
        return self.lo < other.hi and other.lo < self.hi


@dataclass
class Binding:
    fu_of: dict[int, tuple] = field(default_factory=dict)    # op id -> (kind, idx)
    port_of: dict[int, int] = field(default_factory=dict)    # op id -> ram port
    reg_of: dict[int, tuple[int, int]] = field(default_factory=dict)  # value -> (width, idx)
    reg_counts: dict[int, int] = field(default_factory=dict)  # width -> registers

    def dump(self, g: Cdfg) -> str:
        lines = ["binding:"]
        for w in sorted(self.reg_counts):
            lines.append(f"  regs width {w}: {self.reg_counts[w]}")
        for vid in sorted(self.reg_of):
            w, idx = self.reg_of[vid]
            lines.append(f"  v{vid} -> r{w}_{idx}")
        for oid in sorted(self.fu_of):
            kind, idx = self.fu_of[oid]
            lines.append(f"  op{oid} -> {Allocation.kind_name(kind)}#{idx}")
        for oid in sorted(self.port_of):
            lines.append(f"  op{oid} -> port {self.port_of[oid]}")
        return "\n".join(lines) + "\n"


def block_positions(g: Cdfg, sched: Schedule):
    """Global position of (block, step); every block owns at least one slot."""
    base: dict[int, int] = {}
    at = 0
    for b in g.block_order():
        base[b.id] = at
        at += max(1, sched.block_steps[b.id])
    return base


def _exit_pos(base, sched, block_id: int) -> int:
    return base[block_id] + max(0, sched.block_steps[block_id] - 1)


def _write_positions(g: Cdfg, sched, base, block_id: int, seen=None) -> list[int]:
    """Positions whose closing edge can perform this block's exit writes.

    A block with no compute states is a pass-through: edges into it fire at
    its own predecessors' exits, recursively. The entry block with no states
    is written on the idle transition, before every position.
    """
    if sched.block_steps[block_id] > 0:
        return [_exit_pos(base, sched, block_id)]
    seen = seen or set()
    if block_id in seen:
        return []
    seen.add(block_id)
    preds = g.blocks[block_id].preds
    if not preds:
        return [-1]
    out: list[int] = []
    for p in preds:
        out.extend(_write_positions(g, sched, base, p, seen))
    return out


def register_intervals(g: Cdfg, sched: Schedule, alloc: Allocation) -> list[Interval]:
    """Lifetime intervals for every value that must live in a register."""
    base = block_positions(g, sched)
    defs: dict[int, Interval] = {}
    avail_pos: dict[int, int] = {}

    for b in g.blocks.values():
        for op in b.body():
            if op.result is None:
                continue
            step, _ = sched.op_step[op.id]
            a = step + alloc.timing(op)[1]
            # a bus read is latched when its wait phase drains, inside its
            # own step, so the interval must open there or sharing breaks
            if op.opcode == "load" and g.memory(op.mem).backing != "onchip_ram":
                a = step
            avail_pos[op.result] = base[b.id] + a
        for op in b.phis():
            writes = [pos for p in b.preds
                      for pos in _write_positions(g, sched, base, p)]
            lo = min([base[b.id]] + writes)
            hi = max([base[b.id]] + writes)
            defs[op.result] = Interval(op.result, g.value_width(op.result), lo, hi)

    def use(vid: int, pos: int):
        if vid in g.constants:
            return
        if vid in defs:
            iv = defs[vid]
            iv.hi = max(iv.hi, pos)
            iv.lo = min(iv.lo, pos)  # back-edge writes may sit after uses
            return
        if vid in avail_pos:
            if pos > avail_pos[vid]:
                defs[vid] = Interval(vid, g.value_width(vid),
                                     avail_pos[vid], pos)
            return
        # scalar params live in dedicated argument registers

    # second pass now that all defs are known
    for b in g.blocks.values():
        for op in b.body():
            step, _ = sched.op_step[op.id]
            for a in op.args:
                use(a, base[b.id] + step)
        if b.term and b.term[0] in ("br", "ret"):
            use(b.term[1], _exit_pos(base, sched, b.id))
        for sid in b.successors():
            succ = g.blocks[sid]
            pi = succ.preds.index(b.id)
            for phi in succ.phis():
                use(phi.args[pi], _exit_pos(base, sched, b.id))

    # a phi interval must reach back to its own block entry
    for b in g.blocks.values():
        for op in b.phis():
            iv = defs[op.result]
            iv.lo = min(iv.lo, base[b.id])
    return sorted(defs.values(), key=lambda iv: (iv.lo, iv.hi, iv.value))


def max_overlap(intervals: list[Interval]) -> dict[int, int]:
    """Peak simultaneous liveness per width class, by direct point counting."""
    peak: dict[int, int] = {}
    by_w: dict[int, list[Interval]] = {}
    for iv in intervals:
        by_w.setdefault(iv.width, []).append(iv)
    for w, ivs in by_w.items():
        points = sorted({iv.hi for iv in ivs})
        best = 0
        for p in points:
            best = max(best, sum(1 for iv in ivs if iv.lo < p <= iv.hi))
        peak[w] = best
    return peak


def bind(g: Cdfg, sched: Schedule, alloc: Allocation) -> Binding:
    out = Binding()

    # registers: left edge per width class
    ends: dict[int, list[int]] = {}
    for iv in register_intervals(g, sched, alloc):
        pool = ends.setdefault(iv.width, [])
        for idx, end in enumerate(pool):
            if end <= iv.lo:
                pool[idx] = iv.hi
                out.reg_of[iv.value] = (iv.width, idx)
                break
        else:
            pool.append(iv.hi)
            out.reg_of[iv.value] = (iv.width, len(pool) - 1)
    out.reg_counts = {w: len(pool) for w, pool in ends.items()}

    # unit instances: first fit over ii windows, block by block
    for b in g.block_order():
        busy: dict[tuple, list[tuple[int, int]]] = {}
        ram_taken: dict[tuple[int, int], int] = {}
        for op in sorted(b.body(), key=lambda o: (sched.op_step[o.id][0], o.id)):
            step = sched.op_step[op.id][0]
            kind = alloc.op_kind.get(op.id)
            if kind is not None:
                ii = alloc.records[kind].ii
                lo, hi = step, step + ii - 1
                for idx in range(alloc.fu[kind]):
                    spans = busy.setdefault((kind, idx), [])
                    if all(hi < s or e < lo for s, e in spans):
                        spans.append((lo, hi))
                        out.fu_of[op.id] = (kind, idx)
                        break
                else:
                    raise BindingError(
                        f"no free {Allocation.kind_name(kind)} instance "
                        f"in {b.name} step {step}")
            elif op.mem is not None and g.memory(op.mem).backing == "onchip_ram":
                key = (op.mem, step)
                port = ram_taken.get(key, 0)
                if port >= alloc.mem_ports[op.mem]:
                    raise BindingError(
                        f"memory {g.memory(op.mem).name} needs more than "
                        f"{alloc.mem_ports[op.mem]} ports in step {step}")
                ram_taken[key] = port + 1
                out.port_of[op.id] = port
    return out
