"""Chaining-aware list scheduler.

Each block is scheduled independently into control steps. Within a step,
combinational ops chain: an op may start at the offset where its producers
finish, as long as its own completion stays inside the clock period.
Sequential ops (loads, pipelined multipliers, dividers) make their result
available `latency` steps after issue, and their unit stays busy for `ii`
steps. Memory ops keep program order per object; a store's effect is only
visible to loads in later steps, so the (store, load) pair needs a one-step
gap while (load, store) and (load, load) may share a step.

Priority is mobility (ALAP minus ASAP steps), lowest first, then op id.
Blocks never execute concurrently, so unit occupancy is tracked per block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal

from ..errors import ScheduleError
from ..middle.cdfg import Cdfg, Block, Op
from .allocate import Allocation

# minimum step gap between two ops touching the same memory object,
# keyed by (earlier opcode, later opcode)
MEM_ORDER_DELTA = {
    ("load", "load"): 0,
    ("load", "store"): 0,
    ("store", "load"): 1,
    ("store", "store"): 1,
}

ZERO = Decimal(0)


@dataclass
class Schedule:
    clock_ns: Decimal
    op_step: dict[int, tuple[int, Decimal]] = field(default_factory=dict)
    block_steps: dict[int, int] = field(default_factory=dict)
    alloc: Allocation | None = None    # allocation the steps were timed with

    def step_of(self, op_id: int) -> int:
        return self.op_step[op_id][0]

    def offset_of(self, op_id: int) -> Decimal:
        return self.op_step[op_id][1]

    def total_steps(self) -> int:
        return sum(self.block_steps.values())

    def dump(self, g: Cdfg) -> str:
        lines = [f"schedule: clock={self.clock_ns} total_steps={self.total_steps()}"]
        for b in g.block_order():
            lines.append(f"block {b.name}: steps={self.block_steps[b.id]}")
            rows = []
            for op in b.body():
                step, off = self.op_step[op.id]
                rows.append((step, str(off), op.id, op.opcode))
            for step, off, oid, opcode in sorted(rows):
                lines.append(f"  step {step} @{off}: op{oid} {opcode}")
        return "\n".join(lines) + "\n"


def block_edges(g: Cdfg, block: Block):
    """Intra-block dependence edges: op id -> list of (pred op, kind, delta).

    kind is "data" (delta unused) or "mem" (delta = required step gap).
    """
    defined = {op.result: op for op in block.body() if op.result is not None}
    edges: dict[int, list[tuple[Op, str, int]]] = {}
    last_mem: dict[int, Op] = {}
    for op in block.body():
        deps = []
        for a in op.args:
            p = defined.get(a)
            if p is not None:
                deps.append((p, "data", 0))
        if op.mem is not None:
            prev = last_mem.get(op.mem)
            if prev is not None:
                delta = MEM_ORDER_DELTA[(prev.opcode, op.opcode)]
                deps.append((prev, "mem", delta))
            last_mem[op.mem] = op
        edges[op.id] = deps
    return edges


def _min_step(op: Op, edges, placed, timing) -> int:
    step = 0
    for p, kind, delta in edges[op.id]:
        ps = placed[p.id][0]
        plat = timing(p)[1]
        if kind == "mem":
            step = max(step, ps + delta)
        elif plat >= 1:
            step = max(step, ps + plat)
        else:
            step = max(step, ps)
    return step


def _start_at(op: Op, step: int, edges, placed, timing) -> Decimal:
    start = ZERO
    for p, kind, _delta in edges[op.id]:
        if kind != "data":
            continue
        ps, poff = placed[p.id]
        pdelay, plat, _ = timing(p)
        if plat == 0 and ps == step:
            start = max(start, poff + pdelay)
    return start


def _earliest(op: Op, edges, placed, timing, clock: Decimal):
    step = _min_step(op, edges, placed, timing)
    start = _start_at(op, step, edges, placed, timing)
    if start + timing(op)[0] > clock:
        return step + 1, ZERO
    return step, start


def _asap_alap(block: Block, edges, alloc: Allocation, clock: Decimal):
    timing = alloc.timing
    asap: dict[int, tuple[int, Decimal]] = {}
    for op in block.body():
        asap[op.id] = _earliest(op, edges, asap, timing, clock)
    if not asap:
        return {}
    horizon = max(asap[op.id][0] + timing(op)[1] for op in block.body())
    consumers: dict[int, list[tuple[Op, str, int]]] = {}
    for op in block.body():
        for p, kind, delta in edges[op.id]:
            consumers.setdefault(p.id, []).append((op, kind, delta))
    alap: dict[int, int] = {}
    for op in reversed(block.body()):
        lat = timing(op)[1]
        s = horizon - lat
        for c, kind, delta in consumers.get(op.id, []):
            if kind == "mem":
                s = min(s, alap[c.id] - delta)
            elif lat >= 1:
                s = min(s, alap[c.id] - lat)
            else:
                s = min(s, alap[c.id])
        alap[op.id] = s
    return {op.id: max(0, alap[op.id] - asap[op.id][0]) for op in block.body()}


class _Resources:
    """Step-indexed occupancy for FU kinds, RAM ports and AXI bundles."""

    def __init__(self, g: Cdfg, alloc: Allocation):
        self.g = g
        self.alloc = alloc
        self.fu_busy: dict[tuple, int] = {}
        self.port_busy: dict[tuple, int] = {}

    def fits(self, op: Op, step: int) -> bool:
        a = self.alloc
        kind = a.op_kind.get(op.id)
        if kind is not None:
            count = a.fu[kind]
            ii = a.records[kind].ii
            return all(self.fu_busy.get((kind, step + k), 0) < count
                       for k in range(ii))
        if op.mem is not None:
            m = self.g.memory(op.mem)
            if m.backing == "onchip_ram":
                limit = a.mem_ports[m.id]
                return self.port_busy.get(("ram", m.id, step), 0) < limit
            return self.port_busy.get(("axi", m.bundle, step), 0) < 1
        return True

    def take(self, op: Op, step: int):
        a = self.alloc
        kind = a.op_kind.get(op.id)
        if kind is not None:
            ii = a.records[kind].ii
            for k in range(ii):
                key = (kind, step + k)
                self.fu_busy[key] = self.fu_busy.get(key, 0) + 1
        elif op.mem is not None:
            m = self.g.memory(op.mem)
            key = ("ram", m.id, step) if m.backing == "onchip_ram" \
                else ("axi", m.bundle, step)
            self.port_busy[key] = self.port_busy.get(key, 0) + 1


def _schedule_block(g: Cdfg, block: Block, alloc: Allocation,
                    clock: Decimal) -> dict[int, tuple[int, Decimal]]:
    timing = alloc.timing
    edges = block_edges(g, block)
    mobility = _asap_alap(block, edges, alloc, clock)
    res = _Resources(g, alloc)
    placed: dict[int, tuple[int, Decimal]] = {}
    pending = list(block.body())
    bound = sum(timing(op)[1] + 2 for op in pending) + 16
    step = 0
    while pending:
        if step > bound:
            raise ScheduleError(
                f"scheduler made no progress in block {block.name}")
        while True:
            ready = []
            for op in pending:
                if any(p.id not in placed for p, _k, _d in edges[op.id]):
                    continue
                if _min_step(op, edges, placed, timing) > step:
                    continue
                start = _start_at(op, step, edges, placed, timing)
                if start + timing(op)[0] > clock:
                    continue
                if not res.fits(op, step):
                    continue
                ready.append((mobility[op.id], op.id, op, start))
            if not ready:
                break
            _m, _i, op, start = min(ready)
            placed[op.id] = (step, start)
            res.take(op, step)
            pending.remove(op)
        step += 1
    return placed


def has_exit_use(g: Cdfg, uses, block_id: int, result: int) -> bool:
    """True when the value must be held in a register at block exit."""
    for ub, uop in uses.get(result, []):
        if uop is None or uop.opcode == "phi" or ub != block_id:
            return True
    return False


def _block_step_count(g: Cdfg, block: Block, placed, alloc: Allocation,
                      uses) -> int:
    timing = alloc.timing
    steps = 0
    defined = {op.result: op for op in block.body() if op.result is not None}
    for op in block.body():
        s = placed[op.id][0]
        lat = timing(op)[1]
        steps = max(steps, s + max(1, lat))
        if op.result is not None and has_exit_use(g, uses, block.id, op.result):
            steps = max(steps, s + lat + 1)
    if block.term and block.term[0] == "br":
        cond_op = defined.get(block.term[1])
        if cond_op is not None:
            s = placed[cond_op.id][0]
            steps = max(steps, s + timing(cond_op)[1] + 2)
        steps = max(steps, 1)
    elif block.term and block.term[0] == "ret":
        # the return value latch needs one state of its own, so even a
        # constant return spends a cycle between idle and done
        steps = max(steps, 1)
    return steps


def schedule_list(g: Cdfg, alloc: Allocation, clock_ns: Decimal,
                  lib=None) -> Schedule:
    # the library already shaped the allocation records; it is accepted here
    # so callers can pass the full context through in one place
    sched = Schedule(clock_ns, alloc=alloc)
    uses = g.uses()
    for block in g.block_order():
        placed = _schedule_block(g, block, alloc, clock_ns)
        sched.op_step.update(placed)
        sched.block_steps[block.id] = _block_step_count(
            g, block, placed, alloc, uses)
    return sched
