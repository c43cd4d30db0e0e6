"""Independent schedule checker.

Re-derives every scheduling rule directly from the graph, the allocation
and the timing records, without sharing traversal code with the scheduler.
Returns a list of human-readable violations; the compile pipeline treats a
non-empty list as a hard error, and the test suite uses it as the ground
truth when fuzzing the scheduler.
"""

from __future__ import annotations

from decimal import Decimal

from ..errors import ScheduleError
from ..middle.cdfg import Cdfg
from .allocate import Allocation
from .schedule import Schedule

# visibility gap required between two same-object accesses, program order
_GAP = {
    ("load", "load"): 0,
    ("load", "store"): 0,
    ("store", "load"): 1,
    ("store", "store"): 1,
}


def validate_schedule(g: Cdfg, sched: Schedule, alloc: Allocation) -> list[str]:
    bad: list[str] = []
    clock = sched.clock_ns
    where = {}
    for b in g.blocks.values():
        for op in b.ops:
            if op.opcode == "phi":
                if op.id in sched.op_step:
                    bad.append(f"phi op{op.id} has a schedule entry")
                continue
            if op.id not in sched.op_step:
                bad.append(f"op{op.id} {op.opcode} is unscheduled")
                continue
            where[op.id] = b.id

    defs = {op.result: (b.id, op) for b in g.blocks.values()
            for op in b.ops if op.result is not None}

    for b in g.blocks.values():
        for op in b.body():
            if op.id not in sched.op_step:
                continue
            step, off = sched.op_step[op.id]
            delay, _lat, _ii = alloc.timing(op)
            if step < 0 or off < 0:
                bad.append(f"op{op.id} scheduled before time zero")
            if off + delay > clock:
                bad.append(f"op{op.id} {op.opcode} overruns the clock: "
                           f"{off}+{delay} > {clock}")
            for a in op.args:
                d = defs.get(a)
                if d is None or d[0] != b.id or d[1].opcode == "phi":
                    continue
                p = d[1]
                if p.id not in sched.op_step:
                    continue
                pstep, poff = sched.op_step[p.id]
                pdelay, plat, _ = alloc.timing(p)
                if plat >= 1:
                    if step < pstep + plat:
                        bad.append(f"op{op.id} reads v{a} before op{p.id} "
                                   f"finishes: step {step} < {pstep}+{plat}")
                elif step < pstep:
                    bad.append(f"op{op.id} scheduled before producer op{p.id}")
                elif step == pstep and off < poff + pdelay:
                    bad.append(f"op{op.id} starts at {off} before op{p.id} "
                               f"output settles at {poff}+{pdelay}")

    # resource occupancy, per block since the FSM runs one block at a time
    for b in g.blocks.values():
        fu_use: dict[tuple, int] = {}
        port_use: dict[tuple, int] = {}
        for op in b.body():
            if op.id not in sched.op_step:
                continue
            step = sched.op_step[op.id][0]
            kind = alloc.op_kind.get(op.id)
            if kind is not None:
                for k in range(alloc.records[kind].ii):
                    key = (kind, step + k)
                    fu_use[key] = fu_use.get(key, 0) + 1
            elif op.mem is not None:
                m = g.memory(op.mem)
                key = ("ram", m.id, step) if m.backing == "onchip_ram" \
                    else ("axi", m.bundle, step)
                port_use[key] = port_use.get(key, 0) + 1
        for (kind, step), n in sorted(fu_use.items(), key=str):
            if n > alloc.fu[kind]:
                bad.append(f"{Allocation.kind_name(kind)} oversubscribed in "
                           f"{b.name} step {step}: {n} > {alloc.fu[kind]}")
        for key, n in sorted(port_use.items(), key=str):
            if key[0] == "ram" and n > alloc.mem_ports[key[1]]:
                bad.append(f"memory {key[1]} uses {n} ports in {b.name} "
                           f"step {key[2]}")
            if key[0] == "axi" and n > 1:
                bad.append(f"bundle {key[1]} issues {n} requests in {b.name} "
                           f"step {key[2]}")

    # program order per memory object
    for b in g.blocks.values():
        seq: dict[int, list] = {}
        for op in b.body():
            if op.mem is not None and op.id in sched.op_step:
                seq.setdefault(op.mem, []).append(op)
        for mid, ops in seq.items():
            for i in range(len(ops)):
                for j in range(i + 1, len(ops)):
                    gap = _GAP[(ops[i].opcode, ops[j].opcode)]
                    si = sched.op_step[ops[i].id][0]
                    sj = sched.op_step[ops[j].id][0]
                    if sj < si + gap:
                        bad.append(
                            f"memory {mid} order violated in {b.name}: "
                            f"op{ops[i].id} step {si} vs op{ops[j].id} step {sj}")

    # step counts must cover execution, exit copies and branch registration
    uses = g.uses()
    for b in g.blocks.values():
        need = 0
        for op in b.body():
            if op.id not in sched.op_step:
                continue
            step = sched.op_step[op.id][0]
            lat = alloc.timing(op)[1]
            need = max(need, step + max(1, lat))
            if op.result is None:
                continue
            external = any(ub != b.id or uop is None or uop.opcode == "phi"
                           for ub, uop in uses.get(op.result, []))
            if external:
                need = max(need, step + lat + 1)
        if b.term and b.term[0] == "br":
            need = max(need, 1)
            d = defs.get(b.term[1])
            if d is not None and d[0] == b.id and d[1].opcode != "phi":
                cstep = sched.op_step[d[1].id][0]
                need = max(need, cstep + alloc.timing(d[1])[1] + 2)
        elif b.term and b.term[0] == "ret":
            need = max(need, 1)
        have = sched.block_steps.get(b.id)
        if have is None:
            bad.append(f"no step count for block {b.name}")
        elif have < need:
            bad.append(f"block {b.name} has {have} steps, needs {need}")
    return bad


def check_schedule(g: Cdfg, sched: Schedule, alloc: Allocation):
    bad = validate_schedule(g, sched, alloc)
    if bad:
        raise ScheduleError("schedule validation failed: " + "; ".join(bad[:4]))
