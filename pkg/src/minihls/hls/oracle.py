"""Exhaustive reference scheduler for tiny blocks.

Breadth-first search over per-step placement subsets, used by the tests as
ground truth for the list scheduler. States are age vectors: for every op,
either unplaced or the number of steps since issue (capped once nothing can
depend on it anymore), which makes the search memoizable. Practical for
blocks of up to about eight ops.
"""

from __future__ import annotations

from decimal import Decimal
from itertools import combinations

from ..middle.cdfg import Cdfg, Block
from .allocate import Allocation
from .schedule import block_edges, MEM_ORDER_DELTA

ZERO = Decimal(0)


def makespan(placed: dict[int, tuple[int, Decimal]], ops, timing) -> int:
    """Steps a block occupies: issue state plus any latency tail."""
    span = 0
    for op in ops:
        if op.id in placed:
            span = max(span, placed[op.id][0] + max(1, timing(op)[1]))
    return span


def optimal_block_steps(g: Cdfg, block: Block, alloc: Allocation,
                        clock: Decimal, constrained: bool = True) -> int:
    ops = block.body()
    if not ops:
        return 0
    timing = alloc.timing
    edges = block_edges(g, block)
    n = len(ops)
    index = {op.id: i for i, op in enumerate(ops)}
    caps = []
    for op in ops:
        _d, lat, ii = timing(op)
        caps.append(max(lat, ii, 1))

    def feasible_subset(state, chosen) -> bool:
        # chosen: tuple of op indices, program order
        offs: dict[int, Decimal] = {}
        fu_need: dict[tuple, int] = {}
        port_need: dict[tuple, int] = {}
        for i in chosen:
            op = ops[i]
            delay, _lat, _ii = timing(op)
            start = ZERO
            for p, kind, delta in edges[op.id]:
                j = index[p.id]
                pdelay, plat, _pii = timing(p)
                if j in offs:          # producer in the same step
                    if kind == "mem":
                        if delta != 0:
                            return False
                    elif plat >= 1:
                        return False
                    else:
                        start = max(start, offs[j] + pdelay)
                else:
                    age = state[j]
                    if age is None:
                        return False
                    # mem deltas are 0 or 1, already met across distinct steps
                    if kind == "data" and plat >= 1 and age + 1 < plat:
                        return False
            if start + delay > clock:
                return False
            offs[i] = start
            if constrained:
                kind_key = alloc.op_kind.get(op.id)
                if kind_key is not None:
                    fu_need[kind_key] = fu_need.get(kind_key, 0) + 1
                elif op.mem is not None:
                    m = g.memory(op.mem)
                    pk = ("ram", m.id) if m.backing == "onchip_ram" \
                        else ("axi", m.bundle)
                    port_need[pk] = port_need.get(pk, 0) + 1
        if constrained:
            for kind_key, need in fu_need.items():
                # ops issued in earlier steps still hold their unit while
                # their initiation interval has not elapsed
                busy = sum(1 for j, op in enumerate(ops)
                           if state[j] is not None
                           and alloc.op_kind.get(op.id) == kind_key
                           and state[j] + 1 < timing(op)[2])
                if need + busy > alloc.fu[kind_key]:
                    return False
            for pk, need in port_need.items():
                limit = alloc.mem_ports[pk[1]] if pk[0] == "ram" else 1
                if need > limit:
                    return False
        return True

    start_state = tuple([None] * n)
    frontier = {start_state}
    seen = {start_state}
    best = None
    t = 0
    while frontier and (best is None or t < best):
        nxt = set()
        for state in frontier:
            unplaced = [i for i in range(n) if state[i] is None]
            for r in range(len(unplaced) + 1):
                for chosen in combinations(unplaced, r):
                    if not feasible_subset(state, chosen):
                        continue
                    new = list(state)
                    for j in range(n):
                        if new[j] is not None:
                            new[j] = min(new[j] + 1, caps[j])
                    for i in chosen:
                        new[i] = 0
                    new_t = tuple(new)
                    if all(v is not None for v in new_t):
                        # t+1 states consumed so far; tail covers latencies
                        tail = max(max(1, timing(ops[j])[1]) - (new_t[j] + 1)
                                   for j in range(n))
                        total = t + 1 + max(0, tail)
                        if best is None or total < best:
                            best = total
                    elif new_t not in seen:
                        seen.add(new_t)
                        nxt.add(new_t)
        frontier = nxt
        t += 1
    assert best is not None, "oracle failed to place all ops"
    return best
