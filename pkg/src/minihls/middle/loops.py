"""Dominator tree and natural loop discovery over the block graph."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ToolError


class LoopError(ToolError):
    pass


def dominators(g) -> dict[int, int]:
    """Immediate dominators, Cooper/Harvey/Kennedy iteration over RPO.

    Returns idom per reachable block; the entry maps to itself.
    """
    order = g.block_order()
    rpo_index = {b.id: i for i, b in enumerate(order)}
    idom: dict[int, int] = {g.entry: g.entry}

    def intersect(a: int, b: int) -> int:
        while a != b:
            while rpo_index[a] > rpo_index[b]:
                a = idom[a]
            while rpo_index[b] > rpo_index[a]:
                b = idom[b]
        return a

    changed = True
    while changed:
        changed = False
        for b in order[1:]:
            new = None
            for p in b.preds:
                if p not in rpo_index:
                    continue   # unreachable pred
                if p in idom:
                    new = p if new is None else intersect(new, p)
            if new is None:
                continue
            if idom.get(b.id) != new:
                idom[b.id] = new
                changed = True
    return idom


def dominates(idom: dict[int, int], entry: int, a: int, b: int) -> bool:
    while True:
        if a == b:
            return True
        if b == entry:
            return False
        b = idom[b]


@dataclass
class Loop:
    header: int
    latches: list[int]
    body: set[int] = field(default_factory=set)   # includes header
    depth: int = 1
    parent: int | None = None                     # header of enclosing loop


def find_loops(g) -> list[Loop]:
    """Natural loops from back edges; raises on irreducible flow.

    A back edge t->h requires h to dominate t. Any retreating edge that is
    not a back edge means the graph has a loop with two entries, which the
    control synthesis cannot express.
    """
    idom = dominators(g)
    order = g.block_order()
    rpo_index = {b.id: i for i, b in enumerate(order)}
    loops: dict[int, Loop] = {}

    for b in order:
        for s in b.successors():
            if rpo_index[s] <= rpo_index[b.id]:   # retreating edge
                if not dominates(idom, g.entry, s, b.id):
                    raise LoopError(
                        f"irreducible loop: edge {b.name} -> "
                        f"{g.blocks[s].name} enters below the header")
                loop = loops.setdefault(s, Loop(header=s, latches=[]))
                loop.latches.append(b.id)

    for loop in loops.values():
        loop.body = {loop.header}
        work = [t for t in loop.latches]
        while work:
            n = work.pop()
            if n in loop.body:
                continue
            loop.body.add(n)
            work.extend(g.blocks[n].preds)

    # nesting: a loop's parent is the smallest strictly containing loop
    ordered = sorted(loops.values(), key=lambda l: len(l.body))
    for i, inner in enumerate(ordered):
        for outer in ordered[i + 1:]:
            if inner.header != outer.header and inner.header in outer.body:
                inner.parent = outer.header
                break
    for loop in ordered:
        d, p = 1, loop.parent
        while p is not None:
            d += 1
            p = loops[p].parent
        loop.depth = d
    return sorted(loops.values(), key=lambda l: rpo_index[l.header])


def loop_depth_by_block(g) -> dict[int, int]:
    depth = {b.id: 0 for b in g.block_order()}
    for loop in find_loops(g):
        for bid in loop.body:
            depth[bid] = max(depth[bid], loop.depth)
    return depth


@dataclass
class LoopInfo:
    depth: dict[int, int]                     # block id -> nesting depth
    back_edges: list[tuple[int, int]]         # (latch, header)
    loops: list[Loop]


def analyze_loops(g) -> LoopInfo:
    loops = find_loops(g)
    edges = [(latch, l.header) for l in loops for latch in l.latches]
    return LoopInfo(loop_depth_by_block(g), edges, loops)
