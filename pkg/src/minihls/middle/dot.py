"""DOT rendering of a CDFG for inspection (--dump-cdfg).

One cluster per basic block; node label is opcode:width (store nodes show
the stored element width). Data edges are solid, control edges dashed,
phi back-inputs dotted.
"""

from __future__ import annotations

from .cdfg import Cdfg


def cdfg_to_dot(g: Cdfg) -> str:
    lines = [f'digraph "{g.name}" {{', "  node [shape=box, fontname=monospace];"]
    producer: dict[int, str] = {}
    for b in g.block_order():
        for op in b.ops:
            if op.result is not None:
                producer[op.result] = f"op{op.id}"
    for p in g.params:
        if hasattr(p, "width"):
            lines.append(f'  arg_{p.name} [label="{p.name}:{p.width}", shape=ellipse];')
            producer[p.value] = f"arg_{p.name}"

    for b in g.block_order():
        lines.append(f"  subgraph cluster_{b.id} {{")
        lines.append(f'    label="{b.name}";')
        for op in b.ops:
            if op.opcode == "store":
                w = g.memory(op.mem).elem_width
                label = f"store:{w} [{g.memory(op.mem).name}]"
            elif op.opcode == "load":
                label = f"load:{g.value_width(op.result)} [{g.memory(op.mem).name}]"
            elif op.result is not None:
                label = f"{op.opcode}:{g.value_width(op.result)}"
            else:
                label = op.opcode
            lines.append(f'    op{op.id} [label="{label}"];')
        term = b.term[0] if b.term else "?"
        lines.append(f'    term{b.id} [label="{term}", shape=diamond];')
        lines.append("  }")

    for b in g.block_order():
        for op in b.ops:
            style = ' [style=dotted]' if op.opcode == "phi" else ""
            for a in op.args:
                if a in producer:
                    lines.append(f"  {producer[a]} -> op{op.id}{style};")
                elif a in g.constants:
                    cid = f"c{a}"
                    lines.append(
                        f'  {cid} [label="{g.constants[a]}:{g.value_width(a)}",'
                        f" shape=plaintext];")
                    lines.append(f"  {cid} -> op{op.id}{style};")
        if b.term and b.term[0] in ("br", "ret") and b.term[1] in producer:
            lines.append(f"  {producer[b.term[1]]} -> term{b.id};")
        for s in b.successors():
            lines.append(f"  term{b.id} -> term{s} [style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"
