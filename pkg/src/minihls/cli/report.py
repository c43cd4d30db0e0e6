"""Structured compile reports.

`compile_report` builds the report.json payload; `schedule_report` and
`resources_report` render the two --report text views. Everything here is
derived from the Fsmd bundle, so reports stay consistent with the emitted
HDL by construction.
"""

from __future__ import annotations

import json

from ..charlib import canon_decimal
from ..hls.allocate import Allocation
from ..hls.fsmd import Fsmd


def _fu_rows(alloc: Allocation) -> list[dict]:
    rows = []
    for kind in sorted(alloc.fu):
        rec = alloc.records[kind]
        rows.append({
            "unit": Allocation.kind_name(kind),
            "count": alloc.fu[kind],
            "stages": kind[2],
            "delay_ns": canon_decimal(rec.delay_ns),
            "latency": rec.latency,
            "ii": rec.ii,
            "lut_each": rec.lut,
            "dsp_each": rec.dsp,
        })
    return rows


def _block_rows(f: Fsmd) -> list[dict]:
    owned: dict[int, int] = {}
    for st in f.states:
        if st.block is not None:
            owned[st.block] = owned.get(st.block, 0) + 1
    rows = []
    for b in f.g.block_order():
        axi = sum(len(ops) for (bid, _s), ops in f.axi_by_state.items()
                  if bid == b.id)
        rows.append({
            "block": b.name,
            "steps": f.sched.block_steps[b.id],
            "states": owned.get(b.id, 0),
            # single-pass state count: cycles for one traversal at zero delay
            "cycle_estimate": owned.get(b.id, 0),
            "axi_ops": axi,
        })
    return rows


def resource_summary(f: Fsmd) -> dict:
    alloc = f.alloc
    lut = sum(alloc.records[k].lut * n for k, n in alloc.fu.items())
    dsp = sum(alloc.records[k].dsp * n for k, n in alloc.fu.items())
    regs = dict(sorted(f.binding.reg_counts.items()))
    return {
        "fu": _fu_rows(alloc),
        "registers": {str(w): n for w, n in regs.items()},
        "register_total": sum(regs.values()),
        "ram_blocks": [{"name": r.name, "words": r.words, "width": r.width,
                        "ports": r.ports} for r in f.rams],
        "axi_controllers": [{"bundle": c.bundle, "data_width": c.data_width}
                            for c in f.controllers],
        "lut_used": lut,
        "dsp_used": dsp,
    }


def compile_report(f: Fsmd, *, fsm_encoding: str, files: list[str]) -> dict:
    target = f.alloc and _target_of(f)
    res = resource_summary(f)
    return {
        "top": f.g.name,
        "clock_ns": canon_decimal(f.sched.clock_ns),
        "fsm_encoding": fsm_encoding,
        "states": f.state_count(),
        "blocks": _block_rows(f),
        "resources": res,
        "budget": {
            "target": target.name,
            "lut_capacity": target.lut_capacity,
            "lut_used": res["lut_used"],
            "feasible": res["lut_used"] <= target.lut_capacity,
        },
        "interface": {
            "bus_width": f.iface.bus_width,
            "bundles": [{"id": b.id, "data_width": b.data_width,
                         "params": list(b.params)} for b in f.iface.bundles],
            "scalars": sorted(p for p, kind in f.iface.kinds.items()
                              if kind[0] == "scalar_port"),
        },
        "files": list(files),
    }


def _target_of(f: Fsmd):
    # the library target rides along on every record lookup; rams were sized
    # against it in map_memories, so any record's descriptor is the one used
    return f.mapped_target


def render_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def schedule_report(f: Fsmd) -> str:
    return f.sched.dump(f.g)


def resources_report(f: Fsmd) -> str:
    res = resource_summary(f)
    lines = [f.alloc.dump().rstrip()]
    for w, n in sorted(f.binding.reg_counts.items()):
        lines.append(f"  regs width {w}: {n}")
    lines.append(f"  register total: {res['register_total']}")
    for r in f.rams:
        lines.append(f"  ram {r.name}: {r.words}x{r.width} ports={r.ports}")
    lines.append(f"  lut={res['lut_used']} dsp={res['dsp_used']}"
                 f" ram_blocks={len(f.rams)}")
    return "\n".join(lines) + "\n"
