"""Functional unit allocation.

Every op class/width used by the CDFG gets one FU instance by default;
user constraints raise (never lower) instance counts. The stage count per
kind comes from the library lookup at the requested clock, so allocation
is where clock pressure turns into pipelined units. Extension ops are pure
wiring and own no unit; loads/stores consume memory ports (RAM) or bundle
slots (AXI), which are capacity rules rather than allocated instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal

from ..errors import AllocationError
from ..charlib import ComponentLibrary, CharacterizationRecord, lookup
from ..middle.cdfg import Cdfg, UNIT_CLASS

# kind key: (class, width, stages)
Kind = tuple


@dataclass
class Allocation:
    clock_ns: Decimal
    fu: dict[Kind, int] = field(default_factory=dict)
    records: dict[Kind, CharacterizationRecord] = field(default_factory=dict)
    op_kind: dict[int, Kind] = field(default_factory=dict)      # op id -> kind
    port_records: dict[int, CharacterizationRecord] = field(default_factory=dict)  # op id
    mem_ports: dict[int, int] = field(default_factory=dict)     # mem id -> ports
    bundles: list[int] = field(default_factory=list)

    @staticmethod
    def kind_name(kind: Kind) -> str:
        cls, width, _stages = kind
        return f"{cls}{width}"

    def timing(self, op) -> tuple[Decimal, int, int]:
        """(delay ns, latency steps, ii steps) for a scheduled op."""
        kind = self.op_kind.get(op.id)
        if kind is not None:
            r = self.records[kind]
            return r.delay_ns, r.latency, r.ii
        r = self.port_records.get(op.id)
        if r is not None:
            return r.delay_ns, r.latency, r.ii
        return Decimal(0), 0, 1

    def dump(self) -> str:
        lines = ["allocation:"]
        for kind in sorted(self.fu):
            rec = self.records[kind]
            lines.append(
                f"  {self.kind_name(kind)} stages={kind[2]} count={self.fu[kind]}"
                f" delay={rec.delay_ns} latency={rec.latency} ii={rec.ii}"
                f" lut={rec.lut} dsp={rec.dsp}")
        for mid in sorted(self.mem_ports):
            lines.append(f"  mem {mid}: ports={self.mem_ports[mid]}")
        if self.bundles:
            lines.append(f"  axi bundles: {sorted(self.bundles)}")
        return "\n".join(lines) + "\n"


def op_width(g: Cdfg, op) -> int:
    """Width parameter of the unit an op runs on (operand width)."""
    if op.opcode in ("load", "store"):
        return g.memory(op.mem).elem_width
    if op.args:
        return g.value_width(op.args[0])
    return g.value_width(op.result)


def is_free_op(opcode: str) -> bool:
    return UNIT_CLASS.get(opcode) == "ext"


def allocate(g: Cdfg, constraints: dict[str, int], lib: ComponentLibrary,
             clock_ns: Decimal) -> Allocation:
    alloc = Allocation(clock_ns)
    for m in g.memories:
        if m.backing == "onchip_ram":
            alloc.mem_ports[m.id] = min(2, lib.target.ram_ports_per_block)
        elif m.bundle is not None and m.bundle not in alloc.bundles:
            alloc.bundles.append(m.bundle)

    for block, op in g.iter_ops():
        if op.opcode == "phi" or is_free_op(op.opcode):
            continue
        cls = UNIT_CLASS.get(op.opcode)
        if cls is None:
            raise AllocationError(f"no unit class for opcode {op.opcode}")
        width = op_width(g, op)
        if cls in ("load_port", "store_port"):
            alloc.port_records[op.id] = lookup(lib, cls, width, clock_ns)
            continue
        rec = lookup(lib, cls, width, clock_ns)
        kind = (cls, width, rec.stages)
        alloc.op_kind[op.id] = kind
        if kind not in alloc.fu:
            alloc.fu[kind] = 1
            alloc.records[kind] = rec

    for key, count in sorted(constraints.items()):
        matched = [k for k in alloc.fu
                   if k[0] == key or Allocation.kind_name(k) == key]
        for kind in matched:
            if count < 1:
                raise AllocationError(
                    f"allocation below 1 for used kind {Allocation.kind_name(kind)}")
            alloc.fu[kind] = count
    return alloc
