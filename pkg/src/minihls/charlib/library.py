"""Component library: enumeration, characterization, lookup.

A record characterizes one (opcode, width, stages) template instance at one
clock period. div/mod exist only as sequential multi-cycle units (latency =
width, II = width); memory ports carry one cycle of latency through the
synchronous RAM edge. Everything else follows the pipeline rule: p register
cuts give latency p at per-stage delay base/(p+1).

Lookup policy over feasible records at the requested clock: minimal latency,
then fewest DSPs, then fewest LUTs, then smallest stage count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

from ..errors import CharLibError
from .model import DefaultModel, canon_decimal, OPCODES

MAX_WIDTH = 64
DEFAULT_MAX_STAGES = 2

# opcodes whose only legal form is unpipelined
_SEQUENTIAL_ONLY = {"div", "mod", "load_port", "store_port", "ext", "mux"}


@dataclass(frozen=True)
class ComponentTemplate:
    opcode: str
    width: int        # generic width parameter: operand width in bits
    stages: int       # pipeline register cuts; 0 = combinational

    def legal(self) -> bool:
        if not (1 <= self.width <= MAX_WIDTH):
            return False
        if self.stages < 0:
            return False
        if self.opcode in _SEQUENTIAL_ONLY:
            return self.stages == 0
        return True


@dataclass(frozen=True)
class TargetDescriptor:
    name: str = "ng-ultra"
    lut_capacity: int = 550_000
    dsp_native_width_bits: int = 32
    ram_ports_per_block: int = 2
    host_clock_mhz: int = 600       # documentation metadata, not a constraint
    max_stages: int = DEFAULT_MAX_STAGES


@dataclass(frozen=True)
class CharacterizationRecord:
    opcode: str
    width: int
    stages: int
    clock_ns: Decimal
    delay_ns: Decimal      # per-stage combinational delay
    latency: int
    ii: int
    lut: int
    dsp: int
    ram: int

    @property
    def feasible(self) -> bool:
        return self.delay_ns <= self.clock_ns

    def key(self) -> tuple:
        return (self.opcode, self.width, self.stages, canon_decimal(self.clock_ns))


@dataclass
class ComponentLibrary:
    target: TargetDescriptor
    records: dict[tuple, CharacterizationRecord] = field(default_factory=dict)

    def add(self, rec: CharacterizationRecord):
        k = rec.key()
        if k in self.records:
            raise CharLibError(f"duplicate record key: {k}")
        self.records[k] = rec

    def sorted_records(self) -> list[CharacterizationRecord]:
        return [self.records[k] for k in sorted(self.records)]

    def clocks(self) -> list[Decimal]:
        seen = {}
        for r in self.records.values():
            seen[canon_decimal(r.clock_ns)] = r.clock_ns
        return [seen[k] for k in sorted(seen, key=Decimal)]


def parse_clock(text: str) -> Decimal:
    try:
        d = Decimal(text)
    except InvalidOperation:
        raise CharLibError(f"bad clock period: {text!r}")
    if d <= 0:
        raise CharLibError(f"clock period must be positive: {text}")
    return d


def enumerate_configurations(opcode: str, widths, stages) -> list[ComponentTemplate]:
    if opcode not in OPCODES:
        raise CharLibError(f"model has no entry for opcode {opcode}")
    out = []
    for w in sorted(widths):
        if not (1 <= w <= MAX_WIDTH):
            raise CharLibError(f"width out of range 1..{MAX_WIDTH}: {w}")
        for p in sorted(stages):
            t = ComponentTemplate(opcode, w, p)
            if t.legal():
                out.append(t)
    if not out:
        raise CharLibError(
            f"no legal configurations for {opcode} over "
            f"widths={sorted(widths)} stages={sorted(stages)}")
    return out


def characterize(inst: ComponentTemplate, clock_periods, model) -> list[CharacterizationRecord]:
    """One record per clock period; infeasible records are kept, flagged
    by the feasible property rather than dropped."""
    recs = []
    delay = model.stage_delay_ns(inst.opcode, inst.width, inst.stages)
    latency, ii = model.latency_ii(inst.opcode, inst.width, inst.stages)
    lut, dsp, ram = model.area(inst.opcode, inst.width)
    for clk in clock_periods:
        recs.append(CharacterizationRecord(
            inst.opcode, inst.width, inst.stages, clk,
            delay, latency, ii, lut, dsp, ram))
    return recs


def build_library(target: TargetDescriptor, clocks, widths=None, opcodes=OPCODES,
                  model=None) -> ComponentLibrary:
    """Characterize every legal instance for every clock, merged in sorted
    key order so the result is independent of enumeration order."""
    if model is None:
        model = DefaultModel(target.dsp_native_width_bits)
    if widths is None:
        widths = range(1, MAX_WIDTH + 1)
    stages = range(0, target.max_stages + 1)
    lib = ComponentLibrary(target)
    pending = []
    for opcode in opcodes:
        for inst in enumerate_configurations(opcode, widths, stages):
            pending.extend(characterize(inst, clocks, model))
    for rec in sorted(pending, key=lambda r: r.key()):
        lib.add(rec)
    return lib


def lookup(lib: ComponentLibrary, opcode: str, width: int,
           clock_ns: Decimal) -> CharacterizationRecord:
    clock_key = canon_decimal(clock_ns)
    candidates = [
        r for r in lib.sorted_records()
        if r.opcode == opcode and r.width == width
        and canon_decimal(r.clock_ns) == clock_key and r.feasible
    ]
    if not candidates:
        raise CharLibError(
            f"unschedulable operation at clock period {clock_key} ns: "
            f"{opcode} width {width}")
    candidates.sort(key=lambda r: (r.latency, r.dsp, r.lut, r.stages))
    return candidates[0]
