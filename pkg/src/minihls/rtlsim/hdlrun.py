"""Harnesses around the HDL interpreter.

run_hdl_cosim drives an emitted module's ports directly: the same slave
models and cycle accounting as the FSMD co-simulation, but the device under
test is the Verilog text, so the two must agree bit for bit and cycle for
cycle. run_testbench executes a generated bench (module plus hex images) to
its own PASS/FAIL verdict.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..axi.plan import DelayConfig
from ..axi.protocol import TRACE_FIELDS, check_trace
from ..errors import HdlError, SimError
from .fsmdsim import DEFAULT_CYCLE_BUDGET, _Slave
from .hdlsim import HdlSim
from .memimage import MemoryImage
from .verilog import parse_source

_ZERO_SIG = {f: 0 for f in TRACE_FIELDS}

# master-driven and slave-driven channel signals, in trace order
_M_FIELDS = ("arvalid", "araddr", "arlen", "arsize", "rready",
             "awvalid", "awaddr", "awlen", "awsize",
             "wvalid", "wdata", "wstrb", "wlast", "bready")
_S_FIELDS = ("arready", "rvalid", "rdata", "rresp", "rlast",
             "awready", "wready", "bvalid", "bresp")


@dataclass
class HdlCosimResult:
    value: int
    cycles: int
    memories: dict[int, MemoryImage]
    trace: list = field(default_factory=list)   # (channels,) rows
    error_response: bool = False


def _bundle_ports(mod) -> dict[int, int]:
    """bundle id -> bus width, from the module's AXI port names."""
    widths = {}
    for p in mod.ports:
        m = re.fullmatch(r"m_axi_(\d+)_RDATA", p.name)
        if m:
            widths[int(m.group(1))] = p.width
    return widths


def run_hdl_cosim(design, scalars: dict, mem: dict | None = None,
                  delays: DelayConfig | None = None, *, top: str | None = None,
                  cycle_budget: int = DEFAULT_CYCLE_BUDGET,
                  faults: dict | None = None,
                  check: bool = True) -> HdlCosimResult:
    """Clock the emitted module until done, mirroring run_cosim.

    design is Verilog text (or parsed modules); scalars maps every
    parameter to its value, array parameters to their byte base address.
    """
    modules = {m.name: m for m in (parse_source(design)
                                   if isinstance(design, str) else design)}
    if top is None:
        if len(modules) != 1:
            raise HdlError("several modules; pick a top")
        top = next(iter(modules))
    sim = HdlSim(modules, top)
    mod = modules[top]
    delays = delays or DelayConfig()
    mem = mem or {}
    faults = faults or {}

    port_names = {p.name for p in mod.ports}
    for want in ("clk", "rst", "start", "done", "retval"):
        if want not in port_names:
            raise HdlError(f"module {top} has no {want} port")
    args = {}
    for p in mod.ports:
        if p.name.startswith("arg_"):
            args[p.name] = p.width
    for name in args:
        src = name[4:]
        if src not in scalars:
            raise SimError(f"missing argument: {src}")

    widths = _bundle_ports(mod)
    bundles = sorted(widths)
    slaves = {b: _Slave(mem.get(b, MemoryImage()).clone(), delays, widths[b],
                        faults.get(b, ()))
              for b in bundles}
    images = {b: slaves[b].image for b in bundles}
    # pre-resolved slot ids keep the cycle loop flat
    in_slots = {b: {f: sim.slot(f"m_axi_{b}_{f.upper()}")
                    for f in _S_FIELDS} for b in bundles}
    out_slots = {b: {f: sim.slot(f"m_axi_{b}_{f.upper()}")
                     for f in _M_FIELDS} for b in bundles}
    done_slot = sim.slot("done")
    S = sim.S

    sim.poke("rst", 1)
    sim.poke("start", 0)
    for name in args:
        sim.poke(name, int(scalars[name[4:]]))
    sim.cycle()                      # reset edge, not counted
    S = sim.S
    sim.poke("rst", 0)
    sim.poke("start", 1)

    trace = []
    cycles = 0
    while True:
        if cycles >= cycle_budget:
            raise SimError(f"cycle budget exceeded ({cycle_budget} cycles)")
        s_outs = {}
        for b in bundles:
            o = slaves[b].outputs({})
            s_outs[b] = o
            slots = in_slots[b]
            for f in _S_FIELDS:
                S[slots[f]] = o.get(f, 0)
        sim.settle()
        S = sim.S
        if S[done_slot]:
            trace.append({b: _ZERO_SIG for b in bundles})
            cycles += 1
            break
        chans = {}
        for b in bundles:
            slots = out_slots[b]
            m = {f: S[slots[f]] for f in _M_FIELDS}
            sig = dict(_ZERO_SIG)
            sig.update(m)
            sig.update(s_outs[b])
            chans[b] = sig
            slaves[b].commit(m, s_outs[b])
        trace.append(chans)
        sim.tick()
        S = sim.S
        cycles += 1

    if check and bundles:
        bad = check_trace(trace)
        if bad:
            raise SimError("AXI protocol assertion failure: " + bad[0])
    err = sim.peek("err") if "err" in port_names else 0
    return HdlCosimResult(value=sim.peek("retval"), cycles=cycles,
                          memories=images, trace=trace,
                          error_response=bool(err))


@dataclass
class TestbenchResult:
    passed: bool
    cycles: int
    displays: list[str]

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def run_testbench(files: dict[str, str], top: str | None = None, *,
                  base_dir=None,
                  cycle_budget: int = DEFAULT_CYCLE_BUDGET) -> TestbenchResult:
    """Execute a generated bench to its printed verdict.

    files maps file names to contents; every ``.v`` entry is parsed and the
    hex images resolve by name ($readmemh falls back to base_dir). The top
    defaults to the single module nobody instantiates.
    """
    modules = []
    for name in sorted(files):
        if name.endswith(".v"):
            modules.extend(parse_source(files[name], name))
    byname = {m.name: m for m in modules}
    if top is None:
        used = {item[1] for m in modules for item in m.items
                if item[0] == "instance"}
        roots = [m.name for m in modules if m.name not in used]
        if len(roots) != 1:
            raise HdlError(f"cannot pick a top among {sorted(byname)}")
        top = roots[0]
    sim = HdlSim(byname, top, files=files, base_dir=base_dir)
    cycles = 0
    while not sim.finished:
        if cycles >= cycle_budget:
            raise SimError(f"cycle budget exceeded ({cycle_budget} cycles)")
        sim.cycle()
        cycles += 1
    displays = list(sim.out)
    passed = any(d == "PASS" for d in displays) and \
        not any(d.startswith("FAIL") for d in displays)
    return TestbenchResult(passed=passed, cycles=cycles, displays=displays)
