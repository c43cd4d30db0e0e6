"""One-call composition of the synthesis pipeline.

Source text goes in, a simulatable and emittable Fsmd comes out. Each stage
stays individually importable for tests and tools that want to stop midway;
this module only strings them together and keeps the result bundle handy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal

from .frontend import load_program
from .frontend.nodes import TypedProgram
from .middle import Cdfg, lower_to_cdfg, optimize
from .axi.iface import (InterfaceConfig, InterfaceSpec, infer_interfaces,
                        tag_bundles)
from .charlib import ComponentLibrary, TargetDescriptor, build_library
from .hls import (allocate, bind, build_fsmd, check_schedule, map_memories,
                  schedule_list)
from .hls.fsmd import Fsmd


@dataclass
class FlowResult:
    prog: TypedProgram
    cdfg: Cdfg
    iface: InterfaceSpec
    fsmd: Fsmd
    clock_ns: Decimal
    constraints: dict[str, int] = field(default_factory=dict)

    @property
    def top(self) -> str:
        return self.prog.top_function.name


def compile_source(text: str, *, path: str = "<input>", top: str | None = None,
                   clock_ns=Decimal("10"), library: ComponentLibrary | None = None,
                   target: TargetDescriptor | None = None,
                   iface_config: InterfaceConfig | None = None,
                   constraints: dict[str, int] | None = None,
                   run_optimize: bool = True) -> FlowResult:
    clock_ns = Decimal(str(clock_ns))
    prog = load_program(text, path, top=top)
    g = lower_to_cdfg(prog)
    if run_optimize:
        optimize(g)
    spec = infer_interfaces(prog, iface_config)
    tag_bundles(g, spec)
    if library is None:
        library = build_library(target or TargetDescriptor(), [clock_ns])
    constraints = dict(constraints or {})
    alloc = allocate(g, constraints, library, clock_ns)
    sched = schedule_list(g, alloc, clock_ns, library)
    check_schedule(g, sched, alloc)
    binding = bind(g, sched, alloc)
    f = build_fsmd(g, sched, binding, spec, alloc)
    map_memories(g, f, library.target)
    return FlowResult(prog, g, spec, f, clock_ns, constraints)
