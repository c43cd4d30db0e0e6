"""HDL emission: Verilog module, self-checking bench, backend scripts."""

from ..axi.plan import DelayConfig
from .design import HdlDesign, build_design, write_design
from .emit import emit_verilog, emit_vhdl, mangle
from .hexio import dump_hex, parse_hex
from .synth import emit_synthesis_script
from .testbench import emit_testbench

__all__ = [
    "DelayConfig",
    "HdlDesign",
    "build_design",
    "dump_hex",
    "emit_synthesis_script",
    "emit_testbench",
    "emit_verilog",
    "emit_vhdl",
    "mangle",
    "parse_hex",
    "write_design",
]
