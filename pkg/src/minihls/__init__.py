"""minihls: a miniature high-level synthesis flow.

A C-subset frontend, an SSA dataflow middle end, a characterized operator
library, list scheduling with operator chaining, FSMD construction, AXI4
master interfaces, Verilog emission with self-checking testbenches, and a
built-in cycle-accurate co-simulator.
"""

__version__ = "0.1.0"
