"""SSA CDFG construction, optimization, and analyses."""

from .cdfg import Cdfg, Block, Op, MemObject, ScalarParam, ArrayParam, CdfgError
from .lower import lower_to_cdfg, DEFAULT_OP_BUDGET
from .loops import (dominators, find_loops, loop_depth_by_block, analyze_loops,
                    LoopInfo, LoopError)
from .optimize import optimize
from .dot import cdfg_to_dot

__all__ = [
    "Cdfg", "Block", "Op", "MemObject", "ScalarParam", "ArrayParam",
    "CdfgError", "lower_to_cdfg", "DEFAULT_OP_BUDGET",
    "dominators", "find_loops", "loop_depth_by_block", "analyze_loops",
    "LoopInfo", "LoopError", "optimize", "cdfg_to_dot",
]
