"""Verification backbone: golden interpreter and cycle-accurate simulators."""

from .memimage import MemoryImage
from .interp import InterpResult, StepBudgetExceeded, interpret
from .cdfgexec import ExecResult, execute_cdfg
from .fsmdsim import (CosimResult, EquivVerdict, cosim_equiv, format_trace,
                      run_cosim)
from .verilog import parse_source
from .hdlsim import HdlSim
from .hdlrun import (HdlCosimResult, TestbenchResult, run_hdl_cosim,
                     run_testbench)

__all__ = [
    "MemoryImage", "InterpResult", "StepBudgetExceeded", "interpret",
    "ExecResult", "execute_cdfg",
    "CosimResult", "EquivVerdict", "cosim_equiv", "format_trace", "run_cosim",
    "parse_source", "HdlSim",
    "HdlCosimResult", "TestbenchResult", "run_hdl_cosim", "run_testbench",
]
