from .allocate import Allocation, allocate
from .schedule import MEM_ORDER_DELTA, Schedule, schedule_list
from .validate import check_schedule, validate_schedule
from .oracle import makespan, optimal_block_steps
from .bind import (Binding, Interval, bind, block_positions, max_overlap,
                   register_intervals)
from .fsmd import (AxiOp, ControllerSpec, Fsmd, FsmState, RamSpec,
                   build_fsmd, map_memories)

__all__ = [
    "Allocation", "allocate", "MEM_ORDER_DELTA", "Schedule", "schedule_list",
    "check_schedule", "validate_schedule", "makespan", "optimal_block_steps",
    "Binding", "Interval", "bind", "block_positions", "max_overlap",
    "register_intervals", "AxiOp", "ControllerSpec", "Fsmd", "FsmState",
    "RamSpec", "build_fsmd", "map_memories",
]
