"""Tool configuration: the sectioned config file, target descriptor files,
and the flat scalar-vector files the cosim command reads.

Config file shape::

    tool {
        top = dot;
        clock_ns = 10;
        target = "target.cfg";
        library = "lib.xml";
        out = "build";
        optimize = 1;
        fsm_encoding = binary;
    }
    interface {
        b: axi(bundle=0);
        share(p, q);
        bus_width = 32;
    }
    constraints {
        add = 2;
        mul32 = 1;
    }
    delays {
        0,0,0;
        5,2,3;
    }

Unknown sections and unknown keys are rejected; the only environment
variable honored anywhere is MINIHLS_OUT (output directory override).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal

from ..axi.iface import InterfaceConfig
from ..axi.plan import DelayConfig
from ..charlib import TargetDescriptor
from ..configtext import read_sections, section_map
from ..errors import ConfigError

OUT_ENV = "MINIHLS_OUT"

_TOOL_KEYS = {"top", "clock_ns", "target", "library", "out", "optimize",
              "fsm_encoding"}
_FSM_ENCODINGS = ("binary", "onehot")


@dataclass
class ToolConfig:
    top: str | None = None
    clock_ns: Decimal = Decimal("10")
    target_path: str | None = None
    library_path: str | None = None
    iface: InterfaceConfig = field(default_factory=InterfaceConfig)
    constraints: dict[str, int] = field(default_factory=dict)
    optimize: bool = True
    fsm_encoding: str = "binary"
    delays: list[DelayConfig] = field(default_factory=list)
    out: str | None = None


def _clock(value, path: str, line: int) -> Decimal:
    if isinstance(value, int):
        value = Decimal(value)
    if not isinstance(value, Decimal) or value <= 0:
        raise ConfigError(f"{path}:{line}: clock_ns must be a positive number")
    return value


def _tool_section(cfg: ToolConfig, sec, path: str):
    for item in sec.items:
        if item.kind != "kv":
            raise ConfigError(f"{path}:{item.line}: expected key = value")
        key, v = item.key, item.value
        if key not in _TOOL_KEYS:
            raise ConfigError(f"{path}:{item.line}: unknown tool key {key!r}")
        if key == "top":
            cfg.top = str(v)
        elif key == "clock_ns":
            cfg.clock_ns = _clock(v, path, item.line)
        elif key == "target":
            cfg.target_path = str(v)
        elif key == "library":
            cfg.library_path = str(v)
        elif key == "out":
            cfg.out = str(v)
        elif key == "optimize":
            if v not in (0, 1):
                raise ConfigError(f"{path}:{item.line}: optimize must be 0 or 1")
            cfg.optimize = bool(v)
        elif key == "fsm_encoding":
            if v not in _FSM_ENCODINGS:
                raise ConfigError(
                    f"{path}:{item.line}: fsm_encoding must be binary or onehot")
            cfg.fsm_encoding = v


def _interface_section(cfg: ToolConfig, sec, path: str):
    ic = cfg.iface
    for item in sec.items:
        if item.kind == "pin":
            call = item.value
            if call.fn != "axi" or call.args or \
                    set(call.kwarg_map()) != {"bundle"}:
                raise ConfigError(
                    f"{path}:{item.line}: expected {item.key}: axi(bundle=N)")
            bid = call.kwarg_map()["bundle"]
            if not isinstance(bid, int) or bid < 0:
                raise ConfigError(f"{path}:{item.line}: bundle id must be >= 0")
            if item.key in ic.bundle_pins:
                raise ConfigError(f"{path}:{item.line}: {item.key} pinned twice")
            ic.bundle_pins[item.key] = bid
        elif item.kind == "call":
            call = item.value
            if call.fn != "share" or call.kwargs or len(call.args) < 2 or \
                    not all(isinstance(a, str) for a in call.args):
                raise ConfigError(
                    f"{path}:{item.line}: expected share(p, q, ...)")
            ic.shares.append(list(call.args))
        elif item.kind == "kv" and item.key == "bus_width":
            if item.value not in (32, 64):
                raise ConfigError(f"{path}:{item.line}: bus_width must be 32 or 64")
            ic.bus_width = item.value
        else:
            raise ConfigError(f"{path}:{item.line}: unknown interface item")


def _constraints_section(cfg: ToolConfig, sec, path: str):
    for item in sec.items:
        if item.kind != "kv" or not isinstance(item.value, int):
            raise ConfigError(f"{path}:{item.line}: expected kind = count")
        if item.value < 1:
            raise ConfigError(f"{path}:{item.line}: count must be >= 1")
        cfg.constraints[item.key] = item.value


def _delays_section(cfg: ToolConfig, sec, path: str):
    for item in sec.items:
        if item.kind != "row" or len(item.value) != 3 or \
                not all(isinstance(v, int) and v >= 0 for v in item.value):
            raise ConfigError(
                f"{path}:{item.line}: expected three non-negative integers R,G,W")
        cfg.delays.append(DelayConfig(*item.value))


def parse_tool_config(text: str, path: str = "<config>") -> ToolConfig:
    secs = section_map(read_sections(text, path),
                       {"tool", "interface", "constraints", "delays"}, path)
    cfg = ToolConfig()
    if "tool" in secs:
        _tool_section(cfg, secs["tool"], path)
    if "interface" in secs:
        _interface_section(cfg, secs["interface"], path)
    if "constraints" in secs:
        _constraints_section(cfg, secs["constraints"], path)
    if "delays" in secs:
        _delays_section(cfg, secs["delays"], path)
    return cfg


_TARGET_KEYS = {"name", "lut_capacity", "dsp_native_width_bits",
                "ram_ports_per_block", "host_clock_mhz", "max_stages"}


def parse_target_file(text: str, path: str = "<target>") -> TargetDescriptor:
    secs = section_map(read_sections(text, path), {"target"}, path)
    if "target" not in secs:
        raise ConfigError(f"{path}: missing target section")
    fields = {}
    for item in secs["target"].items:
        if item.kind != "kv":
            raise ConfigError(f"{path}:{item.line}: expected key = value")
        if item.key not in _TARGET_KEYS:
            raise ConfigError(f"{path}:{item.line}: unknown target key {item.key!r}")
        if item.key == "name":
            fields["name"] = str(item.value)
        else:
            if not isinstance(item.value, int) or item.value < 1:
                raise ConfigError(
                    f"{path}:{item.line}: {item.key} must be a positive integer")
            fields[item.key] = item.value
    return TargetDescriptor(**fields)


def parse_scalar_vector_file(text: str, path: str = "<vectors>") -> dict[str, int]:
    """Flat `name = value;` lines naming every scalar argument (pointer
    arguments take their base address)."""
    out: dict[str, int] = {}
    for sec in read_sections(f"v {{ {text} }}", path):
        for item in sec.items:
            if item.kind != "kv" or not isinstance(item.value, int):
                raise ConfigError(f"{path}:{item.line}: expected name = integer;")
            if item.key in out:
                raise ConfigError(f"{path}:{item.line}: duplicate value for {item.key}")
            out[item.key] = item.value
    if not out:
        raise ConfigError(f"{path}: no test vectors")
    return out
