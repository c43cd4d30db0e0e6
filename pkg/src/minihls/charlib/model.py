"""Analytical timing/area model used for component characterization.

Delays are exact decimals so clock-feasibility boundaries behave like the
printed numbers: 0.9/3 is exactly 0.3 and compares equal to a 0.3 ns clock.
Per-stage division quantizes to 9 decimal places (documented precision of
the library format).

The model is pluggable: anything with base_delay_ns/area/latency_ii can
replace the analytic default, e.g. a table imported from real synthesis.
"""

from __future__ import annotations

from decimal import Decimal

from ..errors import CharLibError

PRECISION = Decimal("0.000000001")   # 9 decimal places

OPCODES = (
    "add", "sub", "mul", "div", "mod", "shl", "shr",
    "bitop", "cmp", "mux", "load_port", "store_port", "ext",
)

# opcode -> (delay intercept ns, per-bit slope ns)
_DELAY = {
    "add": ("0.5", "0.05"),
    "sub": ("0.5", "0.05"),
    "cmp": ("0.5", "0.05"),
    "mul": ("1.0", "0.09"),
    "bitop": ("0.3", "0.01"),
    "shl": ("0.4", "0.02"),
    "shr": ("0.4", "0.02"),
    "mux": ("0.2", "0.01"),
    "load_port": ("0.2", "0.01"),
    "store_port": ("0.2", "0.01"),
    "ext": ("0", "0"),
    # sequential units advance one step per clock at adder speed
    "div": ("0.5", "0.05"),
    "mod": ("0.5", "0.05"),
}


class DefaultModel:
    """Closed-form delays/areas; deterministic and synthesis-free."""

    name = "analytic-v1"

    def __init__(self, dsp_native_width: int = 32):
        self.dsp_native_width = dsp_native_width

    def base_delay_ns(self, opcode: str, width: int) -> Decimal:
        try:
            base, slope = _DELAY[opcode]
        except KeyError:
            raise CharLibError(f"model has no entry for opcode {opcode}")
        return Decimal(base) + Decimal(slope) * width

    def area(self, opcode: str, width: int) -> tuple[int, int, int]:
        """(lut, dsp, ram) for one unit."""
        if opcode not in _DELAY:
            raise CharLibError(f"model has no entry for opcode {opcode}")
        if opcode == "mul":
            if width <= self.dsp_native_width:
                return (0, 1, 0)
            return (-(-width * width // 2), 0, 0)
        if opcode in ("div", "mod"):
            return (4 * width, 0, 0)
        if opcode in ("shl", "shr"):
            return (2 * width, 0, 0)
        if opcode in ("ext", "load_port", "store_port"):
            return (0, 0, 0)
        return (width, 0, 0)

    def latency_ii(self, opcode: str, width: int, stages: int) -> tuple[int, int]:
        """(latency cycles, initiation interval) for a legal instance."""
        if opcode in ("div", "mod"):
            return (width, width)
        if opcode in ("load_port", "store_port"):
            return (1, 1)   # synchronous port: data crosses one clock edge
        return (stages, 1)

    def stage_delay_ns(self, opcode: str, width: int, stages: int) -> Decimal:
        base = self.base_delay_ns(opcode, width)
        if stages == 0:
            return base.normalize()
        return (base / (stages + 1)).quantize(PRECISION).normalize()


def canon_decimal(d: Decimal) -> str:
    """Canonical plain-text form: no exponent, no trailing zeros."""
    s = format(d.normalize(), "f")
    return s
