"""Backend synthesis script generation.

The script is a generic stand-in for a vendor flow: it records the project
setup, the source files in manifest order, the top module, the clock
constraint and the compilation steps (synthesis, place, route, timing).
It is plain text, never executed here, and deliberately frugal with
dialect so retargeting means editing one template. Everything that depends
on the target sits on lines carrying the target name.
"""

from __future__ import annotations

from decimal import Decimal

from ..errors import EmitError


def _mhz(clock_ns: Decimal) -> str:
    mhz = (Decimal(1000) / Decimal(clock_ns)).normalize()
    text = format(mhz, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def emit_synthesis_script(target, manifest, *, top: str | None = None,
                          clock_ns: Decimal = Decimal("10")) -> str:
    """Render the project script for one target.

    manifest is the ordered list of design files and must name at least
    one; top defaults to the stem of its first entry.
    """
    files = [str(name) for name in manifest]
    if not files:
        raise EmitError("cannot write a synthesis script for an empty "
                        "manifest")
    if top is None:
        top = files[0].rsplit("/", 1)[-1].split(".", 1)[0]
    clock_ns = Decimal(clock_ns)
    lines = [
        f"# synthesis script for {top}",
        f"create_project {top}_proj -target {target.name}",
        f"# target {target.name}: {target.lut_capacity} LUTs, "
        f"{target.dsp_native_width_bits}-bit DSP datapath",
    ]
    for name in files:
        lines.append(f"add_file {name}")
    lines += [
        f"set_top {top}",
        f"create_clock clk -period_ns {clock_ns} -frequency "
        f"{_mhz(clock_ns)} MHz",
        "run_synthesis",
        "run_place",
        "run_route",
        "run_timing_analysis",
        f"write_report {top}_timing.rpt",
    ]
    return "\n".join(lines) + "\n"
