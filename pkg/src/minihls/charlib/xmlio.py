"""XML persistence for component libraries.

Layout:
    <library>
      <target name=".." lut_capacity=".." dsp_native_width=".."
              ram_ports_per_block=".." host_clock_mhz=".." max_stages=".."/>
      <record opcode="add" widths="32" stages="0" clock_ns="10"
              delay_ns="2.1" latency="0" ii="1" lut="32" dsp="0" ram="0"/>
      ...
    </library>

Numeric time attributes are decimal text; import must reproduce the library
exactly (import(export(lib)) == lib), so no float conversion anywhere.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from decimal import Decimal, InvalidOperation

from ..errors import CharLibError
from .library import (CharacterizationRecord, ComponentLibrary,
                      TargetDescriptor)
from .model import canon_decimal


def export_xml(lib: ComponentLibrary) -> str:
    root = ET.Element("library")
    t = lib.target
    ET.SubElement(root, "target", {
        "name": t.name,
        "lut_capacity": str(t.lut_capacity),
        "dsp_native_width": str(t.dsp_native_width_bits),
        "ram_ports_per_block": str(t.ram_ports_per_block),
        "host_clock_mhz": str(t.host_clock_mhz),
        "max_stages": str(t.max_stages),
    })
    for r in lib.sorted_records():
        ET.SubElement(root, "record", {
            "opcode": r.opcode,
            "widths": str(r.width),
            "stages": str(r.stages),
            "clock_ns": canon_decimal(r.clock_ns),
            "delay_ns": canon_decimal(r.delay_ns),
            "latency": str(r.latency),
            "ii": str(r.ii),
            "lut": str(r.lut),
            "dsp": str(r.dsp),
            "ram": str(r.ram),
        })
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def _attr(elem, path: str, name: str) -> str:
    v = elem.get(name)
    if v is None:
        raise CharLibError(f"schema violation at {path}: missing attribute {name}")
    return v


def _int_attr(elem, path: str, name: str) -> int:
    v = _attr(elem, path, name)
    try:
        return int(v)
    except ValueError:
        raise CharLibError(f"schema violation at {path}: bad integer {name}={v!r}")


def _dec_attr(elem, path: str, name: str) -> Decimal:
    v = _attr(elem, path, name)
    try:
        return Decimal(v)
    except InvalidOperation:
        raise CharLibError(f"schema violation at {path}: bad decimal {name}={v!r}")


def import_xml(text: str) -> ComponentLibrary:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as e:
        raise CharLibError(f"schema violation at library: not well-formed ({e})")
    if root.tag != "library":
        raise CharLibError(f"schema violation at {root.tag}: expected library root")
    tnode = root.find("target")
    if tnode is None:
        raise CharLibError("schema violation at library: missing target element")
    path = "library/target"
    target = TargetDescriptor(
        name=_attr(tnode, path, "name"),
        lut_capacity=_int_attr(tnode, path, "lut_capacity"),
        dsp_native_width_bits=_int_attr(tnode, path, "dsp_native_width"),
        ram_ports_per_block=_int_attr(tnode, path, "ram_ports_per_block"),
        host_clock_mhz=_int_attr(tnode, path, "host_clock_mhz"),
        max_stages=_int_attr(tnode, path, "max_stages"),
    )
    lib = ComponentLibrary(target)
    for i, node in enumerate(root.findall("record")):
        p = f"library/record[{i + 1}]"
        rec = CharacterizationRecord(
            opcode=_attr(node, p, "opcode"),
            width=_int_attr(node, p, "widths"),
            stages=_int_attr(node, p, "stages"),
            clock_ns=_dec_attr(node, p, "clock_ns"),
            delay_ns=_dec_attr(node, p, "delay_ns"),
            latency=_int_attr(node, p, "latency"),
            ii=_int_attr(node, p, "ii"),
            lut=_int_attr(node, p, "lut"),
            dsp=_int_attr(node, p, "dsp"),
            ram=_int_attr(node, p, "ram"),
        )
        try:
            lib.add(rec)
        except CharLibError:
            raise CharLibError(f"duplicate record key at {p}: {rec.key()}")
    return lib
