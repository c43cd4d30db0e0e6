"""Master interface inference for array-reference parameters.

Every pointer parameter of the top function gets its own AXI master bundle
unless the interface config merges several onto a shared one or pins bundle
numbers explicitly. Scalars become plain input ports and can never sit on a
bundle. The resulting spec maps parameter names to port kinds and owns the
bundle table used by scheduling (one op per bundle per step), FSMD
construction, simulation and emission.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InterfaceError
from ..frontend.nodes import ArrayRefType, TypedProgram
from ..middle.cdfg import Cdfg


@dataclass
class Bundle:
    id: int
    data_width: int = 32
    id_width: int = 1
    params: list[str] = field(default_factory=list)

    @property
    def shared(self) -> bool:
        return len(self.params) > 1


@dataclass
class InterfaceConfig:
    bundle_pins: dict[str, int] = field(default_factory=dict)  # param -> bundle id
    shares: list[list[str]] = field(default_factory=list)
    bus_width: int | None = None


@dataclass
class InterfaceSpec:
    kinds: dict[str, tuple] = field(default_factory=dict)
    bundles: list[Bundle] = field(default_factory=list)
    bus_width: int = 32

    def bundle_of(self, param: str) -> int:
        kind = self.kinds[param]
        if kind[0] != "axi_master":
            raise InterfaceError(f"parameter {param} has no bundle")
        return kind[1]

    def bundle(self, bid: int) -> Bundle:
        for b in self.bundles:
            if b.id == bid:
                return b
        raise InterfaceError(f"no bundle {bid}")


def infer_interfaces(prog: TypedProgram, config: InterfaceConfig | None = None) -> InterfaceSpec:
    config = config or InterfaceConfig()
    top = prog.top_function
    names = [p.name for p in top.params]
    arrays = {p.name for p in top.params if isinstance(p.ty, ArrayRefType)}

    for name in list(config.bundle_pins) + [n for grp in config.shares for n in grp]:
        if name not in names:
            raise InterfaceError(
                f"interface config names unknown parameter: {name}")
        if name not in arrays:
            raise InterfaceError(
                f"scalar parameter {name} cannot map to a bundle")

    bus = config.bus_width if config.bus_width is not None else 32
    if bus not in (32, 64):
        raise InterfaceError(f"unsupported bus width {bus}")

    # group parameters that share a bundle
    group_of = {n: n for n in arrays}

    def find(n):
        while group_of[n] != n:
            group_of[n] = group_of[group_of[n]]
            n = group_of[n]
        return n

    for grp in config.shares:
        for other in grp[1:]:
            a, b = find(grp[0]), find(other)
            if a != b:
                # keep the representative that appears first in the signature
                a, b = sorted((a, b), key=names.index)
                group_of[b] = a

    groups: dict[str, list[str]] = {}
    for n in names:
        if n in arrays:
            groups.setdefault(find(n), []).append(n)

    pinned: dict[str, int] = {}
    for name, bid in config.bundle_pins.items():
        rep = find(name)
        if rep in pinned and pinned[rep] != bid:
            raise InterfaceError(
                f"shared parameters pin conflicting bundles: {name}")
        pinned[rep] = bid
    if len(set(pinned.values())) != len(pinned):
        raise InterfaceError("two parameter groups pin the same bundle id")

    spec = InterfaceSpec(bus_width=bus)
    taken = set(pinned.values())
    nxt = 0
    for rep in sorted(groups, key=names.index):
        if rep in pinned:
            bid = pinned[rep]
        else:
            while nxt in taken:
                nxt += 1
            bid = nxt
            taken.add(bid)
        spec.bundles.append(Bundle(bid, data_width=bus, params=groups[rep]))
        for n in groups[rep]:
            spec.kinds[n] = ("axi_master", bid)
    spec.bundles.sort(key=lambda b: b.id)
    for n in names:
        if n not in arrays:
            spec.kinds[n] = ("scalar_port",)
    return spec


def tag_bundles(g: Cdfg, spec: InterfaceSpec):
    """Stamp bundle ids onto the external memory objects of a lowered graph."""
    for p in g.params:
        if not hasattr(p, "mem"):
            continue
        m = g.memory(p.mem)
        if m.kind == "external":
            m.bundle = spec.bundle_of(p.name)
    return g
