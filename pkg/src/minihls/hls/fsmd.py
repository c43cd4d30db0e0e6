"""FSMD construction and memory mapping.

One compute state per (block, step). A step that issues AXI traffic grows a
request/wait prefix: request presents the access to the bundle controller,
wait loops until every controller involved reports done, and the original
state then captures data and performs the usual step-exit work, so cycle
counts stretch with slave delays but register contents never depend on
them. Blocks scheduled to zero steps are pass-throughs: their phi moves and
terminators fold into the incoming transition, with SSA substitution
standing in for the registers they never get to write.

Register writes happen on state exit edges. Within a state every register
has one source per outgoing transition, which is what lets emission build
plain enable/mux structures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import FsmdError
from ..middle.cdfg import Cdfg
from ..charlib import TargetDescriptor
from ..axi import InterfaceSpec
from .allocate import Allocation
from .schedule import Schedule
from .bind import Binding


@dataclass
class FsmState:
    id: int
    name: str
    kind: str                  # idle | step | axi_req | axi_wait | done
    block: int | None = None
    step: int | None = None


@dataclass
class RamSpec:
    mem: int
    name: str
    words: int
    width: int
    ports: int


@dataclass
class ControllerSpec:
    bundle: int
    data_width: int


@dataclass
class AxiOp:
    op_id: int
    bundle: int
    direction: str             # read | write
    width: int                 # element bits
    base_param: str            # argument register holding the byte base
    mem: int


# transition: (guard, target state, writes)
#   guard: None | ("start",) | ("cond", value, wanted) | ("axi_done", bundles)
#   write: ("set", dst value, src value) | ("ret", src value)
@dataclass
class Fsmd:
    g: Cdfg
    sched: Schedule
    alloc: Allocation
    binding: Binding
    iface: InterfaceSpec
    states: list[FsmState] = field(default_factory=list)
    idle: int = 0
    done: int = 0
    transitions: dict[int, list[tuple]] = field(default_factory=dict)
    state_of: dict[tuple[int, int], dict[str, int]] = field(default_factory=dict)
    axi_ops: dict[int, AxiOp] = field(default_factory=dict)          # op id
    axi_by_state: dict[tuple[int, int], list[int]] = field(default_factory=dict)
    rams: list[RamSpec] = field(default_factory=list)
    controllers: list[ControllerSpec] = field(default_factory=list)
    dsp_ops: list[int] = field(default_factory=list)

    def state_count(self) -> int:
        return len(self.states)

    def step_ops(self, block_id: int, step: int):
        """Ops issued in a step, in block program order."""
        b = self.g.blocks[block_id]
        return [op for op in b.body() if self.sched.op_step[op.id][0] == step]

    def avail_values(self, block_id: int, step: int):
        """(op, value) pairs whose result becomes readable in this step."""
        out = []
        for op in self.g.blocks[block_id].body():
            if op.result is None:
                continue
            s, _ = self.sched.op_step[op.id]
            if s + self.alloc.timing(op)[1] == step:
                out.append((op, op.result))
        return out

    def dump(self) -> str:
        lines = [f"fsmd {self.g.name}: states={len(self.states)}"]
        for st in self.states:
            lines.append(f"  {st.id}: {st.name} [{st.kind}]")
            for guard, target, writes in self.transitions.get(st.id, []):
                gtxt = "always" if guard is None else \
                    " ".join(str(x) for x in guard)
                wtxt = "".join(f" {w[0]}:" + ",".join(str(x) for x in w[1:])
                               for w in writes)
                lines.append(f"     -> {self.states[target].name} on {gtxt}{wtxt}")
        for r in self.rams:
            lines.append(f"  ram {r.name}: {r.words}x{r.width} ports={r.ports}")
        for c in self.controllers:
            lines.append(f"  axi controller {c.bundle}: width={c.data_width}")
        return "\n".join(lines) + "\n"


def _collect_axi(g: Cdfg, iface: InterfaceSpec) -> dict[int, AxiOp]:
    out = {}
    for b, op in g.iter_ops():
        if op.mem is None:
            continue
        m = g.memory(op.mem)
        if m.backing == "onchip_ram":
            continue
        direction = "read" if op.opcode == "load" else "write"
        out[op.id] = AxiOp(op.id, m.bundle, direction, m.elem_width,
                           m.name, m.id)
    return out


class _Builder:
    def __init__(self, g, sched, binding, alloc, iface):
        self.g = g
        self.sched = sched
        self.f = Fsmd(g, sched, alloc, binding, iface)

    def run(self) -> Fsmd:
        f = self.f
        g = self.g
        f.axi_ops = _collect_axi(g, f.iface)
        for bu in f.iface.bundles:
            f.controllers.append(ControllerSpec(bu.id, bu.data_width))

        idle = self._new_state("idle", "idle")
        f.idle = idle.id
        order = [b for b in g.block_order() if self.sched.block_steps[b.id] > 0]
        for b in order:
            for s in range(self.sched.block_steps[b.id]):
                axi_here = [op.id for op in f.step_ops(b.id, s)
                            if op.id in f.axi_ops]
                phases = {}
                if axi_here:
                    f.axi_by_state[(b.id, s)] = axi_here
                    phases["req"] = self._new_state(f"{b.name}_s{s}_req",
                                                    "axi_req", b.id, s).id
                    phases["wait"] = self._new_state(f"{b.name}_s{s}_wait",
                                                     "axi_wait", b.id, s).id
                phases["main"] = self._new_state(f"{b.name}_s{s}",
                                                 "step", b.id, s).id
                f.state_of[(b.id, s)] = phases
        done = self._new_state("done", "done")
        f.done = done.id

        target, writes = self._resolve(None, g.entry)
        f.transitions[idle.id] = [(("start",), target, writes)]

        for b in order:
            steps = self.sched.block_steps[b.id]
            for s in range(steps):
                phases = f.state_of[(b.id, s)]
                if "req" in phases:
                    f.transitions[phases["req"]] = [(None, phases["wait"], [])]
                    bundles = tuple(sorted({f.axi_ops[o].bundle
                                            for o in f.axi_by_state[(b.id, s)]}))
                    f.transitions[phases["wait"]] = [
                        (("axi_done", bundles), phases["main"], [])]
                if s + 1 < steps:
                    nxt = f.state_of[(b.id, s + 1)]
                    first = nxt.get("req", nxt["main"])
                    f.transitions[phases["main"]] = [(None, first, [])]
                else:
                    f.transitions[phases["main"]] = self._final(b)
        f.transitions[done.id] = [(None, done.id, [])]
        self._check_single_source()
        return f

    def _new_state(self, name, kind, block=None, step=None) -> FsmState:
        st = FsmState(len(self.f.states), name, kind, block, step)
        self.f.states.append(st)
        return st

    def _final(self, b) -> list[tuple]:
        t = b.term
        if t[0] == "jump":
            target, writes = self._resolve(b.id, t[1])
            return [(None, target, writes)]
        if t[0] == "ret":
            return [(None, self.f.done, [("ret", t[1])])]
        _, cond, yes, no = t
        ty, wy = self._resolve(b.id, yes)
        tn, wn = self._resolve(b.id, no)
        return [(("cond", cond, 1), ty, wy), (("cond", cond, 0), tn, wn)]

    def _resolve(self, incoming, target_block):
        """Entry state and edge writes for an edge, folding pass-throughs."""
        g = self.g
        writes: list[tuple] = []
        subst: dict[int, int] = {}
        seen = set()
        b = g.blocks[target_block]
        while True:
            fresh = {}
            if b.preds:
                pi = b.preds.index(incoming)
                for phi in b.phis():
                    arg = phi.args[pi]
                    arg = subst.get(arg, arg)
                    writes.append(("set", phi.result, arg))
                    fresh[phi.result] = arg
            subst.update(fresh)
            if self.sched.block_steps[b.id] > 0:
                phases = self.f.state_of[(b.id, 0)]
                return phases.get("req", phases["main"]), writes
            if b.id in seen:
                raise FsmdError(f"pass-through cycle at block {b.name}")
            seen.add(b.id)
            t = b.term
            if t[0] == "ret":
                v = t[1]
                writes.append(("ret", subst.get(v, v)))
                return self.f.done, writes
            if t[0] != "jump":
                raise FsmdError(f"stateless block {b.name} ends in a branch")
            incoming, b = b.id, g.blocks[t[1]]

    def _check_single_source(self):
        reg = self.f.binding.reg_of
        for sid, outs in self.f.transitions.items():
            for _guard, _target, writes in outs:
                seen: dict[tuple, int] = {}
                for w in writes:
                    if w[0] != "set" or w[1] not in reg:
                        continue
                    r = reg[w[1]]
                    src = seen.setdefault(r, w[2])
                    if src != w[2]:
                        raise FsmdError(
                            f"register r{r[0]}_{r[1]} written from two "
                            f"sources in state {self.f.states[sid].name}")


def build_fsmd(g: Cdfg, s: Schedule, b: Binding, iface: InterfaceSpec,
               alloc: Allocation | None = None) -> Fsmd:
    alloc = alloc if alloc is not None else s.alloc
    if alloc is None:
        raise FsmdError("allocation required to time the datapath")
    return _Builder(g, s, b, alloc, iface).run()


def map_memories(g: Cdfg, f: Fsmd, target: TargetDescriptor) -> Fsmd:
    f.rams = []
    access: dict[tuple[int, int, int], int] = {}
    for b in g.blocks.values():
        for op in b.body():
            if op.mem is None or g.memory(op.mem).backing != "onchip_ram":
                continue
            step = f.sched.op_step[op.id][0]
            key = (op.mem, b.id, step)
            access[key] = access.get(key, 0) + 1
    for m in g.memories:
        if m.backing != "onchip_ram":
            continue
        if m.elem_width > 64:
            raise FsmdError(
                f"array {m.name} wider than 64-bit elements is unsupported")
        worst = max([n for (mid, _b, _s), n in access.items() if mid == m.id],
                    default=0)
        if worst > 2:
            raise FsmdError(
                f"memory {m.name} needs {worst} ports in one step")
        f.rams.append(RamSpec(m.id, m.name, m.elem_count, m.elem_width,
                              min(2, target.ram_ports_per_block)))
    f.dsp_ops = sorted(oid for oid, kind in f.alloc.op_kind.items()
                       if f.alloc.records[kind].dsp > 0)
    f.mapped_target = target
    return f
