"""Cycle-accurate execution of an Fsmd with behavioral AXI slave memories.

The FSMD is compiled once into flat per-state plans over slot-indexed
storage (one slot per SSA value, one per physical register), then a single
clock is stepped: every cycle computes the combinational picture of the
current state (datapath values, bus channel signals), picks the enabled
transition, and commits all effects on the edge, exactly like the emitted
RTL. On-chip RAM strobes fire on the first cycle of a step; bus reads land
in their value slot when the wait phase drains; everything else is captured
into shared registers when its step retires.

One behavioral slave per bundle serves bursts out of a byte image and
stretches handshakes by the configured delays, so cycle counts move with
memory latency while register contents never do. The per-cycle channel
trace is replayed through the protocol checker after every run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import intops
from ..errors import SimError
from ..middle.cdfg import eval_opcode
from ..axi.plan import DelayConfig, beat_wdata, merge_rdata, plan_access
from ..axi.protocol import TRACE_FIELDS, check_trace
from .memimage import MemoryImage
from .interp import interpret

DEFAULT_CYCLE_BUDGET = 10 ** 7

# argument descriptor kinds
_K = 0   # literal
_V = 1   # value slot (fresh in the producing step)
_R = 2   # shared register slot
_A = 3   # argument port

# issue item tags
_T_COMB = 0
_T_RAM_LOAD = 1
_T_RAM_STORE = 2
_T_AXI = 3

# guard kinds
_G_ALWAYS = 0
_G_START = 1
_G_COND = 2
_G_AXI = 3

_ZERO_SIG = {f: 0 for f in TRACE_FIELDS}


@dataclass
class CosimResult:
    value: int                      # return bits, zero-extended to 64
    cycles: int
    memories: dict[int, MemoryImage]
    trace: list                     # (state id, ((label, bits), ...), channels)
    error_response: bool = False


@dataclass
class EquivVerdict:
    passed: bool
    runs: int = 0
    failures: list[str] = field(default_factory=list)
    cycles: list[int] = field(default_factory=list)

    def summary(self) -> str:
        if self.passed:
            return f"PASS ({self.runs} vectors)"
        return f"FAIL ({len(self.failures)}/{self.runs} vectors): " + \
            self.failures[0]


class _StatePlan:
    __slots__ = ("kind", "issue", "captures", "axi_loads", "transitions",
                 "name")

    def __init__(self, kind, name):
        self.kind = kind        # 0 idle, 1 step, 2 req, 3 wait, 4 done
        self.name = name
        self.issue = ()
        self.captures = ()      # ((reg slot, value slot, label), ...)
        self.axi_loads = ()     # ((ctl idx, value slot, reg slot|-1, label), ...)
        self.transitions = ()   # ((guard kind, guard data, target, writes), ...)


_KIND_CODE = {"idle": 0, "step": 1, "axi_req": 2, "axi_wait": 3, "done": 4}


class _Plan:
    def __init__(self, f):
        g = f.g
        sched = f.sched
        self.n_values = max(g.values, default=0) + 1
        self.idle = f.idle
        self.done = f.done
        self.ret_mask = (1 << g.ret_width) - 1

        # argument ports, in signature order
        self.params = []            # (name, width or None for array bases)
        param_slot = {}
        scalar_slot = {}            # value id -> A index
        for p in g.params:
            param_slot[p.name] = len(self.params)
            if hasattr(p, "value"):
                scalar_slot[p.value] = len(self.params)
                self.params.append((p.name, p.width))
            else:
                self.params.append((p.name, None))

        # shared register slots
        widths = sorted(f.binding.reg_counts)
        base = {}
        at = 0
        for w in widths:
            base[w] = at
            at += f.binding.reg_counts[w]
        self.n_regs = at
        reg_slot = {v: base[w] + i for v, (w, i) in f.binding.reg_of.items()}
        self.reg_labels = [None] * at
        for w in widths:
            for i in range(f.binding.reg_counts[w]):
                self.reg_labels[base[w] + i] = f"r{w}_{i}"

        # on-chip RAM blocks
        self.rams = []       # (words, elem mask, mem id, elem width, addr width)
        ram_index = {}
        for m in g.memories:
            if m.backing == "onchip_ram":
                ram_index[m.id] = len(self.rams)
                self.rams.append((m.elem_count, (1 << m.elem_width) - 1,
                                  m.id, m.elem_width, m.addr_width))

        # one controller per interface bundle
        self.ctl_widths = []
        ctl_index = {}
        for bu in f.iface.bundles:
            ctl_index[bu.id] = len(self.ctl_widths)
            self.ctl_widths.append(bu.data_width)
        self.bundle_ids = [bu.id for bu in f.iface.bundles]

        defs = g.defining_op()
        timing = f.alloc.timing

        def desc(vid: int, block_id, step):
            if vid in g.constants:
                return (_K, g.constants[vid])
            if vid in scalar_slot:
                return (_A, scalar_slot[vid])
            d = defs.get(vid)
            if d is not None and block_id is not None and d[0] == block_id \
                    and d[1].opcode != "phi":
                op = d[1]
                if op.id in f.axi_ops:
                    avail = sched.op_step[op.id][0]
                else:
                    avail = sched.op_step[op.id][0] + timing(op)[1]
                if avail == step:
                    return (_V, vid)
            if vid in reg_slot:
                return (_R, reg_slot[vid])
            raise SimError(f"value v{vid} has no source in this state")

        # issue lists per (block, step)
        issue_of = {}
        for b in g.block_order():
            for s in range(sched.block_steps[b.id]):
                items = []
                for op in b.body():
                    if sched.op_step[op.id][0] != s:
                        continue
                    if op.id in f.axi_ops:
                        a = f.axi_ops[op.id]
                        vd = desc(op.args[1], b.id, s) \
                            if a.direction == "write" else None
                        items.append((_T_AXI, ctl_index[a.bundle],
                                      a.direction, a.width,
                                      param_slot[a.base_param],
                                      desc(op.args[0], b.id, s), vd, op.id))
                    elif op.opcode == "load":
                        m = g.memory(op.mem)
                        items.append((_T_RAM_LOAD, ram_index[op.mem],
                                      op.result, desc(op.args[0], b.id, s),
                                      (m.elem_bytes - 1).bit_length(),
                                      (1 << m.addr_width) - 1, m.elem_count,
                                      op.id))
                    elif op.opcode == "store":
                        m = g.memory(op.mem)
                        items.append((_T_RAM_STORE, ram_index[op.mem],
                                      desc(op.args[0], b.id, s),
                                      (m.elem_bytes - 1).bit_length(),
                                      (1 << m.addr_width) - 1, m.elem_count,
                                      desc(op.args[1], b.id, s), op.id))
                    else:
                        items.append((_T_COMB, op.opcode, op.result,
                                      tuple(desc(a, b.id, s)
                                            for a in op.args),
                                      tuple(g.value_width(a)
                                            for a in op.args),
                                      g.value_width(op.result), op.id))
                issue_of[(b.id, s)] = tuple(items)

        # per-state plans
        self.states = []
        for st in f.states:
            sp = _StatePlan(_KIND_CODE[st.kind], st.name)
            self.states.append(sp)
            b, s = st.block, st.step
            if st.kind == "axi_req":
                sp.issue = issue_of[(b, s)]
            elif st.kind == "step":
                if "req" not in f.state_of[(b, s)]:
                    sp.issue = issue_of[(b, s)]
                caps = []
                for op, vid in f.avail_values(b, s):
                    if op.id in f.axi_ops or vid not in reg_slot:
                        continue
                    rs = reg_slot[vid]
                    caps.append((rs, vid, self.reg_labels[rs]))
                sp.captures = tuple(caps)
            elif st.kind == "axi_wait":
                lands = []
                for oid in f.axi_by_state[(b, s)]:
                    a = f.axi_ops[oid]
                    if a.direction != "read":
                        continue
                    op = next(op for op in g.blocks[b].body() if op.id == oid)
                    rs = reg_slot.get(op.result, -1)
                    lands.append((ctl_index[a.bundle], op.result, rs,
                                  self.reg_labels[rs] if rs >= 0 else None))
                sp.axi_loads = tuple(lands)

        for st in f.states:
            sp = self.states[st.id]
            outs = []
            for guard, target, writes in f.transitions[st.id]:
                if guard is None:
                    gk, gd = _G_ALWAYS, None
                elif guard[0] == "start":
                    gk, gd = _G_START, None
                elif guard[0] == "cond":
                    gk = _G_COND
                    gd = (desc(guard[1], st.block, st.step), guard[2])
                else:
                    gk = _G_AXI
                    gd = tuple(ctl_index[bu] for bu in guard[1])
                ws = []
                for w in writes:
                    if w[0] == "set":
                        if w[1] not in reg_slot:
                            raise SimError(
                                f"edge write to unregistered value v{w[1]}")
                        rs = reg_slot[w[1]]
                        ws.append((0, rs, desc(w[2], st.block, st.step),
                                   self.reg_labels[rs]))
                    else:
                        ws.append((1, desc(w[1], st.block, st.step)))
                targets = [rs for rs, _v, _l in sp.captures]
                targets += [w[1] for w in ws if w[0] == 0]
                if len(targets) != len(set(targets)):
                    raise SimError(
                        f"conflicting register writes out of {st.name}")
                outs.append((gk, gd, target, tuple(ws)))
            sp.transitions = tuple(outs)


def compile_fsmd(f) -> _Plan:
    """Flatten an Fsmd into the table form the simulator steps; reusable
    across runs of the same design."""
    return _Plan(f)


class _Master:
    """Bus master controller for one bundle: sequential planned bursts."""

    IDLE, AR, R, AW, W, B = range(6)

    def __init__(self, bus_bits: int):
        self.bus = bus_bits // 8
        self.state = self.IDLE
        self.pend = None
        self.txns = []
        self.ti = 0
        self.cur = None
        self.beat = 0
        self.beats = []
        self.wvalue = 0
        self.acc = 0
        self.rdata = 0
        self.error = False

    def latch(self, direction: str, addr: int, width: int, wvalue):
        if self.state != self.IDLE or self.pend is not None:
            raise SimError("bundle controller busy at a new request")
        self.pend = (direction, addr & 0xFFFFFFFF, width, wvalue)

    def idle(self) -> bool:
        return self.state == self.IDLE and self.pend is None

    def outputs(self) -> dict:
        st, cur = self.state, self.cur
        if st == self.AR:
            return {"arvalid": 1, "araddr": cur.address,
                    "arlen": cur.length - 1,
                    "arsize": cur.size.bit_length() - 1}
        if st == self.R:
            return {"rready": 1}
        if st == self.AW:
            return {"awvalid": 1, "awaddr": cur.address,
                    "awlen": cur.length - 1,
                    "awsize": cur.size.bit_length() - 1}
        if st == self.W:
            return {"wvalid": 1,
                    "wdata": beat_wdata(cur, self.beat, self.wvalue),
                    "wstrb": cur.strobes[self.beat],
                    "wlast": int(self.beat == cur.length - 1)}
        if st == self.B:
            return {"bready": 1}
        return {}

    def done_now(self, m: dict, s: dict) -> bool:
        """Completion is visible combinationally on the final handshake."""
        if self.state == self.IDLE:
            return self.pend is None
        if self.ti != len(self.txns) - 1:
            return False
        if self.state == self.R:
            return bool(s["rvalid"] and s["rlast"])
        if self.state == self.B:
            return bool(s["bvalid"])
        return False

    def _next_txn(self):
        self.ti += 1
        if self.ti < len(self.txns):
            self.cur = self.txns[self.ti]
            self.state = self.AR if self.cur.direction == "read" else self.AW
            self.beat = 0
            self.beats = []
        else:
            if self.txns[0].direction == "read":
                self.rdata = self.acc
            self.state = self.IDLE

    def commit(self, m: dict, s: dict):
        if self.state == self.IDLE:
            if self.pend is not None:
                direction, addr, width, wvalue = self.pend
                self.pend = None
                self.txns = plan_access(direction, addr, width, self.bus * 8)
                self.ti = 0
                self.cur = self.txns[0]
                self.beat = 0
                self.beats = []
                self.acc = 0
                self.wvalue = wvalue or 0
                self.state = self.AR if direction == "read" else self.AW
            return
        if self.state == self.AR:
            if s["arready"]:
                self.state = self.R
        elif self.state == self.R:
            if s["rvalid"]:
                self.beats.append(s["rdata"])
                if s["rresp"]:
                    self.error = True
                self.beat += 1
                if self.beat == self.cur.length:
                    self.acc |= merge_rdata(self.cur, self.beats)
                    self._next_txn()
        elif self.state == self.AW:
            if s["awready"]:
                self.state = self.W
                self.beat = 0
        elif self.state == self.W:
            if s["wready"]:
                self.beat += 1
                if self.beat == self.cur.length:
                    self.state = self.B
        elif self.state == self.B:
            if s["bvalid"]:
                if s["bresp"]:
                    self.error = True
                self._next_txn()


class _Slave:
    """Behavioral memory slave: bursts over a byte image, delay knobs."""

    def __init__(self, image: MemoryImage, delays: DelayConfig,
                 bus_bits: int, faults=()):
        self.image = image
        self.d = delays
        self.bus = bus_bits // 8
        self.faults = tuple(faults)
        self.r_active = False
        self.r_addr = self.r_size = self.r_left = self.r_timer = 0
        self.w_active = False
        self.w_addr = self.w_size = self.w_left = self.w_gap = 0
        self.w_err = False
        self.b_due = False
        self.b_timer = 0
        self.b_resp = 0

    def idle(self) -> bool:
        return not (self.r_active or self.w_active or self.b_due)

    def _fault(self, lo: int, hi: int) -> bool:
        return any(lo < fhi and flo < hi for flo, fhi in self.faults)

    def outputs(self, m: dict) -> dict:
        out = {}
        if self.idle():
            out["arready"] = 1
            out["awready"] = 1
        if self.r_active and self.r_timer == 0:
            out["rvalid"] = 1
            out["rdata"] = self.image.read(self.r_addr, self.r_size) \
                << (8 * (self.r_addr % self.bus))
            out["rresp"] = 2 if self._fault(self.r_addr,
                                            self.r_addr + self.r_size) else 0
            out["rlast"] = int(self.r_left == 1)
        if self.w_active and self.w_gap == 0:
            out["wready"] = 1
        if self.b_due and self.b_timer == 0:
            out["bvalid"] = 1
            out["bresp"] = self.b_resp
        return out

    def commit(self, m: dict, o: dict):
        if m["arvalid"] and o.get("arready"):
            self.r_active = True
            self.r_addr = m["araddr"]
            self.r_size = 1 << m["arsize"]
            self.r_left = m["arlen"] + 1
            self.r_timer = self.d.read
        elif self.r_active:
            if o.get("rvalid") and m["rready"]:
                self.r_left -= 1
                self.r_addr += self.r_size
                self.r_timer = self.d.gap
                if self.r_left == 0:
                    self.r_active = False
            elif self.r_timer > 0:
                self.r_timer -= 1
        if m["awvalid"] and o.get("awready"):
            self.w_active = True
            self.w_addr = m["awaddr"]
            self.w_size = 1 << m["awsize"]
            self.w_left = m["awlen"] + 1
            self.w_gap = 0
            self.w_err = False
        elif self.w_active:
            if o.get("wready") and m["wvalid"]:
                word = self.w_addr - self.w_addr % self.bus
                strb = m["wstrb"]
                data = m["wdata"]
                for i in range(self.bus):
                    if strb >> i & 1:
                        self.image.write_byte(word + i, data >> (8 * i))
                if self._fault(self.w_addr, self.w_addr + self.w_size):
                    self.w_err = True
                self.w_left -= 1
                self.w_addr += self.w_size
                self.w_gap = self.d.gap
                if self.w_left == 0:
                    self.w_active = False
                    self.b_due = True
                    self.b_timer = self.d.write
                    self.b_resp = 2 if self.w_err else 0
            elif self.w_gap > 0:
                self.w_gap -= 1
        if self.b_due and not self.w_active:
            if o.get("bvalid") and m["bready"]:
                self.b_due = False
            elif self.b_timer > 0:
                self.b_timer -= 1


def run_cosim(f, spec, scalars: dict, mem: dict | None = None,
              delays: DelayConfig | None = None, *,
              cycle_budget: int = DEFAULT_CYCLE_BUDGET,
              faults: dict | None = None, check: bool = True,
              plan: _Plan | None = None) -> CosimResult:
    """Clock the FSMD until done; returns value, cycle count, memories, trace.

    scalars maps every parameter name to its value; array parameters take
    their byte base address. mem maps bundle id to the initial MemoryImage
    of that bus (missing bundles start zero-filled); images are cloned, the
    finals are returned in the result.
    """
    plan = plan if plan is not None else compile_fsmd(f)
    delays = delays or DelayConfig()
    mem = mem or {}
    faults = faults or {}

    V = [0] * plan.n_values
    R = [0] * plan.n_regs
    A = []
    for name, width in plan.params:
        if name not in scalars:
            raise SimError(f"missing argument: {name}")
        A.append(intops.bits_of(int(scalars[name]),
                                width if width is not None else 32))
    rams = [[0] * r[0] for r in plan.rams]
    ctls = [_Master(w) for w in plan.ctl_widths]
    slaves = [_Slave(mem.get(b, MemoryImage()).clone(), delays, w,
                     faults.get(b, ()))
              for b, w in zip(plan.bundle_ids, plan.ctl_widths)]
    images = {b: s.image for b, s in zip(plan.bundle_ids, slaves)}

    idle_chans = {b: _ZERO_SIG for b in plan.bundle_ids}
    n_ctl = len(ctls)
    dflags = [True] * n_ctl
    m_outs = [None] * n_ctl
    s_outs = [None] * n_ctl

    def read(d):
        k, x = d
        if k == _K:
            return x
        if k == _V:
            return V[x]
        if k == _R:
            return R[x]
        return A[x]

    trace = []
    state = plan.idle
    cycles = 0
    ret = 0

    while True:
        if cycles >= cycle_budget:
            raise SimError(f"cycle budget exceeded ({cycle_budget} cycles)")
        sp = plan.states[state]
        if sp.kind == 4:
            trace.append((state, (), idle_chans))
            cycles += 1
            break

        # combinational bus picture
        chans = idle_chans
        any_active = False
        for i in range(n_ctl):
            c = ctls[i]
            if c.idle() and slaves[i].idle():
                dflags[i] = True
                m_outs[i] = None
                continue
            if not any_active:
                chans = dict(idle_chans)
                any_active = True
            m = c.outputs()
            s = slaves[i].outputs(m)
            sig = dict(_ZERO_SIG)
            sig.update(m)
            sig.update(s)
            chans[plan.bundle_ids[i]] = sig
            m_outs[i] = sig
            s_outs[i] = sig
            dflags[i] = c.done_now(sig, sig)

        # issue the step's operations (first cycle of the step only)
        for item in sp.issue:
            tag = item[0]
            if tag == _T_COMB:
                _t, opcode, vslot, argds, argws, rw, _oid = item
                V[vslot] = eval_opcode(opcode, [read(d) for d in argds],
                                       list(argws), rw)
            elif tag == _T_RAM_LOAD:
                _t, ridx, vslot, offd, shift, amask, count, _oid = item
                w = ((read(offd) & 0xFFFFFFFF) >> shift) & amask
                V[vslot] = rams[ridx][w] if w < count else 0
            elif tag == _T_RAM_STORE:
                _t, ridx, offd, shift, amask, count, vald, _oid = item
                w = ((read(offd) & 0xFFFFFFFF) >> shift) & amask
                if w < count:
                    rams[ridx][w] = read(vald)
            else:
                _t, cidx, direction, width, aslot, offd, vald, _oid = item
                addr = (A[aslot] + read(offd)) & 0xFFFFFFFF
                ctls[cidx].latch(direction, addr, width,
                                 read(vald) if vald is not None else None)

        # pick the transition
        taken = None
        for tr in sp.transitions:
            gk, gd = tr[0], tr[1]
            if gk == _G_ALWAYS or gk == _G_START:
                taken = tr
                break
            if gk == _G_COND:
                if (read(gd[0]) & 1) == gd[1]:
                    taken = tr
                    break
            elif all(dflags[i] for i in gd):
                taken = tr
                break

        # clock edge
        for i in range(n_ctl):
            c = ctls[i]
            if m_outs[i] is not None:
                c.commit(m_outs[i], s_outs[i])
                slaves[i].commit(m_outs[i], s_outs[i])
            elif c.pend is not None:
                c.commit({}, {})

        wlog = []
        if taken is not None:
            if sp.kind == 3:        # wait drained: bus reads land
                for cidx, vslot, rslot, label in sp.axi_loads:
                    V[vslot] = ctls[cidx].rdata
                    if rslot >= 0:
                        R[rslot] = V[vslot]
                        wlog.append((label, V[vslot]))
            pend = []
            if sp.kind == 1:
                for rslot, vslot, label in sp.captures:
                    pend.append((rslot, V[vslot], label))
            for w in taken[3]:
                if w[0] == 0:
                    pend.append((w[1], read(w[2]), w[3]))
                else:
                    ret = read(w[1]) & plan.ret_mask
                    wlog.append(("ret", ret))
            for rslot, bits, label in pend:
                R[rslot] = bits
                wlog.append((label, bits))

        trace.append((state, tuple(wlog), chans))
        if taken is not None:
            state = taken[2]
        cycles += 1

    if check and plan.bundle_ids:
        bad = check_trace([row[2] for row in trace])
        if bad:
            raise SimError("AXI protocol assertion failure: " + bad[0])

    return CosimResult(value=ret, cycles=cycles, memories=images,
                       trace=trace,
                       error_response=any(c.error for c in ctls))


def format_trace(f, result: CosimResult) -> str:
    """One line per cycle: index, state, register writes, bus activity."""
    lines = []
    for n, (sid, writes, chans) in enumerate(result.trace):
        parts = [f"{n} {f.states[sid].name}"]
        for label, bits in writes:
            parts.append(f"{label}={bits:x}")
        for b in sorted(chans):
            sig = chans[b]
            if sig is _ZERO_SIG:
                continue
            live = " ".join(f"{k}={sig[k]:x}" for k in TRACE_FIELDS if sig[k])
            if live:
                parts.append(f"b{b}[{live}]")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def cosim_equiv(prog, f, spec, vectors, delays: DelayConfig | None = None, *,
                cycle_budget: int = DEFAULT_CYCLE_BUDGET) -> EquivVerdict:
    """PASS iff the interpreter and the cycle simulation agree on the return
    value and on every designated output byte range, for every vector.

    Each vector is a mapping with keys: "scalars" (name -> int), "arrays"
    (name -> (base address, initial bytes)), "outputs" (name -> byte count
    compared from the array's base).
    """
    g = f.g
    plan = compile_fsmd(f)
    array_bundle = {}
    for m in g.memories:
        if m.backing != "onchip_ram":
            array_bundle[m.name] = m.bundle
    verdict = EquivVerdict(passed=True)
    for idx, vec in enumerate(vectors):
        scalars = dict(vec.get("scalars", {}))
        arrays = vec.get("arrays", {})
        outputs = vec.get("outputs", {})

        ref_img = {}
        run_img = {}
        for name, (base, data) in arrays.items():
            bid = array_bundle[name]
            for img in (ref_img.setdefault(bid, MemoryImage()),
                        run_img.setdefault(bid, MemoryImage())):
                for i, byte in enumerate(bytes(data)):
                    img.write_byte(base + i, byte)

        args = dict(scalars)
        ports = dict(scalars)
        for name, (base, _data) in arrays.items():
            args[name] = (ref_img[array_bundle[name]], base)
            ports[name] = base

        ref = interpret(prog, args)
        res = run_cosim(f, spec, ports, run_img, delays,
                        cycle_budget=cycle_budget, plan=plan)
        verdict.runs += 1
        verdict.cycles.append(res.cycles)

        problems = []
        if res.value != ref.value_bits:
            problems.append(f"return {res.value:#x} != {ref.value_bits:#x}")
        for name, nbytes in outputs.items():
            bid = array_bundle[name]
            base = arrays[name][0]
            want = ref_img[bid].range_bytes(base, nbytes)
            got = res.memories[bid].range_bytes(base, nbytes)
            if want != got:
                at = next(i for i in range(nbytes) if want[i] != got[i])
                problems.append(
                    f"{name}[{at}]: byte {got[at]:#04x} != {want[at]:#04x}")
        if problems:
            verdict.passed = False
            verdict.failures.append(f"vector {idx}: " + "; ".join(problems))
    return verdict
