"""Verilog emission for an elaborated FSMD.

The emitter and the cycle simulator share one static elaboration (the
compiled plan), so every operand read in the text picks the same source a
simulated cycle would read: the value wire inside its availability step, the
bound register afterwards. Combinational ops become continuous assignments.
Units that hold state are emitted as shared engines with state-indexed input
muxes: result pipelines for multi-stage ops, restoring divider engines for
div and mod, one bus controller per bundle, and dual-port synchronous RAM
templates with registered read data (read-first, so a same-step load and
store to one word keep program order).

Everything lands in a single module. The subset is deliberately small: no
tasks, no functions, no delays, synchronous reset, nonblocking writes in
clocked blocks only.
"""

from __future__ import annotations

import re

from ..errors import EmitError
from ..intops import shift_amount_mask
from ..middle.cdfg import eval_opcode
from ..rtlsim.fsmdsim import compile_fsmd

_K, _V, _R, _A = 0, 1, 2, 3
_T_COMB, _T_RAM_LOAD, _T_RAM_STORE, _T_AXI = 0, 1, 2, 3

_CMP = {"eq": "==", "ne": "!=", "lt": "<", "le": "<=", "gt": ">", "ge": ">="}


def mangle(name: str) -> str:
    """Legal HDL identifier: illegal characters become underscores and a
    leading digit gets an underscore prefix."""
    out = re.sub(r"[^A-Za-z0-9_]", "_", name)
    if out and out[0].isdigit():
        out = "_" + out
    return out or "_"


def _lit(width: int, value: int) -> str:
    return f"{width}'h{value & ((1 << width) - 1):x}"


def _ones(width: int) -> str:
    return f"{{{width}{{1'b1}}}}"


class _Emitter:
    def __init__(self, f, encoding: str):
        if encoding not in ("binary", "onehot"):
            raise EmitError(f"unknown fsm encoding: {encoding}")
        self.f = f
        self.g = f.g
        self.plan = compile_fsmd(f)
        self.encoding = encoding
        self.L: list[str] = []
        self.top = mangle(self.g.name)

        # stable per-state names
        self.sname = []
        seen: dict[str, int] = {}
        for st in f.states:
            base = "S_" + mangle(st.name).upper()
            n = seen.get(base, 0)
            seen[base] = n + 1
            self.sname.append(base if n == 0 else f"{base}_{n}")

        self.ops_by_id = {op.id: op for b in self.g.blocks.values()
                          for op in b.body()}
        self.ram_base = [f"ram{i}_{mangle(self.g.memory(mid).name)}"
                         for i, (_w, _m, mid, _ew, _aw) in
                         enumerate(self.plan.rams)]
        # bundle id -> controller index, data widths, value widths
        self.ctl_of = {b: i for i, b in enumerate(self.plan.bundle_ids)}
        self.vw = list(self.plan.ctl_widths)
        for a in f.axi_ops.values():
            i = self.ctl_of[a.bundle]
            self.vw[i] = max(self.vw[i], a.width)

    # ---- small emit helpers ------------------------------------------

    def emit(self, line: str = ""):
        self.L.append(line)

    def src(self, d, width: int) -> str:
        if d[0] == _K:
            return _lit(width, d[1])
        if d[0] == _V:
            return f"v{d[1]}"
        if d[0] == _R:
            return self.plan.reg_labels[d[1]]
        return "arg_" + mangle(self.plan.params[d[1]][0])

    def bit(self, d, width: int, idx: int) -> str:
        if d[0] == _K:
            return "1'b1" if (d[1] >> idx) & 1 else "1'b0"
        return f"{self.src(d, width)}[{idx}]"

    def op_expr(self, opcode: str, descs, widths, rw: int) -> str:
        """Combinational expression computing one op from resolved sources.

        Verilog context rules do the masking: targets are rw bits wide and
        operands zero-extend, which matches raw-pattern evaluation."""
        if all(d[0] == _K for d in descs):
            return _lit(rw, eval_opcode(opcode, [d[1] for d in descs],
                                        list(widths), rw))
        s = [self.src(d, w) for d, w in zip(descs, widths)]
        w = widths[0] if widths else rw
        if opcode in ("add", "sub", "mul"):
            return f"({s[0]} {'+' if opcode == 'add' else '-' if opcode == 'sub' else '*'} {s[1]})"
        if opcode in ("and", "or", "xor"):
            return f"({s[0]} {'&' if opcode == 'and' else '|' if opcode == 'or' else '^'} {s[1]})"
        if opcode == "not":
            return f"(~{s[0]})"
        if opcode in ("shl", "shr_u", "shr_s"):
            amask = shift_amount_mask(w)
            if descs[1][0] == _K:
                amt = str(descs[1][1] & amask)
            else:
                amt = f"({s[1]} & {_lit(widths[1], amask)})"
            if opcode == "shl":
                return f"({s[0]} << {amt})"
            if opcode == "shr_u":
                return f"({s[0]} >> {amt})"
            if rw != w:
                raise EmitError("arithmetic shift with widened result")
            sign = self.bit(descs[0], w, w - 1)
            return (f"(({s[0]} >> {amt}) | "
                    f"({sign} ? (~({_ones(w)} >> {amt})) : {_lit(w, 0)}))")
        base = opcode.split("_")[0]
        if base in _CMP:
            if opcode.endswith("_s"):
                sg = _lit(w, 1 << (w - 1))
                return f"(({s[0]} ^ {sg}) {_CMP[base]} ({s[1]} ^ {sg}))"
            return f"({s[0]} {_CMP[base]} {s[1]})"
        if opcode == "zext":
            return s[0]
        if opcode == "trunc":
            return s[0] if rw == w else f"{s[0]}[{rw - 1}:0]"
        if opcode == "sext":
            if rw == w:
                return s[0]
            rep = f"{{{rw - w}{{{s[0]}[{w - 1}]}}}}"
            return f"{{{rep}, {s[0]}}}"
        raise EmitError(f"no emission rule for opcode {opcode}")

    # ---- gather issue-site tables ------------------------------------

    def scan(self):
        f, g, plan = self.f, self.g, self.plan
        self.assigns = []          # (vid, rw, expr) in plan order
        self.ram_sites = {}        # (ram idx, port) -> list of site dicts
        self.unit_sites = {}       # (kindname, idx) -> list of site dicts
        self.unit_meta = {}        # (kindname, idx) -> (cls, width, stages, rw)
        self.axi_sites = {}        # ctl idx -> list of site dicts
        for sid, sp in enumerate(plan.states):
            for item in sp.issue:
                tag = item[0]
                if tag == _T_COMB:
                    self.scan_comb(sid, item)
                elif tag == _T_RAM_LOAD:
                    _t, ridx, vid, offd, shift, amask, count, oid = item
                    port = f.binding.port_of[oid]
                    self.ram_sites.setdefault((ridx, port), []).append(
                        dict(sid=sid, kind="r", offd=offd, shift=shift,
                             vid=vid, oid=oid))
                elif tag == _T_RAM_STORE:
                    _t, ridx, offd, shift, amask, count, vald, oid = item
                    port = f.binding.port_of[oid]
                    self.ram_sites.setdefault((ridx, port), []).append(
                        dict(sid=sid, kind="w", offd=offd, shift=shift,
                             vald=vald, oid=oid))
                else:
                    _t, cidx, direction, width, aslot, offd, vald, oid = item
                    self.axi_sites.setdefault(cidx, []).append(
                        dict(sid=sid, direction=direction, width=width,
                             aslot=aslot, offd=offd, vald=vald, oid=oid))

    def scan_comb(self, sid: int, item):
        _t, opcode, vid, descs, widths, rw, oid = item
        kind = self.f.alloc.op_kind.get(oid)
        stages = kind[2] if kind else 0
        if stages == 0 and kind and kind[0] in ("div", "mod"):
            stages = 1          # iterative engines always instance
        if stages == 0:
            self.assigns.append((vid, rw, self.op_expr(opcode, descs,
                                                       widths, rw)))
            return
        uk, idx = self.f.binding.fu_of[oid]
        name = f"{uk[0]}{uk[1]}_{idx}"
        meta = self.unit_meta.setdefault((name,), [uk[0], uk[1], uk[2], 0])
        site = dict(sid=sid, opcode=opcode, descs=descs, widths=widths,
                    rw=rw, vid=vid, oid=oid)
        meta[3] = max(meta[3], rw)
        self.unit_sites.setdefault((name,), []).append(site)

    # ---- sections ----------------------------------------------------

    def header(self):
        g, plan = self.g, self.plan
        self.emit(f"// {self.top}: generated FSMD implementation")
        self.emit(f"// states: {len(self.f.states)}  encoding: {self.encoding}")
        ports = ["input wire clk", "input wire rst", "input wire start",
                 "output reg done",
                 f"output reg [{g.ret_width - 1}:0] retval",
                 "output wire err"]
        for name, width in plan.params:
            w = width if width is not None else 32
            ports.append(f"input wire [{w - 1}:0] arg_{mangle(name)}")
        for i, b in enumerate(plan.bundle_ids):
            dw = plan.ctl_widths[i]
            p = f"m_axi_{b}_"
            ports += [
                f"output wire {p}ARVALID", f"input wire {p}ARREADY",
                f"output wire [31:0] {p}ARADDR",
                f"output wire [7:0] {p}ARLEN",
                f"output wire [2:0] {p}ARSIZE",
                f"input wire {p}RVALID", f"output wire {p}RREADY",
                f"input wire [{dw - 1}:0] {p}RDATA",
                f"input wire [1:0] {p}RRESP", f"input wire {p}RLAST",
                f"output wire {p}AWVALID", f"input wire {p}AWREADY",
                f"output wire [31:0] {p}AWADDR",
                f"output wire [7:0] {p}AWLEN",
                f"output wire [2:0] {p}AWSIZE",
                f"output wire {p}WVALID", f"input wire {p}WREADY",
                f"output wire [{dw - 1}:0] {p}WDATA",
                f"output wire [{dw // 8 - 1}:0] {p}WSTRB",
                f"output wire {p}WLAST",
                f"input wire {p}BVALID", f"output wire {p}BREADY",
                f"input wire [1:0] {p}BRESP",
            ]
        self.emit(f"module {self.top} (")
        for i, p in enumerate(ports):
            comma = "," if i + 1 < len(ports) else ""
            self.emit(f"    {p}{comma}")
        self.emit(");")
        self.emit()

    def state_decl(self):
        n = len(self.f.states)
        if self.encoding == "onehot":
            k = n
            enc = [1 << i for i in range(n)]
        else:
            k = max(1, (n - 1).bit_length())
            enc = list(range(n))
        self.k = k
        self.emit("    // FSM state")
        for i, name in enumerate(self.sname):
            self.emit(f"    localparam [{k - 1}:0] {name} = {_lit(k, enc[i])};")
        self.emit(f"    reg [{k - 1}:0] state;")
        self.emit()

    def reg_decl(self):
        if not self.plan.reg_labels:
            return
        self.emit("    // datapath registers")
        for label in self.plan.reg_labels:
            w = int(label[1:label.rindex("_")])
            self.emit(f"    reg [{w - 1}:0] {label};")
        self.emit()

    def value_wires(self):
        if not self.assigns and not any(
                s["kind"] == "r" for ss in self.ram_sites.values()
                for s in ss) and not self.unit_sites and not self.axi_sites:
            return
        self.emit("    // forwarded values, one wire per op result")
        for vid, rw, expr in self.assigns:
            self.emit(f"    wire [{rw - 1}:0] v{vid} = {expr};")
        for (ridx, port), sites in sorted(self.ram_sites.items()):
            base = self.ram_base[ridx]
            for s in sites:
                if s["kind"] == "r":
                    rw = self.g.value_width(self.ops_by_id[s["oid"]].result)
                    self.emit(f"    wire [{rw - 1}:0] v{s['vid']} = "
                              f"{base}_q{port};")
        for key in sorted(self.unit_sites):
            name = key[0]
            cls, _w, stages, urw = self.unit_meta[key]
            for s in self.unit_sites[key]:
                if cls in ("div", "mod"):
                    out = f"u_{name}_" + ("qo" if cls == "div" else "ro")
                else:
                    out = f"u_{name}_p{stages}"
                sl = "" if s["rw"] == urw else f"[{s['rw'] - 1}:0]"
                self.emit(f"    wire [{s['rw'] - 1}:0] v{s['vid']} = "
                          f"{out}{sl};")
        for cidx in sorted(self.axi_sites):
            b = self.plan.bundle_ids[cidx]
            for s in self.axi_sites[cidx]:
                if s["direction"] != "read":
                    continue
                op = self.ops_by_id[s["oid"]]
                rw = self.g.value_width(op.result)
                self.emit(f"    wire [{rw - 1}:0] v{op.result} = "
                          f"axi{b}_result[{rw - 1}:0];")
        self.emit()

    def state_mux(self, entries, width: int, default: str) -> str:
        """Right-folded conditional mux keyed on the current state."""
        expr = default
        for sid, val in reversed(entries):
            expr = f"(state == {self.sname[sid]}) ? {val} : {expr}"
        return expr

    def ram_blocks(self):
        for ridx, (words, _mask, mid, ew, aw) in enumerate(self.plan.rams):
            base = self.ram_base[ridx]
            m = self.g.memory(mid)
            padded = 1 << aw
            spec = next(r for r in self.f.rams if r.mem == mid)
            self.emit(f"    // ram block {mangle(m.name)}")
            self.emit(f"    reg [{ew - 1}:0] {base} [0:{padded - 1}];")
            # words start cleared, like the reference execution
            self.emit(f"    integer {base}_i;")
            self.emit(f"    initial begin")
            self.emit(f"        for ({base}_i = 0; {base}_i < {padded}; "
                      f"{base}_i = {base}_i + 1) {base}[{base}_i] = 0;")
            self.emit("    end")
            for port in range(spec.ports):
                sites = self.ram_sites.get((ridx, port), [])
                addr_e, en_e, we_e, d_e = [], [], [], []
                for s in sites:
                    off = self.src(s["offd"], 32)
                    a = f"({off} >> {s['shift']})" if s["shift"] else off
                    addr_e.append((s["sid"], a))
                    if s["kind"] == "r":
                        en_e.append(f"(state == {self.sname[s['sid']]})")
                    else:
                        we_e.append(f"(state == {self.sname[s['sid']]})")
                        d_e.append((s["sid"], self.src(s["vald"], ew)))
                self.emit(f"    wire [{aw - 1}:0] {base}_a{port} = "
                          + self.state_mux(addr_e, aw, _lit(aw, 0)) + ";")
                en = " | ".join(en_e) if en_e else "1'b0"
                self.emit(f"    wire {base}_en{port} = {en};")
                # out-of-range stores drop; reads hit the zero-kept padding
                we = " | ".join(we_e) if we_e else "1'b0"
                if we_e and words < padded:
                    we = f"({we}) & ({{1'b0, {base}_a{port}}} < {_lit(aw + 1, words)})"
                self.emit(f"    wire {base}_we{port} = {we};")
                self.emit(f"    wire [{ew - 1}:0] {base}_d{port} = "
                          + self.state_mux(d_e, ew, _lit(ew, 0)) + ";")
                self.emit(f"    reg [{ew - 1}:0] {base}_q{port};")
            self.emit("    always @(posedge clk) begin")
            for port in range(spec.ports):
                self.emit(f"        if ({base}_en{port}) "
                          f"{base}_q{port} <= {base}[{base}_a{port}];")
                self.emit(f"        if ({base}_we{port}) "
                          f"{base}[{base}_a{port}] <= {base}_d{port};")
            self.emit("    end")
            self.emit()

    def unit_blocks(self):
        for key in sorted(self.unit_sites):
            name = key[0]
            cls, w, stages, urw = self.unit_meta[key]
            sites = self.unit_sites[key]
            if cls in ("div", "mod"):
                self.divider(name, w, sites)
            else:
                self.pipeline(name, stages, urw, sites)

    def pipeline(self, name: str, stages: int, urw: int, sites):
        u = f"u_{name}"
        self.emit(f"    // unit {name}: {stages}-stage result pipeline")
        ins = []
        for s in sites:
            x = f"{u}_x{s['oid']}"
            self.emit(f"    wire [{s['rw'] - 1}:0] {x} = "
                      + self.op_expr(s["opcode"], s["descs"], s["widths"],
                                     s["rw"]) + ";")
            ins.append((s["sid"], x))
        self.emit(f"    wire [{urw - 1}:0] {u}_in = "
                  + self.state_mux(ins, urw, _lit(urw, 0)) + ";")
        for p in range(1, stages + 1):
            self.emit(f"    reg [{urw - 1}:0] {u}_p{p};")
        self.emit("    always @(posedge clk) begin")
        self.emit(f"        {u}_p1 <= {u}_in;")
        for p in range(2, stages + 1):
            self.emit(f"        {u}_p{p} <= {u}_p{p - 1};")
        self.emit("    end")
        self.emit()

    def divider(self, name: str, w: int, sites):
        """Restoring divider, one bit per cycle, first iteration folded into
        the operand latch so results land after exactly width cycles. A zero
        divisor keeps the restoring convention: all-ones quotient and the
        dividend as remainder."""
        u = f"u_{name}"
        cb = max(1, w.bit_length())
        a_e, b_e, sg_e, st_e = [], [], [], []
        for s in sites:
            a_e.append((s["sid"], self.src(s["descs"][0], w)))
            b_e.append((s["sid"], self.src(s["descs"][1], w)))
            sg_e.append((s["sid"],
                         "1'b1" if s["opcode"].endswith("_s") else "1'b0"))
            st_e.append(f"(state == {self.sname[s['sid']]})")
        self.emit(f"    // unit {name}: restoring divider, {w} cycles")
        self.emit(f"    wire {u}_go = " + " | ".join(st_e) + ";")
        self.emit(f"    wire [{w - 1}:0] {u}_a = "
                  + self.state_mux(a_e, w, _lit(w, 0)) + ";")
        self.emit(f"    wire [{w - 1}:0] {u}_b = "
                  + self.state_mux(b_e, w, _lit(w, 0)) + ";")
        self.emit(f"    wire {u}_sg = "
                  + self.state_mux(sg_e, 1, "1'b0") + ";")
        self.emit(f"    wire [{w - 1}:0] {u}_aa = "
                  f"({u}_sg & {u}_a[{w - 1}]) ? (~{u}_a + {_lit(w, 1)}) : {u}_a;")
        self.emit(f"    wire [{w - 1}:0] {u}_ab = "
                  f"({u}_sg & {u}_b[{w - 1}]) ? (~{u}_b + {_lit(w, 1)}) : {u}_b;")
        for r, rng in (("den", f"[{w - 1}:0]"), ("q", f"[{w - 1}:0]"),
                       ("rem", f"[{w - 1}:0]"), ("a0", f"[{w - 1}:0]"),
                       ("cnt", f"[{cb - 1}:0]")):
            self.emit(f"    reg {rng} {u}_{r};")
        self.emit(f"    reg {u}_nq;")
        self.emit(f"    reg {u}_nr;")
        self.emit(f"    reg {u}_z;")
        # shared iteration step; operands swing to the latch path on go
        self.emit(f"    wire [{w - 1}:0] {u}_cr = {u}_go ? {_lit(w, 0)} : {u}_rem;")
        self.emit(f"    wire [{w - 1}:0] {u}_cq = {u}_go ? {u}_aa : {u}_q;")
        self.emit(f"    wire [{w - 1}:0] {u}_cd = {u}_go ? {u}_ab : {u}_den;")
        self.emit(f"    wire [{w}:0] {u}_sh = {{{u}_cr, {u}_cq[{w - 1}]}};")
        self.emit(f"    wire [{w}:0] {u}_df = {u}_sh - {{1'b0, {u}_cd}};")
        self.emit(f"    wire {u}_ok = ~{u}_df[{w}];")
        self.emit(f"    wire [{w - 1}:0] {u}_nrem = {u}_ok ? "
                  f"{u}_df[{w - 1}:0] : {u}_sh[{w - 1}:0];")
        if w > 1:
            nq = f"{{{u}_cq[{w - 2}:0], {u}_ok}}"
        else:
            nq = f"{u}_ok"
        self.emit(f"    wire [{w - 1}:0] {u}_nqv = {nq};")
        self.emit("    always @(posedge clk) begin")
        self.emit(f"        if ({u}_go) begin")
        self.emit(f"            {u}_den <= {u}_ab;")
        self.emit(f"            {u}_a0 <= {u}_a;")
        self.emit(f"            {u}_z <= ({u}_b == {_lit(w, 0)});")
        self.emit(f"            {u}_nq <= {u}_sg & ({u}_a[{w - 1}] ^ {u}_b[{w - 1}]);")
        self.emit(f"            {u}_nr <= {u}_sg & {u}_a[{w - 1}];")
        self.emit(f"            {u}_rem <= {u}_nrem;")
        self.emit(f"            {u}_q <= {u}_nqv;")
        self.emit(f"            {u}_cnt <= {_lit(cb, w - 1)};")
        self.emit(f"        end else if ({u}_cnt != {_lit(cb, 0)}) begin")
        self.emit(f"            {u}_rem <= {u}_nrem;")
        self.emit(f"            {u}_q <= {u}_nqv;")
        self.emit(f"            {u}_cnt <= {u}_cnt - {_lit(cb, 1)};")
        self.emit("        end")
        self.emit("    end")
        self.emit(f"    wire [{w - 1}:0] {u}_qo = {u}_z ? {_ones(w)} : "
                  f"({u}_nq ? (~{u}_q + {_lit(w, 1)}) : {u}_q);")
        self.emit(f"    wire [{w - 1}:0] {u}_ro = {u}_z ? {u}_a0 : "
                  f"({u}_nr ? (~{u}_rem + {_lit(w, 1)}) : {u}_rem);")
        self.emit()

    def axi_controllers(self):
        for cidx, b in enumerate(self.plan.bundle_ids):
            self.controller(cidx, b)
        errs = [f"axi{b}_err" for b in self.plan.bundle_ids]
        self.emit("    assign err = " + (" | ".join(errs) if errs else "1'b0")
                  + ";")
        self.emit()

    def controller(self, cidx: int, b: int):
        dw = self.plan.ctl_widths[cidx]
        bus = dw // 8
        lb = bus.bit_length() - 1
        vw = self.vw[cidx]
        u = f"axi{b}"
        p = f"m_axi_{b}_"
        sites = self.axi_sites.get(cidx, [])
        req_e, dir_e, nb_e, szl_e, addr_e, wv_e = [], [], [], [], [], []
        for s in sites:
            base = "arg_" + mangle(self.plan.params[s["aslot"]][0])
            nb = s["width"] // 8
            req_e.append(f"(state == {self.sname[s['sid']]})")
            dir_e.append((s["sid"],
                          "1'b1" if s["direction"] == "write" else "1'b0"))
            nb_e.append((s["sid"], _lit(4, nb)))
            szl_e.append((s["sid"], _lit(3, nb.bit_length() - 1)))
            addr_e.append((s["sid"],
                           f"({base} + {self.src(s['offd'], 32)})"))
            if s["direction"] == "write":
                wv_e.append((s["sid"], self.src(s["vald"], s["width"])))
        self.emit(f"    // bus controller, bundle {b}")
        self.emit(f"    localparam [2:0] {u.upper()}_IDLE = 3'd0, "
                  f"{u.upper()}_AR = 3'd1, {u.upper()}_R = 3'd2, "
                  f"{u.upper()}_AW = 3'd3, {u.upper()}_W = 3'd4, "
                  f"{u.upper()}_B = 3'd5;")
        U = u.upper()
        self.emit(f"    wire {u}_req = "
                  + (" | ".join(req_e) if req_e else "1'b0") + ";")
        self.emit(f"    wire {u}_dir = " + self.state_mux(dir_e, 1, "1'b0") + ";")
        self.emit(f"    wire [3:0] {u}_nb = "
                  + self.state_mux(nb_e, 4, _lit(4, 0)) + ";")
        self.emit(f"    wire [2:0] {u}_szl = "
                  + self.state_mux(szl_e, 3, _lit(3, 0)) + ";")
        self.emit(f"    wire [31:0] {u}_addr = "
                  + self.state_mux(addr_e, 32, _lit(32, 0)) + ";")
        self.emit(f"    wire [{vw - 1}:0] {u}_wv = "
                  + self.state_mux(wv_e, vw, _lit(vw, 0)) + ";")
        self.emit(f"    reg [2:0] {u}_cst;")
        for r, rng in (("faddr", "[31:0]"), ("nbr", "[3:0]"),
                       ("wvr", f"[{vw - 1}:0]"), ("acc", f"[{vw - 1}:0]"),
                       ("ca", "[31:0]"), ("cl", "[8:0]"), ("cszl", "[2:0]"),
                       ("baddr", "[31:0]"), ("left", "[8:0]"),
                       ("t1a", "[31:0]"), ("t1l", "[8:0]")):
            self.emit(f"    reg {rng} {u}_{r};")
        self.emit(f"    reg {u}_t1v;")
        self.emit(f"    reg {u}_err;")
        # access plan: narrow single beat when aligned, else covering words
        # split at the 4 KiB page
        self.emit(f"    wire [31:0] {u}_p_first = {u}_addr & {_lit(32, ~(bus - 1))};")
        self.emit(f"    wire [31:0] {u}_p_lastb = {u}_addr + {{28'd0, {u}_nb}} - 32'd1;")
        self.emit(f"    wire [31:0] {u}_p_last = {u}_p_lastb & {_lit(32, ~(bus - 1))};")
        self.emit(f"    wire [31:0] {u}_p_nw = "
                  f"(({u}_p_last - {u}_p_first) >> {lb}) + 32'd1;")
        self.emit(f"    wire {u}_p_nrw = ({{28'd0, {u}_nb}} <= 32'd{bus}) & "
                  f"(({u}_addr & ({{28'd0, {u}_nb}} - 32'd1)) == 32'd0);")
        self.emit(f"    wire [31:0] {u}_p_pend = ({u}_p_first | 32'hfff) + 32'd1;")
        self.emit(f"    wire [31:0] {u}_p_w1c = ({u}_p_pend - {u}_p_first) >> {lb};")
        self.emit(f"    wire [31:0] {u}_p_w1 = "
                  f"({u}_p_nw < {u}_p_w1c) ? {u}_p_nw : {u}_p_w1c;")
        self.emit(f"    wire [31:0] {u}_p_a0 = {u}_p_nrw ? {u}_addr : {u}_p_first;")
        self.emit(f"    wire [8:0] {u}_p_l0 = {u}_p_nrw ? 9'd1 : {u}_p_w1[8:0];")
        self.emit(f"    wire [2:0] {u}_p_s0 = {u}_p_nrw ? {u}_szl : 3'd{lb};")
        self.emit(f"    wire {u}_p_t1 = (~{u}_p_nrw) & ({u}_p_w1 < {u}_p_nw);")
        # per-beat lane arithmetic, shared by reads and writes
        self.emit(f"    wire [31:0] {u}_b_wb = {u}_baddr & {_lit(32, ~(bus - 1))};")
        self.emit(f"    wire [31:0] {u}_b_end = {u}_faddr + {{28'd0, {u}_nbr}};")
        self.emit(f"    wire [31:0] {u}_b_we = {u}_b_wb + 32'd{bus};")
        self.emit(f"    wire [31:0] {u}_b_lo = "
                  f"({u}_faddr > {u}_b_wb) ? {u}_faddr : {u}_b_wb;")
        self.emit(f"    wire [31:0] {u}_b_hi = "
                  f"({u}_b_end < {u}_b_we) ? {u}_b_end : {u}_b_we;")
        self.emit(f"    wire [3:0] {u}_b_cnt = {u}_b_hi[3:0] - {u}_b_lo[3:0];")
        self.emit(f"    wire [3:0] {u}_b_ll = {u}_b_lo[3:0] - {u}_b_wb[3:0];")
        self.emit(f"    wire [3:0] {u}_b_vl = {u}_b_lo[3:0] - {u}_faddr[3:0];")
        self.emit(f"    wire [{vw - 1}:0] {u}_b_mask = "
                  f"~({_ones(vw)} << {{{u}_b_cnt, 3'b000}});")
        self.emit(f"    wire [{vw - 1}:0] {u}_b_wd = "
                  f"(({u}_wvr >> {{{u}_b_vl, 3'b000}}) & {u}_b_mask) "
                  f"<< {{{u}_b_ll, 3'b000}};")
        self.emit(f"    wire [{bus - 1}:0] {u}_b_st = "
                  f"(~({_ones(bus)} << {u}_b_cnt)) << {u}_b_ll;")
        rd = f"{{{{{vw - dw}{{1'b0}}}}, {p}RDATA}}" if vw > dw else f"{p}RDATA"
        self.emit(f"    wire [{vw - 1}:0] {u}_b_rc = "
                  f"((({rd}) >> {{{u}_b_ll, 3'b000}}) & {u}_b_mask) "
                  f"<< {{{u}_b_vl, 3'b000}};")
        self.emit(f"    wire [{vw - 1}:0] {u}_result = "
                  f"(({u}_cst == {U}_R) & {p}RVALID) ? "
                  f"({u}_acc | {u}_b_rc) : {u}_acc;")
        self.emit(f"    wire {u}_done = ({u}_cst == {U}_IDLE) | ((~{u}_t1v) & "
                  f"((({u}_cst == {U}_R) & {p}RVALID & {p}RLAST) | "
                  f"(({u}_cst == {U}_B) & {p}BVALID)));")
        self.emit("    always @(posedge clk) begin")
        self.emit("        if (rst) begin")
        self.emit(f"            {u}_cst <= {U}_IDLE;")
        self.emit(f"            {u}_err <= 1'b0;")
        self.emit(f"            {u}_t1v <= 1'b0;")
        self.emit("        end else begin")
        self.emit(f"            case ({u}_cst)")
        self.emit(f"            {U}_IDLE: if ({u}_req) begin")
        self.emit(f"                {u}_faddr <= {u}_addr;")
        self.emit(f"                {u}_nbr <= {u}_nb;")
        self.emit(f"                {u}_wvr <= {u}_wv;")
        self.emit(f"                {u}_acc <= {_lit(vw, 0)};")
        self.emit(f"                {u}_ca <= {u}_p_a0;")
        self.emit(f"                {u}_cl <= {u}_p_l0;")
        self.emit(f"                {u}_cszl <= {u}_p_s0;")
        self.emit(f"                {u}_baddr <= {u}_p_a0;")
        self.emit(f"                {u}_left <= {u}_p_l0;")
        self.emit(f"                {u}_t1v <= {u}_p_t1;")
        self.emit(f"                {u}_t1a <= {u}_p_first + ({u}_p_w1 << {lb});")
        self.emit(f"                {u}_t1l <= {u}_p_nw[8:0] - {u}_p_w1[8:0];")
        self.emit(f"                {u}_cst <= {u}_dir ? {U}_AW : {U}_AR;")
        self.emit("            end")
        self.emit(f"            {U}_AR: if ({p}ARREADY) {u}_cst <= {U}_R;")
        self.emit(f"            {U}_R: if ({p}RVALID) begin")
        self.emit(f"                {u}_acc <= {u}_acc | {u}_b_rc;")
        self.emit(f"                {u}_err <= {u}_err | ({p}RRESP != 2'd0);")
        self.emit(f"                if ({u}_left == 9'd1) begin")
        self.emit(f"                    if ({u}_t1v) begin")
        self.emit(f"                        {u}_t1v <= 1'b0;")
        self.emit(f"                        {u}_ca <= {u}_t1a;")
        self.emit(f"                        {u}_cl <= {u}_t1l;")
        self.emit(f"                        {u}_baddr <= {u}_t1a;")
        self.emit(f"                        {u}_left <= {u}_t1l;")
        self.emit(f"                        {u}_cszl <= 3'd{lb};")
        self.emit(f"                        {u}_cst <= {U}_AR;")
        self.emit(f"                    end else {u}_cst <= {U}_IDLE;")
        self.emit("                end else begin")
        self.emit(f"                    {u}_left <= {u}_left - 9'd1;")
        self.emit(f"                    {u}_baddr <= {u}_baddr + "
                  f"(32'd1 << {u}_cszl);")
        self.emit("                end")
        self.emit("            end")
        self.emit(f"            {U}_AW: if ({p}AWREADY) {u}_cst <= {U}_W;")
        self.emit(f"            {U}_W: if ({p}WREADY) begin")
        self.emit(f"                if ({u}_left == 9'd1) {u}_cst <= {U}_B;")
        self.emit("                else begin")
        self.emit(f"                    {u}_left <= {u}_left - 9'd1;")
        self.emit(f"                    {u}_baddr <= {u}_baddr + "
                  f"(32'd1 << {u}_cszl);")
        self.emit("                end")
        self.emit("            end")
        self.emit(f"            {U}_B: if ({p}BVALID) begin")
        self.emit(f"                {u}_err <= {u}_err | ({p}BRESP != 2'd0);")
        self.emit(f"                if ({u}_t1v) begin")
        self.emit(f"                    {u}_t1v <= 1'b0;")
        self.emit(f"                    {u}_ca <= {u}_t1a;")
        self.emit(f"                    {u}_cl <= {u}_t1l;")
        self.emit(f"                    {u}_baddr <= {u}_t1a;")
        self.emit(f"                    {u}_left <= {u}_t1l;")
        self.emit(f"                    {u}_cszl <= 3'd{lb};")
        self.emit(f"                    {u}_cst <= {U}_AW;")
        self.emit(f"                end else {u}_cst <= {U}_IDLE;")
        self.emit("            end")
        self.emit(f"            default: {u}_cst <= {U}_IDLE;")
        self.emit("            endcase")
        self.emit("        end")
        self.emit("    end")
        self.emit(f"    assign {p}ARVALID = ({u}_cst == {U}_AR);")
        self.emit(f"    assign {p}ARADDR = {u}_ca;")
        self.emit(f"    assign {p}ARLEN = {u}_cl[7:0] - 8'd1;")
        self.emit(f"    assign {p}ARSIZE = {u}_cszl;")
        self.emit(f"    assign {p}RREADY = ({u}_cst == {U}_R);")
        self.emit(f"    assign {p}AWVALID = ({u}_cst == {U}_AW);")
        self.emit(f"    assign {p}AWADDR = {u}_ca;")
        self.emit(f"    assign {p}AWLEN = {u}_cl[7:0] - 8'd1;")
        self.emit(f"    assign {p}AWSIZE = {u}_cszl;")
        self.emit(f"    assign {p}WVALID = ({u}_cst == {U}_W);")
        self.emit(f"    assign {p}WDATA = {u}_b_wd[{dw - 1}:0];")
        self.emit(f"    assign {p}WSTRB = {u}_b_st;")
        self.emit(f"    assign {p}WLAST = ({u}_left == 9'd1);")
        self.emit(f"    assign {p}BREADY = ({u}_cst == {U}_B);")
        self.emit()

    def fsm(self):
        f, plan = self.f, self.plan
        self.emit("    always @(posedge clk) begin")
        self.emit("        if (rst) begin")
        self.emit(f"            state <= {self.sname[f.idle]};")
        self.emit("            done <= 1'b0;")
        self.emit("        end else begin")
        self.emit("            case (state)")
        for sid, sp in enumerate(plan.states):
            self.arm(sid, sp)
        self.emit("            endcase")
        self.emit("        end")
        self.emit("    end")

    def write_stmts(self, writes, ind: str) -> list[str]:
        out = []
        for w in writes:
            if w[0] == 0:
                _k, rslot, d, label = w
                width = int(label[1:label.rindex("_")])
                out.append(f"{ind}{label} <= {self.src(d, width)};")
            else:
                out.append(f"{ind}retval <= "
                           f"{self.src(w[1], self.g.ret_width)};")
                out.append(f"{ind}done <= 1'b1;")
        return out

    def arm(self, sid: int, sp):
        f = self.f
        ind = "            "
        body: list[str] = []
        b2 = ind + "    "
        for rslot, vid, label in sp.captures:
            body.append(f"{b2}{label} <= v{vid};")
        # transitions in plan order; the first true guard wins, and an
        # unmatched cycle simply holds the state
        first = True
        for gk, gd, target, writes in sp.transitions:
            if gk == 0 and first:    # unconditional
                body += self.write_stmts(writes, b2)
                body.append(f"{b2}state <= {self.sname[target]};")
                break
            stmts = self.write_stmts(writes, b2 + "    ")
            stmts.append(f"{b2}    state <= {self.sname[target]};")
            if gk == 0:
                body.append(f"{b2}else begin")
                body += stmts
                body.append(f"{b2}end")
                break
            if gk == 1:          # start
                cond = "start"
            elif gk == 2:
                cond = f"({self.bit(gd[0], 1, 0)} == 1'b{gd[1]})"
            else:
                dones = [f"axi{self.plan.bundle_ids[i]}_done" for i in gd]
                cond = " & ".join(dones)
                # bus reads land on the draining edge
                lands = [f"{b2}    {label} <= "
                         f"axi{self.plan.bundle_ids[cidx]}_result"
                         f"[{int(label[1:label.rindex('_')]) - 1}:0];"
                         for cidx, _vid, rslot, label in sp.axi_loads
                         if rslot >= 0]
                stmts = lands + stmts
            kw = "if" if first else "else if"
            body.append(f"{b2}{kw} ({cond}) begin")
            body += stmts
            body.append(f"{b2}end")
            first = False
        name = self.sname[sid]
        if not body:
            self.emit(f"{ind}{name}: ;")
            return
        self.emit(f"{ind}{name}: begin")
        for s in body:
            self.emit(s)
        self.emit(f"{ind}end")

    def run(self) -> str:
        self.scan()
        self.header()
        self.state_decl()
        self.reg_decl()
        self.value_wires()
        self.ram_blocks()
        self.unit_blocks()
        self.axi_controllers()
        self.fsm()
        self.emit("endmodule")
        self.emit()
        return "\n".join(self.L)


def emit_verilog(f, *, fsm_encoding: str = "binary") -> str:
    """Render the FSMD as one synthesizable Verilog-subset module."""
    return _Emitter(f, fsm_encoding).run()


def emit_vhdl(f):
    raise EmitError("VHDL emission is not implemented; emit Verilog instead")
