"""Self-checking testbench generation.

The bench instantiates the generated module, one behavioral AXI slave per
bundle, drives reset and start, waits for done, then compares the return
value and every designated output byte range against expected images. The
slave is a line-for-line transliteration of the co-simulation slave model,
so both executions see identical bus timing for a given DelayConfig.

One vector set produces one bench. ``vectors`` is a plain dict:

    scalars        every parameter value (array parameters take their byte
                   base address), keyed by name; required
    mem            bundle id -> MemoryImage | bytes, initial slave contents
    outputs        parameter name -> expected bytes at that base address
    expected_value required return value

Slave memories are sized to the next power of two covering everything the
vector touches (floor 256 bytes, cap 64 KiB) and dumped in full so every
byte is defined, then loaded with $readmemh.
"""

from __future__ import annotations

from ..axi.plan import DelayConfig
from ..errors import EmitError
from ..rtlsim.fsmdsim import compile_fsmd
from ..rtlsim.memimage import MemoryImage
from .emit import _lit, mangle
from .hexio import dump_hex

_MIN_BYTES = 256
_MAX_BYTES = 65536
_WATCHDOG = 2_000_000


def _image(init) -> MemoryImage:
    if isinstance(init, MemoryImage):
        return init
    return MemoryImage(init)


class _Bench:
    def __init__(self, f, spec, vectors, delays):
        self.f = f
        self.spec = spec
        self.plan = compile_fsmd(f)
        self.delays = delays or DelayConfig()
        self.top = mangle(f.g.name)
        self.L: list[str] = []
        self.files: dict[str, str] = {}

        v = vectors or {}
        self.scalars = dict(v.get("scalars", {}))
        self.outputs = dict(v.get("outputs", {}))
        if "expected_value" not in v:
            raise EmitError("missing vector for the return value")
        self.expected = int(v["expected_value"])
        for name, _w in self.plan.params:
            if name not in self.scalars:
                raise EmitError(f"missing vector for parameter {name}")
        param_names = {name for name, _w in self.plan.params}
        for name in self.outputs:
            if name not in param_names:
                raise EmitError(f"output range names unknown parameter {name}")

        mem = {b: _image(img) for b, img in (v.get("mem") or {}).items()}
        self.size: dict[int, int] = {}
        self.img: dict[int, MemoryImage] = {}
        for i, b in enumerate(self.plan.bundle_ids):
            img = mem.get(b, MemoryImage())
            top_addr = img.max_addr() + 1 if img.nonzero() else 0
            for pname in self.spec.bundle(b).params:
                base = int(self.scalars[pname]) & 0xFFFFFFFF
                top_addr = max(top_addr, base)
                if pname in self.outputs:
                    top_addr = max(top_addr, base + len(self.outputs[pname]))
            size = _MIN_BYTES
            while size < top_addr + 64:
                size *= 2
            if size > _MAX_BYTES:
                raise EmitError(
                    f"bundle {b} image spans {top_addr} bytes, past the "
                    f"{_MAX_BYTES} byte bench limit")
            self.size[b] = size
            self.img[b] = img

    def emit(self, line: str = ""):
        self.L.append(line)

    def header(self):
        d = self.delays
        self.emit(f"// {self.top}_tb: self-checking bench, "
                  f"delays R={d.read} G={d.gap} W={d.write}")
        self.emit(f"module {self.top}_tb;")
        self.emit()
        self.emit("    reg clk;")
        self.emit("    reg rst;")
        self.emit("    reg start;")
        self.emit("    wire done;")
        self.emit(f"    wire [{self.f.g.ret_width - 1}:0] retval;")
        self.emit("    wire err;")
        self.emit(f"    localparam [31:0] D_READ = {_lit(32, d.read)};")
        self.emit(f"    localparam [31:0] D_GAP = {_lit(32, d.gap)};")
        self.emit(f"    localparam [31:0] D_WRITE = {_lit(32, d.write)};")
        self.emit()
        for name, width in self.plan.params:
            w = width if width is not None else 32
            val = int(self.scalars[name])
            self.emit(f"    wire [{w - 1}:0] arg_{mangle(name)} = "
                      f"{_lit(w, val)};")
        for i, b in enumerate(self.plan.bundle_ids):
            dw = self.plan.ctl_widths[i]
            p = f"m_axi_{b}_"
            self.emit()
            self.emit(f"    wire {p}ARVALID;")
            self.emit(f"    wire {p}ARREADY;")
            self.emit(f"    wire [31:0] {p}ARADDR;")
            self.emit(f"    wire [7:0] {p}ARLEN;")
            self.emit(f"    wire [2:0] {p}ARSIZE;")
            self.emit(f"    wire {p}RVALID;")
            self.emit(f"    wire {p}RREADY;")
            self.emit(f"    wire [{dw - 1}:0] {p}RDATA;")
            self.emit(f"    wire [1:0] {p}RRESP;")
            self.emit(f"    wire {p}RLAST;")
            self.emit(f"    wire {p}AWVALID;")
            self.emit(f"    wire {p}AWREADY;")
            self.emit(f"    wire [31:0] {p}AWADDR;")
            self.emit(f"    wire [7:0] {p}AWLEN;")
            self.emit(f"    wire [2:0] {p}AWSIZE;")
            self.emit(f"    wire {p}WVALID;")
            self.emit(f"    wire {p}WREADY;")
            self.emit(f"    wire [{dw - 1}:0] {p}WDATA;")
            self.emit(f"    wire [{dw // 8 - 1}:0] {p}WSTRB;")
            self.emit(f"    wire {p}WLAST;")
            self.emit(f"    wire {p}BVALID;")
            self.emit(f"    wire {p}BREADY;")
            self.emit(f"    wire [1:0] {p}BRESP;")
        self.emit()

    def dut(self):
        conns = [("clk", "clk"), ("rst", "rst"), ("start", "start"),
                 ("done", "done"), ("retval", "retval"), ("err", "err")]
        for name, _w in self.plan.params:
            a = "arg_" + mangle(name)
            conns.append((a, a))
        for b in self.plan.bundle_ids:
            p = f"m_axi_{b}_"
            for ch in ("ARVALID", "ARREADY", "ARADDR", "ARLEN", "ARSIZE",
                       "RVALID", "RREADY", "RDATA", "RRESP", "RLAST",
                       "AWVALID", "AWREADY", "AWADDR", "AWLEN", "AWSIZE",
                       "WVALID", "WREADY", "WDATA", "WSTRB", "WLAST",
                       "BVALID", "BREADY", "BRESP"):
                conns.append((p + ch, p + ch))
        self.emit(f"    {self.top} dut (")
        for i, (port, sig) in enumerate(conns):
            comma = "," if i + 1 < len(conns) else ""
            self.emit(f"        .{port}({sig}){comma}")
        self.emit("    );")
        self.emit()

    def slave(self, cidx: int, b: int):
        dw = self.plan.ctl_widths[cidx]
        bus = dw // 8
        lb = bus.bit_length() - 1
        size = self.size[b]
        mask = _lit(32, size - 1)
        s = f"slv{b}"
        p = f"m_axi_{b}_"
        self.emit(f"    // slave model, bundle {b}: {size} byte image")
        self.emit(f"    reg [7:0] {s}_mem [0:{size - 1}];")
        self.emit(f"    reg {s}_r_act;")
        self.emit(f"    reg [31:0] {s}_r_addr;")
        self.emit(f"    reg [3:0] {s}_r_size;")
        self.emit(f"    reg [8:0] {s}_r_left;")
        self.emit(f"    reg [31:0] {s}_r_timer;")
        self.emit(f"    reg {s}_w_act;")
        self.emit(f"    reg [31:0] {s}_w_addr;")
        self.emit(f"    reg [3:0] {s}_w_size;")
        self.emit(f"    reg [8:0] {s}_w_left;")
        self.emit(f"    reg [31:0] {s}_w_gap;")
        self.emit(f"    reg {s}_b_due;")
        self.emit(f"    reg [31:0] {s}_b_timer;")
        self.emit(f"    wire {s}_idle = ~({s}_r_act | {s}_w_act | {s}_b_due);")
        self.emit(f"    assign {p}ARREADY = {s}_idle;")
        self.emit(f"    assign {p}AWREADY = {s}_idle;")
        self.emit(f"    assign {p}RVALID = {s}_r_act & ({s}_r_timer == 32'd0);")
        chunk = ", ".join(
            f"{s}_mem[({s}_r_addr + 32'd{i}) & {mask}]" if i else
            f"{s}_mem[{s}_r_addr & {mask}]"
            for i in range(bus - 1, -1, -1))
        self.emit(f"    wire [{dw - 1}:0] {s}_r_word = {{{chunk}}};")
        self.emit(f"    assign {p}RDATA = ({s}_r_word & "
                  f"~({_lit(dw, (1 << dw) - 1)} << {{{s}_r_size, 3'b000}})) "
                  f"<< {{{s}_r_addr[{lb - 1}:0], 3'b000}};")
        self.emit(f"    assign {p}RRESP = 2'd0;")
        self.emit(f"    assign {p}RLAST = ({s}_r_left == 9'd1);")
        self.emit(f"    assign {p}WREADY = {s}_w_act & ({s}_w_gap == 32'd0);")
        self.emit(f"    assign {p}BVALID = {s}_b_due & ({s}_b_timer == 32'd0);")
        self.emit(f"    assign {p}BRESP = 2'd0;")
        self.emit(f"    wire [31:0] {s}_w_word = {s}_w_addr & "
                  f"{_lit(32, ~(bus - 1))};")
        self.emit(f"    wire {s}_w_fin = {s}_w_act & {p}WREADY & {p}WVALID & "
                  f"({s}_w_left == 9'd1);")
        self.emit("    always @(posedge clk) begin")
        self.emit("        if (rst) begin")
        self.emit(f"            {s}_r_act <= 1'b0;")
        self.emit(f"            {s}_w_act <= 1'b0;")
        self.emit(f"            {s}_b_due <= 1'b0;")
        self.emit("        end else begin")
        self.emit(f"            if ({p}ARVALID & {p}ARREADY) begin")
        self.emit(f"                {s}_r_act <= 1'b1;")
        self.emit(f"                {s}_r_addr <= {p}ARADDR;")
        self.emit(f"                {s}_r_size <= 4'd1 << {p}ARSIZE;")
        self.emit(f"                {s}_r_left <= {{1'b0, {p}ARLEN}} + 9'd1;")
        self.emit(f"                {s}_r_timer <= D_READ;")
        self.emit(f"            end else if ({s}_r_act) begin")
        self.emit(f"                if ({p}RVALID & {p}RREADY) begin")
        self.emit(f"                    {s}_r_left <= {s}_r_left - 9'd1;")
        self.emit(f"                    {s}_r_addr <= {s}_r_addr + "
                  f"{{28'd0, {s}_r_size}};")
        self.emit(f"                    {s}_r_timer <= D_GAP;")
        self.emit(f"                    if ({s}_r_left == 9'd1) "
                  f"{s}_r_act <= 1'b0;")
        self.emit(f"                end else if ({s}_r_timer != 32'd0) begin")
        self.emit(f"                    {s}_r_timer <= {s}_r_timer - 32'd1;")
        self.emit("                end")
        self.emit("            end")
        self.emit(f"            if ({p}AWVALID & {p}AWREADY) begin")
        self.emit(f"                {s}_w_act <= 1'b1;")
        self.emit(f"                {s}_w_addr <= {p}AWADDR;")
        self.emit(f"                {s}_w_size <= 4'd1 << {p}AWSIZE;")
        self.emit(f"                {s}_w_left <= {{1'b0, {p}AWLEN}} + 9'd1;")
        self.emit(f"                {s}_w_gap <= 32'd0;")
        self.emit(f"            end else if ({s}_w_act) begin")
        self.emit(f"                if ({p}WREADY & {p}WVALID) begin")
        for i in range(bus):
            idx = (f"({s}_w_word + 32'd{i}) & {mask}" if i
                   else f"{s}_w_word & {mask}")
            self.emit(f"                    if ({p}WSTRB[{i}]) "
                      f"{s}_mem[{idx}] <= {p}WDATA[{8 * i + 7}:{8 * i}];")
        self.emit(f"                    {s}_w_left <= {s}_w_left - 9'd1;")
        self.emit(f"                    {s}_w_addr <= {s}_w_addr + "
                  f"{{28'd0, {s}_w_size}};")
        self.emit(f"                    {s}_w_gap <= D_GAP;")
        self.emit(f"                    if ({s}_w_left == 9'd1) begin")
        self.emit(f"                        {s}_w_act <= 1'b0;")
        self.emit(f"                        {s}_b_due <= 1'b1;")
        self.emit(f"                        {s}_b_timer <= D_WRITE;")
        self.emit("                    end")
        self.emit(f"                end else if ({s}_w_gap != 32'd0) begin")
        self.emit(f"                    {s}_w_gap <= {s}_w_gap - 32'd1;")
        self.emit("                end")
        self.emit("            end")
        # the response section must see this edge's write completion, so it
        # swings to the freshly loaded timer when the last beat lands
        self.emit(f"            if (({s}_b_due | {s}_w_fin) & "
                  f"~({s}_w_act & ~{s}_w_fin)) begin")
        self.emit(f"                if ({p}BVALID & {p}BREADY) "
                  f"{s}_b_due <= 1'b0;")
        self.emit(f"                else if (({s}_w_fin ? D_WRITE : "
                  f"{s}_b_timer) != 32'd0)")
        self.emit(f"                    {s}_b_timer <= ({s}_w_fin ? D_WRITE : "
                  f"{s}_b_timer) - 32'd1;")
        self.emit("            end")
        self.emit("        end")
        self.emit("    end")
        self.emit()
        self.files[f"mem_{b}.hex"] = dump_hex(
            self.img[b].range_bytes(0, self.size[b]))

    def checker(self):
        out_names = sorted(self.outputs)
        n_states = 5 + len(out_names)
        tw = max(1, (n_states - 1).bit_length())
        names = ["T_RST", "T_GO", "T_RUN", "T_RET"]
        names += [f"T_CHK{i}" for i in range(len(out_names))]
        names.append("T_PASS")
        self.emit("    // verdict sequencer")
        self.emit(f"    reg [{tw - 1}:0] tstate;")
        self.emit("    reg [31:0] wd;")
        self.emit("    reg [31:0] ti;")
        for i, nm in enumerate(names):
            self.emit(f"    localparam [{tw - 1}:0] {nm} = {_lit(tw, i)};")
        self.emit(f"    localparam [31:0] WATCHDOG = {_lit(32, _WATCHDOG)};")
        for pname in out_names:
            data = bytes(self.outputs[pname])
            e = f"exp_{mangle(pname)}"
            self.emit(f"    reg [7:0] {e} [0:{max(len(data), 1) - 1}];")
            self.files[f"expected_{pname}.hex"] = dump_hex(
                data if data else b"\x00")
        self.emit()
        self.emit("    initial begin")
        self.emit("        clk = 1'b0;")
        self.emit("        rst = 1'b1;")
        self.emit("        start = 1'b0;")
        self.emit("        tstate = T_RST;")
        self.emit("        wd = 32'd0;")
        self.emit("        ti = 32'd0;")
        for b in self.plan.bundle_ids:
            self.emit(f'        $readmemh("mem_{b}.hex", slv{b}_mem);')
        for pname in out_names:
            self.emit(f'        $readmemh("expected_{pname}.hex", '
                      f"exp_{mangle(pname)});")
        self.emit("    end")
        self.emit("    always #5 clk = ~clk;")
        self.emit()
        self.emit("    always @(posedge clk) begin")
        self.emit("        case (tstate)")
        self.emit("        T_RST: begin")
        self.emit("            rst <= 1'b0;")
        self.emit("            start <= 1'b1;")
        self.emit("            tstate <= T_GO;")
        self.emit("        end")
        self.emit("        T_GO: begin")
        self.emit("            start <= 1'b0;")
        self.emit("            tstate <= T_RUN;")
        self.emit("        end")
        self.emit("        T_RUN: begin")
        self.emit("            if (done) tstate <= T_RET;")
        self.emit("            else if (wd == WATCHDOG) begin")
        self.emit('                $display("FAIL timeout");')
        self.emit("                $finish;")
        self.emit("            end else wd <= wd + 32'd1;")
        self.emit("        end")
        self.emit("        T_RET: begin")
        rw = self.f.g.ret_width
        self.emit(f"            if (retval != {_lit(rw, self.expected)}) "
                  "begin")
        self.emit('                $display("FAIL retval");')
        self.emit("                $finish;")
        self.emit("            end")
        self.emit(f"            tstate <= {names[4]};")
        self.emit("        end")
        for i, pname in enumerate(out_names):
            data = bytes(self.outputs[pname])
            b = self.spec.bundle_of(pname)
            base = int(self.scalars[pname]) & 0xFFFFFFFF
            mask = _lit(32, self.size[b] - 1)
            e = f"exp_{mangle(pname)}"
            nxt = names[5 + i]
            self.emit(f"        T_CHK{i}: begin")
            if data:
                self.emit(f"            if (slv{b}_mem[({_lit(32, base)} + ti)"
                          f" & {mask}] != {e}[ti]) begin")
                self.emit(f'                $display("FAIL mem {pname}");')
                self.emit("                $finish;")
                self.emit("            end")
                self.emit(f"            if (ti == {_lit(32, len(data) - 1)}) "
                          "begin")
                self.emit("                ti <= 32'd0;")
                self.emit(f"                tstate <= {nxt};")
                self.emit("            end else ti <= ti + 32'd1;")
            else:
                self.emit(f"            tstate <= {nxt};")
            self.emit("        end")
        self.emit("        T_PASS: begin")
        self.emit('            $display("PASS");')
        self.emit("            $finish;")
        self.emit("        end")
        self.emit("        endcase")
        self.emit("    end")

    def run(self):
        self.header()
        self.dut()
        for cidx, b in enumerate(self.plan.bundle_ids):
            self.slave(cidx, b)
        self.checker()
        self.emit()
        self.emit("endmodule")
        self.emit()
        return "\n".join(self.L), self.files


def emit_testbench(f, spec, vectors, delays=None):
    """Render the bench module plus its hex images.

    Returns ``(text, files)`` where files maps each image file name to its
    content: ``mem_<bundle>.hex`` per bundle and ``expected_<name>.hex``
    per checked output range.
    """
    return _Bench(f, spec, vectors, delays).run()
