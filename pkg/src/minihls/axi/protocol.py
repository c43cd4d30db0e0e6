"""Handshake-level protocol checker.

Consumes a per-cycle signal trace for one bundle and accumulates rule
violations: payload and valid stability from assertion to handshake, single
outstanding transaction, beat counts with last-beat marking, exactly one
response per transaction, and the 4 KiB burst boundary. The co-simulation
harness runs a checker over every trace it produces, and the fault
injection tests prove each rule actually fires.
"""

from __future__ import annotations

from .plan import PAGE

# one flat record per cycle; widths follow the emitted HDL signals
TRACE_FIELDS = (
    "arvalid", "arready", "araddr", "arlen", "arsize",
    "rvalid", "rready", "rdata", "rresp", "rlast",
    "awvalid", "awready", "awaddr", "awlen", "awsize",
    "wvalid", "wready", "wdata", "wstrb", "wlast",
    "bvalid", "bready", "bresp",
)

_AR = ("araddr", "arlen", "arsize")
_AW = ("awaddr", "awlen", "awsize")
_W = ("wdata", "wstrb", "wlast")
_R = ("rdata", "rresp", "rlast")


class ProtocolChecker:
    def __init__(self, bundle: int):
        self.bundle = bundle
        self.violations: list[str] = []
        self.cycle_no = 0
        self.prev: dict | None = None
        self.read_open = False
        self.read_left = 0
        self.write_open = False
        self.w_left = 0
        self.b_due = False

    def _flag(self, msg: str):
        self.violations.append(f"bundle {self.bundle} cycle {self.cycle_no}: {msg}")

    def _stable(self, sig, valid, ready, payload, label):
        p = self.prev
        if p is None or not p[valid]:
            return
        if p[ready]:
            return
        if not sig[valid]:
            self._flag(f"{label}VALID dropped before handshake")
            return
        for f in payload:
            if sig[f] != p[f]:
                self._flag(f"{f} changed while {label}VALID waited")

    def cycle(self, sig: dict):
        self._stable(sig, "arvalid", "arready", _AR, "AR")
        self._stable(sig, "awvalid", "awready", _AW, "AW")
        self._stable(sig, "wvalid", "wready", _W, "W")
        self._stable(sig, "rvalid", "rready", _R, "R")
        self._stable(sig, "bvalid", "bready", ("bresp",), "B")

        if sig["arvalid"] and self.read_open:
            self._flag("AR asserted with a read outstanding")
        if sig["awvalid"] and self.write_open:
            self._flag("AW asserted with a write outstanding")

        if sig["arvalid"] and sig["arready"]:
            beats = sig["arlen"] + 1
            span = beats * (1 << sig["arsize"])
            if sig["araddr"] // PAGE != (sig["araddr"] + span - 1) // PAGE:
                self._flag("read burst crosses a 4 KiB boundary")
            self.read_open = True
            self.read_left = beats
        if sig["rvalid"]:
            if not self.read_open:
                self._flag("R data with no read outstanding")
            if sig["rready"]:
                self.read_left -= 1
                if sig["rlast"] != (self.read_left == 0):
                    self._flag("RLAST wrong on read beat")
                if self.read_left == 0:
                    self.read_open = False

        if sig["awvalid"] and sig["awready"]:
            beats = sig["awlen"] + 1
            span = beats * (1 << sig["awsize"])
            if sig["awaddr"] // PAGE != (sig["awaddr"] + span - 1) // PAGE:
                self._flag("write burst crosses a 4 KiB boundary")
            self.write_open = True
            self.w_left = beats
        if sig["wvalid"] and sig["wready"]:
            if not self.write_open:
                self._flag("W beat before AW accepted")
            else:
                self.w_left -= 1
                if sig["wlast"] != (self.w_left == 0):
                    self._flag("WLAST wrong on write beat")
                if self.w_left < 0:
                    self._flag("more W beats than AWLEN promised")
                if self.w_left == 0:
                    self.b_due = True
        if sig["bvalid"]:
            if not self.b_due:
                self._flag("B response with no write pending")
            if sig["bready"]:
                self.b_due = False
                self.write_open = False

        self.prev = dict(sig)
        self.cycle_no += 1

    def finish(self):
        if self.read_open:
            self._flag("read transaction never completed")
        if self.write_open or self.b_due:
            self._flag("write transaction never completed")
        return self.violations


def check_trace(trace: list[dict[int, dict]]) -> list[str]:
    """Run a checker per bundle over a whole trace; returns all violations."""
    checkers: dict[int, ProtocolChecker] = {}
    for cycle in trace:
        for bid, sig in sorted(cycle.items()):
            checkers.setdefault(bid, ProtocolChecker(bid)).cycle(sig)
    out: list[str] = []
    for bid in sorted(checkers):
        out.extend(checkers[bid].finish())
    return out
