"""Transaction-level access planning.

Turns one datapath load/store of 8..64 bits at an arbitrary byte address
into AXI transactions: a single narrow beat when the access is naturally
aligned, otherwise an incrementing burst of full-width beats whose byte
lanes cover exactly the addressed bytes (strobes carry partial writes, so
the slave never read-modify-writes). Bursts are split so none crosses a
4 KiB boundary. The same lane arithmetic drives the simulator, the emitted
controller and the testbench, so it is the single source of byte-exactness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

PAGE = 4096


@dataclass(frozen=True)
class DelayConfig:
    """Slave timing knobs, in cycles.

    read:  stall before the first read data beat of a burst
    gap:   extra idle cycles the slave inserts between consecutive beats
    write: stall before the write response
    """
    read: int = 0
    gap: int = 0
    write: int = 0

    def __post_init__(self):
        if min(self.read, self.gap, self.write) < 0:
            raise ValueError("delay cycles must be non-negative")

    def as_tuple(self):
        return (self.read, self.gap, self.write)

    @classmethod
    def parse(cls, text: str) -> "DelayConfig":
        """Parse the command-line form ``R,G,W``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"expected R,G,W delay triple, got {text!r}")
        r, g, w = (int(p) for p in parts)
        return cls(read=r, gap=g, write=w)


@dataclass
class AxiTransaction:
    direction: str                 # "read" | "write"
    address: int                   # issued on AR/AW, aligned to size
    size: int                      # bytes per beat
    length: int                    # beats
    # per beat: (byte lane within the bus word, byte offset within the value,
    # number of bytes carried)
    lanes: list[tuple[int, int, int]] = field(default_factory=list)
    strobes: list[int] = field(default_factory=list)   # writes only
    resp: str = "OKAY"
    data: list[int] = field(default_factory=list)      # filled by the slave/master

    def beat_address(self, i: int) -> int:
        return self.address + i * self.size

    def crosses_page(self) -> bool:
        first = self.address // PAGE
        last = (self.address + self.size * self.length - 1) // PAGE
        return first != last


def plan_access(direction: str, addr: int, width_bits: int,
                bus_width: int = 32) -> list[AxiTransaction]:
    n = width_bits // 8
    bus = bus_width // 8
    if n <= bus and addr % n == 0:
        lane = addr % bus
        txn = AxiTransaction(direction, addr, n, 1, lanes=[(lane, 0, n)])
        if direction == "write":
            txn.strobes = [((1 << n) - 1) << lane]
        return [txn]

    first = addr - addr % bus
    last = (addr + n - 1) - (addr + n - 1) % bus
    words = list(range(first, last + bus, bus))
    txns = []
    cur: list[int] = []
    for w in words:
        if cur and (cur[0] // PAGE) != (w + bus - 1) // PAGE:
            txns.append(_burst(direction, cur, addr, n, bus))
            cur = []
        cur.append(w)
    if cur:
        txns.append(_burst(direction, cur, addr, n, bus))
    return txns


def _burst(direction: str, words: list[int], addr: int, n: int, bus: int) -> AxiTransaction:
    txn = AxiTransaction(direction, words[0], bus, len(words))
    for w in words:
        lo = max(addr, w)
        hi = min(addr + n, w + bus)
        lane_lo = lo - w
        txn.lanes.append((lane_lo, lo - addr, hi - lo))
        if direction == "write":
            txn.strobes.append(((1 << (hi - lo)) - 1) << lane_lo)
    return txn


def beat_wdata(txn: AxiTransaction, beat: int, value: int) -> int:
    """Bus word carrying the value bytes for one write beat (other lanes 0)."""
    lane_lo, val_lo, count = txn.lanes[beat]
    chunk = (value >> (8 * val_lo)) & ((1 << (8 * count)) - 1)
    return chunk << (8 * lane_lo)


def merge_rdata(txn: AxiTransaction, beats: list[int]) -> int:
    """Assemble the value bits delivered by the beats of one read burst."""
    out = 0
    for i, (lane_lo, val_lo, count) in enumerate(txn.lanes):
        chunk = (beats[i] >> (8 * lane_lo)) & ((1 << (8 * count)) - 1)
        out |= chunk << (8 * val_lo)
    return out
