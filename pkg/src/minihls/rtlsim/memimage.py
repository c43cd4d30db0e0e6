"""Sparse byte-addressed memory image: the model of one bus slave's space.

Addresses live below 2^32 and wrap; unwritten bytes read as zero. Values are
stored little-endian. Images compare equal when their nonzero contents match.
"""

from __future__ import annotations

ADDR_MASK = 0xFFFFFFFF


class MemoryImage:
    def __init__(self, init: dict[int, int] | bytes | None = None, base: int = 0):
        self._bytes: dict[int, int] = {}
        if isinstance(init, bytes):
            for i, b in enumerate(init):
                if b:
                    self._bytes[(base + i) & ADDR_MASK] = b
        elif init:
            for a, b in init.items():
                if b:
                    self._bytes[a & ADDR_MASK] = b & 0xFF

    def read_byte(self, addr: int) -> int:
        return self._bytes.get(addr & ADDR_MASK, 0)

    def write_byte(self, addr: int, value: int):
        addr &= ADDR_MASK
        value &= 0xFF
        if value:
            self._bytes[addr] = value
        else:
            self._bytes.pop(addr, None)

    def read(self, addr: int, nbytes: int) -> int:
        v = 0
        for i in range(nbytes):
            v |= self.read_byte(addr + i) << (8 * i)
        return v

    def write(self, addr: int, nbytes: int, value: int):
        for i in range(nbytes):
            self.write_byte(addr + i, (value >> (8 * i)) & 0xFF)

    def range_bytes(self, start: int, n: int) -> bytes:
        return bytes(self.read_byte(start + i) for i in range(n))

    def max_addr(self) -> int:
        return max(self._bytes) if self._bytes else 0

    def clone(self) -> "MemoryImage":
        img = MemoryImage()
        img._bytes = dict(self._bytes)
        return img

    def nonzero(self) -> dict[int, int]:
        return dict(self._bytes)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MemoryImage):
            return NotImplemented
        return self._bytes == other._bytes

    def __hash__(self):
        raise TypeError("MemoryImage is mutable and unhashable")

    def __repr__(self):
        return f"MemoryImage({len(self._bytes)} nonzero bytes)"
