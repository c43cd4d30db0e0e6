"""Byte-per-line hex images: lowercase, two digits, address implicit."""

from __future__ import annotations

from ..errors import EmitError


def dump_hex(data: bytes) -> str:
    return "".join(f"{b:02x}\n" for b in data)


def parse_hex(text: str) -> bytes:
    out = bytearray()
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("//")[0].strip()
        if not line:
            continue
        if len(line) != 2:
            raise EmitError(f"hex image line {ln}: expected two digits")
        try:
            out.append(int(line, 16))
        except ValueError:
            raise EmitError(f"hex image line {ln}: not hexadecimal") from None
    return bytes(out)
