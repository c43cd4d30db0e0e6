"""Benchmark kernel set plumbing: entry discovery, vector generator specs,
and seeded vector generation.

A corpus entry is a directory `<tag>/<name>/` holding `kernel.c`, a
`vectors.cfg` generator spec, and an `expected/` directory of frozen
golden outputs for the seed-0 vector. The spec format::

    args {
        src = mem(bytes=64, base=0x100, fill=random);
        n = range(1, 8);
        k = 3;                      # fixed scalar
    }
    outputs {
        src = 64;                   # compare this many bytes from the base
    }

Every vector drawn from the spec is a mapping in the shape cosim_equiv
consumes: scalars, arrays (name -> (base, bytes)), outputs (name -> count).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .configtext import Call, read_sections, section_map
from .errors import ConfigError, CorpusError

ADDR_LIMIT = 1 << 32


@dataclass(frozen=True)
class ScalarRange:
    lo: int
    hi: int


@dataclass(frozen=True)
class MemRegion:
    base: int
    nbytes: int
    fill: str           # random | zero


@dataclass
class VectorSpec:
    scalars: dict[str, ScalarRange] = field(default_factory=dict)
    mems: dict[str, MemRegion] = field(default_factory=dict)
    outputs: dict[str, int] = field(default_factory=dict)


@dataclass
class CorpusEntry:
    tag: str
    name: str
    path: Path
    source: str
    spec: VectorSpec


def _mem_region(call: Call, path: str, line: int) -> MemRegion:
    if call.args:
        raise ConfigError(f"{path}:{line}: mem() takes key=value arguments only")
    kw = call.kwarg_map()
    unknown = set(kw) - {"bytes", "base", "fill"}
    if unknown:
        raise ConfigError(f"{path}:{line}: unknown mem() key {sorted(unknown)[0]!r}")
    nbytes = kw.get("bytes")
    base = kw.get("base", 0)
    fill = kw.get("fill", "random")
    if not isinstance(nbytes, int) or nbytes < 1:
        raise ConfigError(f"{path}:{line}: mem() needs bytes >= 1")
    if not isinstance(base, int) or base < 0 or base + nbytes > ADDR_LIMIT:
        raise ConfigError(f"{path}:{line}: mem() region falls outside 32-bit space")
    if fill not in ("random", "zero"):
        raise ConfigError(f"{path}:{line}: mem() fill must be random or zero")
    return MemRegion(base, nbytes, fill)


def parse_vector_spec(text: str, path: str = "<vectors>") -> VectorSpec:
    secs = section_map(read_sections(text, path), {"args", "outputs"}, path)
    spec = VectorSpec()
    args = secs.get("args")
    if args is None:
        raise ConfigError(f"{path}: missing args section")
    for item in args.items:
        if item.kind != "kv":
            raise ConfigError(f"{path}:{item.line}: expected name = value")
        name, v = item.key, item.value
        if name in spec.scalars or name in spec.mems:
            raise ConfigError(f"{path}:{item.line}: duplicate argument {name}")
        if isinstance(v, Call):
            if v.fn == "mem":
                spec.mems[name] = _mem_region(v, path, item.line)
            elif v.fn == "range":
                if len(v.args) != 2 or v.kwargs or \
                        not all(isinstance(a, int) for a in v.args):
                    raise ConfigError(
                        f"{path}:{item.line}: range() takes two integers")
                lo, hi = v.args
                if lo > hi:
                    raise ConfigError(f"{path}:{item.line}: empty range [{lo}, {hi}]")
                spec.scalars[name] = ScalarRange(lo, hi)
            else:
                raise ConfigError(f"{path}:{item.line}: unknown generator {v.fn!r}")
        elif isinstance(v, int):
            spec.scalars[name] = ScalarRange(v, v)
        else:
            raise ConfigError(f"{path}:{item.line}: bad value for {name}")
    out = secs.get("outputs")
    if out is not None:
        for item in out.items:
            if item.kind != "kv" or not isinstance(item.value, int):
                raise ConfigError(f"{path}:{item.line}: expected name = byte count")
            if item.key not in spec.mems:
                raise ConfigError(
                    f"{path}:{item.line}: output {item.key!r} is not a mem argument")
            if item.value < 1:
                raise ConfigError(f"{path}:{item.line}: output count must be >= 1")
            spec.outputs[item.key] = item.value
    return spec


def generate_vectors(spec: VectorSpec, seed: int, n: int) -> list[dict]:
    """n input vectors, deterministic in (spec, seed)."""
    if n < 1:
        raise CorpusError("vector count must be >= 1")
    rng = random.Random(seed)
    vectors = []
    for _ in range(n):
        scalars = {name: rng.randint(r.lo, r.hi)
                   for name, r in spec.scalars.items()}
        arrays = {}
        for name, m in spec.mems.items():
            if m.fill == "random":
                data = rng.randbytes(m.nbytes)
            else:
                data = bytes(m.nbytes)
            arrays[name] = (m.base, data)
        vectors.append({"scalars": scalars, "arrays": arrays,
                        "outputs": dict(spec.outputs)})
    return vectors


def load_entry(path, tag: str | None = None) -> CorpusEntry:
    path = Path(path)
    kernel = path / "kernel.c"
    cfg = path / "vectors.cfg"
    if not kernel.is_file():
        raise CorpusError(f"{path}: no kernel.c")
    if not cfg.is_file():
        raise CorpusError(f"{path}: no vectors.cfg")
    spec = parse_vector_spec(cfg.read_text(), str(cfg))
    return CorpusEntry(tag or path.parent.name, path.name, path,
                       kernel.read_text(), spec)


def discover(root) -> list[CorpusEntry]:
    """All entries under root/<tag>/<name>/, sorted by (tag, name)."""
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"no corpus directory {root}")
    entries = []
    for kernel in sorted(root.glob("*/*/kernel.c")):
        entry_dir = kernel.parent
        entries.append(load_entry(entry_dir, tag=entry_dir.parent.name))
    if not entries:
        raise CorpusError(f"no corpus entries under {root}")
    entries.sort(key=lambda e: (e.tag, e.name))
    return entries
