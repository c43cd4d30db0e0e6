"""Design packaging: one object holding every emitted artifact.

build_design runs the three emitters and fixes the file layout:

    <top>.v           the synthesizable module
    <top>_tb.v        the self-checking bench
    mem_<bundle>.hex  initial slave images, one per bundle
    expected_<n>.hex  expected bytes for each checked output range
    synth_<t>.script  per-target backend script
    manifest.txt      the list above, one name per line

The manifest orders everything, so writing a design twice yields the same
bytes in the same places.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .emit import emit_verilog, mangle
from .synth import emit_synthesis_script
from .testbench import emit_testbench


@dataclass
class HdlDesign:
    top: str
    module_text: str
    testbench_text: str
    files: dict[str, str] = field(default_factory=dict)
    manifest: list[str] = field(default_factory=list)

    def all_files(self) -> dict[str, str]:
        """Every artifact keyed by file name, manifest.txt included."""
        out = {f"{self.top}.v": self.module_text,
               f"{self.top}_tb.v": self.testbench_text}
        out.update(self.files)
        out["manifest.txt"] = "".join(n + "\n" for n in self.manifest)
        return out


def build_design(f, spec, vectors, delays=None, *, targets=(),
                 fsm_encoding: str = "binary",
                 clock_ns: Decimal = Decimal("10")) -> HdlDesign:
    top = mangle(f.g.name)
    module_text = emit_verilog(f, fsm_encoding=fsm_encoding)
    tb_text, aux = emit_testbench(f, spec, vectors, delays)
    manifest = [f"{top}.v", f"{top}_tb.v"]
    manifest += sorted((n for n in aux if n.startswith("mem_")),
                       key=lambda n: int(n[4:-4]))
    manifest += sorted(n for n in aux if n.startswith("expected_"))
    for t in targets:
        name = f"synth_{mangle(t.name)}.script"
        aux[name] = emit_synthesis_script(t, [f"{top}.v"], top=top,
                                          clock_ns=clock_ns)
        manifest.append(name)
    return HdlDesign(top, module_text, tb_text, aux, manifest)


def write_design(design: HdlDesign, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in design.all_files().items():
        p = outdir / name
        p.write_text(text)
        written.append(p)
    return written
