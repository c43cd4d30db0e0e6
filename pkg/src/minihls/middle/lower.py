"""Lower the typed AST to an SSA CDFG.

SSA is built directly (Braun et al. style): variable versions are tracked
per block, phis are created on demand at joins, loop headers stay unsealed
until their latch edge exists, and trivial phis are removed as they are
discovered. Calls are inlined exhaustively (recursion is rejected earlier),
each instance getting a fresh variable frame and fresh local memories.

Multiplies wider than the DSP native width are decomposed schoolbook-style
into native-width chunk products combined with shifts and adds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..frontend import nodes as ast
from .cdfg import Cdfg, Block, Op, MemObject, ScalarParam, ArrayParam, CdfgError

DEFAULT_OP_BUDGET = 20000

_BIN_OPCODE = {
    "+": "add", "-": "sub", "*": "mul",
    "&": "and", "|": "or", "^": "xor", "<<": "shl",
    "==": "eq", "!=": "ne",
}
_SIGNED_PICK = {
    "/": ("div_s", "div_u"), "%": ("mod_s", "mod_u"), ">>": ("shr_s", "shr_u"),
    "<": ("lt_s", "lt_u"), "<=": ("le_s", "le_u"),
    ">": ("gt_s", "gt_u"), ">=": ("ge_s", "ge_u"),
}


@dataclass
class _Frame:
    id: int
    fn: ast.FunctionDef
    mems: dict[str, int] = field(default_factory=dict)   # array name -> mem id
    cont: Block | None = None        # return continuation; None in the top frame

    def key(self, var: str) -> tuple[int, str]:
        return (self.id, var)


class _Builder:
    def __init__(self, prog: ast.TypedProgram, native_mul_width: int, op_budget: int):
        self.prog = prog
        self.native = native_mul_width
        self.budget = op_budget
        top = prog.top_function
        self.g = Cdfg(top.name, top.ret.width)
        self.cur: Block | None = None
        self.sealed: set[int] = set()
        self.defs: dict[tuple[tuple[int, str], int], int] = {}
        self.incomplete: dict[int, dict[tuple[int, str], Op]] = {}
        self.uses: dict[int, list[Op]] = {}
        self.term_uses: dict[int, list[int]] = {}
        self.replaced: dict[int, int] = {}
        self.op_block: dict[int, Block] = {}
        self.pos: tuple | None = None
        self._next_frame = 0

    # ---- value plumbing -----------------------------------------------------

    def resolve(self, v: int) -> int:
        while v in self.replaced:
            v = self.replaced[v]
        return v

    def emit(self, opcode: str, result_width: int | None, args: list[int],
             mem: int | None = None, name: str | None = None) -> int | None:
        args = [self.resolve(a) for a in args]
        res = self.g.new_value(result_width, name) if result_width is not None else None
        op = self.g.new_op(self.cur, opcode, res, args, mem, pos=self.pos)
        self.op_block[op.id] = self.cur
        for a in args:
            self.uses.setdefault(a, []).append(op)
        if self.g._next_op > self.budget:
            raise CdfgError(
                f"program too large after inlining: more than {self.budget} ops")
        return res

    def const(self, width: int, bits: int) -> int:
        return self.g.new_const(width, bits)

    # ---- blocks and edges ---------------------------------------------------

    def new_block(self, name: str) -> Block:
        return self.g.new_block(name)

    def add_edge(self, src: Block, dst: Block):
        dst.preds.append(src.id)

    def terminate(self, term: tuple):
        assert self.cur is not None and not self.cur.term
        term = tuple(
            self.resolve(t) if i == 1 and term[0] in ("br", "ret") else t
            for i, t in enumerate(term))
        self.cur.term = term
        if term[0] in ("br", "ret"):
            self.term_uses.setdefault(term[1], []).append(self.cur.id)
        self.cur = None

    def jump_to(self, dst: Block):
        self.add_edge(self.cur, dst)
        self.terminate(("jump", dst.id))

    def seal(self, block: Block):
        for key, phi in self.incomplete.pop(block.id, {}).items():
            self._fill_phi(key, phi, block)
        self.sealed.add(block.id)

    # ---- SSA variable access --------------------------------------------------

    def write_var(self, key: tuple[int, str], value: int):
        self.defs[(key, self.cur.id)] = self.resolve(value)

    def read_var(self, key: tuple[int, str], block: Block, width: int) -> int:
        got = self.defs.get((key, block.id))
        if got is not None:
            return self.resolve(got)
        if block.id not in self.sealed:
            phi = self._new_phi(block, width)
            self.incomplete.setdefault(block.id, {})[key] = phi
            val = phi.result
        elif len(block.preds) == 1:
            val = self.read_var(key, self.g.blocks[block.preds[0]], width)
        elif not block.preds:
            val = self.const(width, 0)
        else:
            phi = self._new_phi(block, width)
            self.defs[(key, block.id)] = phi.result
            val = self._fill_phi(key, phi, block)
        self.defs[(key, block.id)] = val
        return val

    def _new_phi(self, block: Block, width: int) -> Op:
        res = self.g.new_value(width)
        op = self.g.new_op(block, "phi", res, [], at_front=True)
        self.op_block[op.id] = block
        return op

    def _fill_phi(self, key, phi: Op, block: Block) -> int:
        width = self.g.value_width(phi.result)
        for p in block.preds:
            a = self.read_var(key, self.g.blocks[p], width)
            phi.args.append(a)
            self.uses.setdefault(a, []).append(phi)
        return self._try_remove_trivial(phi)

    def _try_remove_trivial(self, phi: Op) -> int:
        same = None
        for a in phi.args:
            a = self.resolve(a)
            if a == phi.result or a == same:
                continue
            if same is not None:
                return phi.result
            same = a
        if same is None:
            same = self.const(self.g.value_width(phi.result), 0)
        users = [u for u in self.uses.get(phi.result, []) if u.id != phi.id]
        self.replaced[phi.result] = same
        block = self.op_block[phi.id]
        block.ops.remove(phi)
        for u in users:
            u.args = [self.resolve(x) for x in u.args]
            self.uses.setdefault(same, []).append(u)
        for bid in self.term_uses.pop(phi.result, []):
            b = self.g.blocks[bid]
            b.term = tuple(same if t == phi.result else t for t in b.term)
            self.term_uses.setdefault(same, []).append(bid)
        for u in users:
            if u.opcode == "phi" and u.result not in self.replaced:
                self._try_remove_trivial(u)
        return same

    # ---- program lowering -----------------------------------------------------

    def run(self) -> Cdfg:
        top = self.prog.top_function
        frame = _Frame(self._next_frame, top)
        self._next_frame += 1
        entry = self.new_block("entry")
        self.g.entry = entry.id
        self.seal(entry)
        self.cur = entry
        for p in top.params:
            if isinstance(p.ty, (ast.ArrayRefType,)):
                m = self.g.add_memory(p.name, "external", p.ty.elem.width,
                                      None, "axi")
                self.g.params.append(ArrayParam(p.name, m.id))
                frame.mems[p.name] = m.id
            else:
                v = self.g.new_value(p.ty.width, p.name)
                self.g.params.append(ScalarParam(p.name, v, p.ty.width))
                self.write_var(frame.key(p.name), v)
        self.lower_block(top.body, frame)
        if self.cur is not None:
            self.terminate(("ret", self.const(top.ret.width, 0)))
        self._remove_unreachable()
        self._decompose_wide_muls()
        self._prune_values()
        self.g.validate()
        return self.g

    def lower_block(self, blk: ast.Block, frame: _Frame):
        for s in blk.stmts:
            if self.cur is None:
                break
            self.lower_stmt(s, frame)

    def lower_stmt(self, s, frame: _Frame):
        if getattr(s, "pos", None) is not None:
            self.pos = (s.pos.line, s.pos.col)
        if isinstance(s, ast.Block):
            self.lower_block(s, frame)
        elif isinstance(s, ast.VarDecl):
            self.lower_decl(s, frame)
        elif isinstance(s, ast.Assign):
            val = self.lower_expr(s.value, frame)
            if isinstance(s.target, ast.Index):
                off, mem = self.element_offset(s.target, frame)
                self.emit("store", None, [off, val], mem=mem)
            else:
                self.write_var(frame.key(s.target.ident), val)
        elif isinstance(s, ast.ExprStmt):
            self.lower_expr(s.expr, frame)
        elif isinstance(s, ast.Return):
            v = self.lower_expr(s.value, frame)
            if frame.cont is None:
                self.terminate(("ret", v))
            else:
                self.write_var(frame.key("$ret"), v)
                self.jump_to(frame.cont)
        elif isinstance(s, ast.If):
            self.lower_if(s, frame)
        elif isinstance(s, ast.While):
            self.lower_loop(None, s.cond, None, s.body, frame)
        elif isinstance(s, ast.For):
            self.lower_loop(s.init, s.cond, s.step, s.body, frame)
        else:
            raise CdfgError(f"cannot lower statement {type(s).__name__}")

    def lower_decl(self, s: ast.VarDecl, frame: _Frame):
        ty = s.declared
        if isinstance(ty, ast.ArrayType):
            qual = s.name if frame.id == 0 else f"{frame.fn.name}${frame.id}.{s.name}"
            m = self.g.add_memory(qual, "local_array", ty.elem.width,
                                  ty.count, "onchip_ram")
            frame.mems[s.name] = m.id
            if s.const_init is not None:
                esz = ty.elem.width // 8
                for i, bits in enumerate(s.const_init):
                    off = self.const(32, (i * esz) & 0xFFFFFFFF)
                    self.emit("store", None,
                              [off, self.const(ty.elem.width, bits)], mem=m.id)
        else:
            if s.init is not None:
                v = self.lower_expr(s.init, frame)
            else:
                v = self.const(ty.width, 0)
            self.write_var(frame.key(s.name), v)

    def lower_if(self, s: ast.If, frame: _Frame):
        cond = self.lower_expr(s.cond, frame)
        then_b = self.new_block("if.then")
        else_b = self.new_block("if.else") if s.els is not None else None
        merge = self.new_block("if.end")
        src = self.cur
        self.add_edge(src, then_b)
        self.add_edge(src, else_b if else_b is not None else merge)
        self.terminate(("br", cond, then_b.id,
                        (else_b if else_b is not None else merge).id))
        self.seal(then_b)
        if else_b is not None:
            self.seal(else_b)
        self.cur = then_b
        self.lower_block(s.then, frame)
        if self.cur is not None:
            self.jump_to(merge)
        if else_b is not None:
            self.cur = else_b
            self.lower_block(s.els, frame)
            if self.cur is not None:
                self.jump_to(merge)
        if merge.preds:
            self.seal(merge)
            self.cur = merge
        else:
            del self.g.blocks[merge.id]
            self.cur = None

    def lower_loop(self, init, cond, step, body: ast.Block, frame: _Frame):
        if init is not None:
            self.lower_stmt(init, frame)
            if self.cur is None:
                return
        header = self.new_block("loop.head")
        body_b = self.new_block("loop.body")
        exit_b = self.new_block("loop.exit")
        self.jump_to(header)
        self.cur = header
        condv = (self.lower_expr(cond, frame) if cond is not None
                 else self.const(1, 1))
        self.add_edge(header, body_b)
        self.add_edge(header, exit_b)
        self.terminate(("br", condv, body_b.id, exit_b.id))
        self.seal(body_b)
        self.seal(exit_b)
        self.cur = body_b
        self.lower_block(body, frame)
        if self.cur is not None and step is not None:
            self.lower_stmt(step, frame)
        if self.cur is not None:
            self.jump_to(header)
        self.seal(header)
        self.cur = exit_b

    # ---- expressions -----------------------------------------------------------

    def lower_expr(self, e, frame: _Frame) -> int:
        if isinstance(e, ast.IntLit):
            return self.const(e.ty.width, e.value & ((1 << e.ty.width) - 1))
        if isinstance(e, ast.BoolLit):
            return self.const(1, 1 if e.value else 0)
        if isinstance(e, ast.Name):
            return self.read_var(frame.key(e.ident), self.cur, e.ty.width)
        if isinstance(e, ast.Convert):
            src = self.lower_expr(e.operand, frame)
            sw, dw = e.operand.ty.width, e.ty.width
            if e.kind == "tobool":
                return self.emit("ne", 1, [src, self.const(sw, 0)])
            if sw == dw:
                return src
            if e.kind == "trunc":
                return self.emit("trunc", dw, [src])
            return self.emit(e.kind, dw, [src])
        if isinstance(e, ast.Unary):
            v = self.lower_expr(e.operand, frame)
            w = e.ty.width
            if e.op == "-":
                return self.emit("sub", w, [self.const(w, 0), v])
            if e.op == "~":
                return self.emit("not", w, [v])
            if e.op == "!":
                return self.emit("xor", 1, [v, self.const(1, 1)])
            return v   # unary +
        if isinstance(e, ast.Binary):
            a = self.lower_expr(e.left, frame)
            b = self.lower_expr(e.right, frame)
            if e.op in ("&&", "||"):
                return self.emit("and" if e.op == "&&" else "or", 1, [a, b])
            if e.op in _BIN_OPCODE:
                return self.emit(_BIN_OPCODE[e.op], e.ty.width, [a, b])
            s_op, u_op = _SIGNED_PICK[e.op]
            opcode = s_op if e.left.ty.signed else u_op
            return self.emit(opcode, e.ty.width, [a, b])
        if isinstance(e, ast.Index):
            off, mem = self.element_offset(e, frame)
            return self.emit("load", e.ty.width, [off], mem=mem)
        if isinstance(e, ast.Call):
            return self.lower_call(e, frame)
        raise CdfgError(f"cannot lower expression {type(e).__name__}")

    def element_offset(self, e: ast.Index, frame: _Frame) -> tuple[int, int]:
        mem = frame.mems[e.base]
        idx = self.lower_expr(e.index, frame)
        esz = self.g.memories[mem].elem_bytes
        if esz > 1:
            sh = self.const(32, esz.bit_length() - 1)
            idx = self.emit("shl", 32, [idx, sh])
        return idx, mem

    def lower_call(self, e: ast.Call, frame: _Frame) -> int:
        callee = self.prog.function(e.func)
        sub = _Frame(self._next_frame, callee)
        self._next_frame += 1
        sub.cont = self.new_block(f"{callee.name}.ret{sub.id}")
        for p, a in zip(callee.params, e.args):
            if isinstance(p.ty, ast.ArrayRefType):
                sub.mems[p.name] = frame.mems[a.ident]
            else:
                self.write_var(sub.key(p.name), self.lower_expr(a, frame))
        self.lower_block(callee.body, sub)
        if self.cur is not None:
            self.write_var(sub.key("$ret"), self.const(callee.ret.width, 0))
            self.jump_to(sub.cont)
        if not sub.cont.preds:
            raise CdfgError(f"call to {callee.name} never returns")
        self.seal(sub.cont)
        self.cur = sub.cont
        return self.read_var(sub.key("$ret"), sub.cont, callee.ret.width)

    # ---- cleanup ----------------------------------------------------------------

    def _remove_unreachable(self):
        g = self.g
        live: set[int] = set()
        work = [g.entry]
        while work:
            bid = work.pop()
            if bid in live:
                continue
            live.add(bid)
            work.extend(g.blocks[bid].successors())
        dead = [bid for bid in g.blocks if bid not in live]
        for bid in dead:
            del g.blocks[bid]
        for b in g.blocks.values():
            keep = [i for i, p in enumerate(b.preds) if p in live]
            if len(keep) != len(b.preds):
                b.preds = [b.preds[i] for i in keep]
                for phi in b.phis():
                    phi.args = [phi.args[i] for i in keep]

    def _decompose_wide_muls(self):
        g = self.g
        native = self.native
        for block in list(g.blocks.values()):
            out: list[Op] = []
            for op in block.ops:
                if op.opcode != "mul" or g.value_width(op.args[0]) <= native:
                    out.append(op)
                    continue
                out.extend(self._expand_mul(block, op))
            block.ops = out

    def _expand_mul(self, block: Block, op: Op) -> list[Op]:
        g = self.g
        native = self.native
        a, b = op.args
        w = g.value_width(a)
        rw = g.value_width(op.result)
        chunks_n = -(-w // native)
        seq: list[Op] = []

        def mk(opcode, width, mk_args) -> int:
            new = Op(g._next_op, opcode, g.new_value(width), list(mk_args))
            g._next_op += 1
            seq.append(new)
            return new.result

        def chunk(src: int, i: int) -> int:
            v = src
            if i:
                v = mk("shr_u", w, [v, g.new_const(32, i * native)])
            return mk("trunc", native, [v])

        va = [chunk(a, i) for i in range(chunks_n)]
        vb = [chunk(b, j) for j in range(chunks_n)]
        acc = None
        for i in range(chunks_n):
            for j in range(chunks_n):
                sh = (i + j) * native
                if sh >= rw:
                    continue
                pw = min(2 * native, max(native, rw - sh))
                p = mk("mul", pw, [va[i], vb[j]])
                if pw < rw:
                    p = mk("zext", rw, [p])
                if sh:
                    p = mk("shl", rw, [p, g.new_const(32, sh)])
                acc = p if acc is None else mk("add", rw, [acc, p])
        # route users of the original result to the recombined value
        old = op.result
        for blk in g.blocks.values():
            for o in blk.ops:
                o.args = [acc if x == old else x for x in o.args]
            if blk.term and blk.term[0] in ("br", "ret"):
                blk.term = tuple(acc if t == old else t for t in blk.term)
        for o in seq:
            o.args = [acc if x == old else x for x in o.args]
        return seq

    def _prune_values(self):
        g = self.g
        live: set[int] = set()
        for b in g.blocks.values():
            for op in b.ops:
                if op.result is not None:
                    live.add(op.result)
                live.update(op.args)
            if b.term and b.term[0] in ("br", "ret"):
                live.add(b.term[1])
        for p in g.params:
            if isinstance(p, ScalarParam):
                live.add(p.value)
        g.values = {v: w for v, w in g.values.items() if v in live}
        g.constants = {v: c for v, c in g.constants.items() if v in live}
        g.value_names = {v: n for v, n in g.value_names.items() if v in live}


def lower_to_cdfg(prog: ast.TypedProgram, *, native_mul_width: int = 32,
                  op_budget: int = DEFAULT_OP_BUDGET) -> Cdfg:
    return _Builder(prog, native_mul_width, op_budget).run()
