"""Translation of unary methods into guarded commands.

A method becomes one procedure: entry assumptions, the body, then the exit
obligations (postconditions, hidden invariants, boundary monotonicity, frame
conditions, well-formedness). The command translator is shared with the
product translation, which runs one-sided code without the effect and
null-dereference checks already discharged by the unary procedures.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import z3

from ..constants import (
    KIND_ASSERT,
    KIND_CALL_PRE,
    KIND_DISJOINT,
    KIND_EFFECT,
    KIND_FRAME,
    KIND_FRAMES_LEMMA,
    KIND_LOOP_INIT,
    KIND_LOOP_PRESERVE,
    KIND_MONOTONICITY,
    KIND_NULL,
    KIND_POST,
    KIND_WF,
)
from ..diagnostics import Span, VcgenError
from ..encap import EncapReport, Obligation
from ..frontend.linker import World
from ..lang import ast as A
from ..lang.desugar import subexprs
from ..typecheck import TypedProgram
from .encode import Encoder, Frame, agree_on_boundary, alloc_monotone, snapshot, state_frame, typing, wf, wr_framed
from .gcl import VC, WP, GAssert, GAssign, GAssume, GChoice, GCmd, GHavoc, GLoop, GSeq, LoopInvariant, VCMeta, assigned, gseq
from .theory import Theory, ref_sort

log = logging.getLogger("relverify.vcgen")

CHECK = "check"
PRODUCT = "product"


class Emitter:
    """Sequence numbers for assertions and tags for snapshots of one procedure."""

    def __init__(self) -> None:
        self.seq = 0
        self.tags = 0
        self.wp = WP()

    def meta(self, kind: str, span: Optional[Span] = None, message: str = "", label: Optional[str] = None) -> VCMeta:
        self.seq += 1
        return VCMeta(kind, self.seq, span, message, label)

    def tag(self, base: str = "old") -> str:
        self.tags += 1
        return f"{base}{self.tags}"

    def collect(self, proc: GCmd, unit: str, method: str) -> List[VC]:
        goals = self.wp.run(proc)
        out = []
        for seq in sorted(goals):
            meta, goal = goals[seq]
            label = meta.label or f"{unit}:{method}:{meta.kind}:{seq}"
            out.append(VC(label, meta.kind, unit, method, goal, meta.span, meta.message))
        return out


@dataclass
class CallSite:
    callee: A.MethodDecl
    temps: Dict[str, z3.ExprRef]
    result: Optional[z3.ExprRef]
    pre: Frame  # caller state before the call, parameters bound to the argument temps
    havoced: Tuple[str, ...] = ()


# ========== command translation ==========


class CommandTranslator:
    """Guarded-command translation of the commands of one world over one frame."""

    def __init__(
        self,
        th: Theory,
        world: World,
        em: Emitter,
        *,
        suffix: str = "",
        mode: str = CHECK,
        effects: Optional[A.Effect] = None,
        entry: Optional[Frame] = None,
        disjoint: Optional[Dict[int, List[Obligation]]] = None,
        trust_wf: bool = False,
    ):
        self.th = th
        self.world = world
        self.em = em
        self.enc = Encoder(th, world)
        self.suffix = suffix
        self.mode = mode
        self.effects = effects
        self.entry = entry
        self.disjoint = disjoint or {}
        self.trust_wf = trust_wf
        self._locals: Dict[Tuple[str, str], z3.ExprRef] = {}
        self._types: Dict[str, A.Type] = {}

    @property
    def checking(self) -> bool:
        return self.mode == CHECK

    # --------- helpers ---------

    def local(self, name: str, sort: z3.SortRef) -> z3.ExprRef:
        key = (name, str(sort))
        c = self._locals.get(key)
        if c is None:
            taken = any(n == name for n, _ in self._locals)
            base = f"{name}#{self.em.tag('v')}" if taken else name
            c = self._locals[key] = z3.Const(f"{base}{self.suffix}", sort)
        return c

    def temp(self, base: str, sort: z3.SortRef) -> z3.ExprRef:
        return z3.Const(f"{base}#{self.em.tag('t')}{self.suffix}", sort)

    def fields(self) -> List[A.FieldDecl]:
        return self.world.classes.all_fields()

    def wf(self, frame: Frame) -> z3.BoolRef:
        return wf(self.th, frame, self.fields(), self.world.globals)

    def written_region(self, eff: Optional[A.Effect], f: str, frame: Frame) -> z3.ExprRef:
        out = z3.EmptySet(ref_sort())
        if eff is None:
            return out
        for g in eff.written_images(f):
            out = z3.SetUnion(out, self.enc.expr(g, frame))
        return out

    def frame_condition(self, f: str, pre: Frame, cur: Frame, eff: Optional[A.Effect] = None) -> z3.BoolRef:
        eff = eff if eff is not None else self.effects
        region = self.written_region(eff, f, pre)
        return wr_framed(self.th, f, pre.alloct, pre.field(f), cur.field(f), region)

    def _assert(self, formula: z3.BoolRef, kind: str, span: Optional[Span], message: str = "", label: Optional[str] = None) -> GAssert:
        return GAssert(formula, self.em.meta(kind, span, message, label))

    def _violation(self, span: Optional[Span], message: str) -> List[GCmd]:
        if not self.checking:
            return []
        return [self._assert(z3.BoolVal(False), KIND_EFFECT, span, message)]

    def null_checks(self, e: A.Expr, cur: Frame, old: Optional[Frame], span: Optional[Span]) -> List[GCmd]:
        """Non-null assertions for the field reads of ``e``, under the
        conditions that short-circuit evaluation establishes."""
        if not self.checking:
            return []
        out: List[GCmd] = []
        for path, obj in self._guarded_reads(e, []):
            conds = [self.enc.expr(p, cur, old) for p in path]
            goal = self.enc.expr(obj, cur, old) != self.th.null
            out.append(self._assert(z3.Implies(z3.And(conds), goal) if conds else goal, KIND_NULL, obj.span or span,
                                    "possible null dereference"))
        return out

    def _guarded_reads(self, e: A.Expr, path: List[A.Expr]) -> Iterator[Tuple[List[A.Expr], A.Expr]]:
        if isinstance(e, A.Quant):
            return
        if isinstance(e, A.Binary) and e.op in ("/\\", "\\/", "->"):
            yield from self._guarded_reads(e.left, path)
            guard = e.left if e.op != "\\/" else A.Unary("not", e.left, ty=A.BOOL)
            yield from self._guarded_reads(e.right, path + [guard])
            return
        if isinstance(e, A.FieldRead):
            yield from self._guarded_reads(e.obj, path)
            yield path, e.obj
            return
        for ch in subexprs(e):
            yield from self._guarded_reads(ch, path)

    def disjointness(self, c: A.Command, cur: Frame, old: Optional[Frame]) -> List[GCmd]:
        if not self.checking:
            return []
        return [
            self._assert(self.enc.expr(ob.formula, cur, old), KIND_DISJOINT, ob.span, ob.message, ob.label or None)  # type: ignore[arg-type]
            for ob in self.disjoint.get(id(c), [])
        ]

    def _global_write(self, name: str, span: Optional[Span]) -> List[GCmd]:
        if self.world.global_decl(name) is None:
            return []
        eff = self.effects or A.Effect()
        if name in eff.written_vars():
            return []
        return self._violation(span, f"write to global {name!r} not covered by the effects")

    # --------- commands ---------

    def cmd(self, c: A.Command, cur: Frame, old: Optional[Frame]) -> GCmd:
        th, enc = self.th, self.enc
        if isinstance(c, A.Skip):
            return GSeq(())
        if isinstance(c, A.Seq):
            return gseq(self.cmd(x, cur, old) for x in c.items)
        if isinstance(c, A.VarBlock):
            v = self.local(c.name, th.sort(c.vtype))
            inner = cur.with_vars({c.name: v})
            return gseq([GAssign(v, th.default(c.vtype)), self.cmd(c.body, inner, old)])
        if isinstance(c, A.Assign):
            if isinstance(c.value, A.Call) and self.world.method(c.value.name) is not None:
                return self.call(c.value.name, c.value.args, c.target, cur, old, c)
            pre = self.disjointness(c, cur, old) + self.null_checks(c.value, cur, old, c.span)
            pre += self._global_write(c.target, c.span)
            return gseq(pre + [GAssign(cur.var(c.target), enc.expr(c.value, cur, old))])
        if isinstance(c, A.FieldAssign):
            obj = cur.var(c.obj)
            pre = self.disjointness(c, cur, old) + self.null_checks(c.value, cur, old, c.span)
            if self.checking:
                pre.append(self._assert(obj != th.null, KIND_NULL, c.span, f"possible null dereference of {c.obj}"))
            eff = self.effects or A.Effect()
            if c.field not in eff.written_fields() and not eff.allows_alloc:
                pre += self._violation(c.span, f"write to field {c.field!r} not covered by the effects")
            h = cur.field(c.field)
            return gseq(pre + [GAssign(h, z3.Store(h, obj, enc.expr(c.value, cur, old)))])
        if isinstance(c, A.New):
            pre = self._global_write(c.target, c.span)
            if not (self.effects or A.Effect()).allows_alloc:
                pre += self._violation(c.span, f"allocation of {c.cls} without rw alloc")
            return gseq(pre + self.allocate(cur.var(c.target), c.cls, cur))
        if isinstance(c, A.If):
            cond = enc.expr(c.cond, cur, old)
            return gseq(
                self.disjointness(c, cur, old)
                + self.null_checks(c.cond, cur, old, c.span)
                + [GChoice(gseq([GAssume(cond), self.cmd(c.then, cur, old)]),
                           gseq([GAssume(z3.Not(cond)), self.cmd(c.orelse, cur, old)]))]
            )
        if isinstance(c, A.While):
            return self.loop(c, cur)
        if isinstance(c, A.CallCmd):
            return self.call(c.method, c.args, None, cur, old, c)
        if isinstance(c, A.Assert):
            return self._assert(enc.expr(c.formula, cur, old), KIND_ASSERT, c.span, "assertion")
        if isinstance(c, A.Assume):
            return GAssume(enc.expr(c.formula, cur, old))
        raise VcgenError(f"cannot translate {type(c).__name__}", c.span)

    def allocate(self, x: z3.ExprRef, cls: str, cur: Frame) -> List[GCmd]:
        th = self.th
        out: List[GCmd] = [
            GHavoc((x,)),
            GAssume(z3.And(x != th.null, cur.alloct[x] == 0)),
            GAssign(cur.alloct, z3.Store(cur.alloct, x, th.code(cls))),
        ]
        for f, fd in th.fields.items():
            if th.field_class(f) == cls:
                h = cur.field(f)
                out.append(GAssign(h, z3.Store(h, x, th.default(fd.ftype))))
        return out

    # --------- loops ---------

    def loop(self, c: A.While, cur: Frame) -> GCmd:
        entry, save = snapshot(cur, self.em.tag())
        it, save_it = snapshot(cur, self.em.tag())
        body = gseq([*save_it, self.cmd(c.body, cur, it)])
        head = gseq(self.null_checks(c.cond, cur, it, c.span))
        invs: List[LoopInvariant] = []
        for i, f in enumerate(c.invariants):
            invs.append(self.checked(self.enc.expr(f, cur, entry), f.span or c.span, f"loop invariant {i}"))
        invs += self.frame_invariants(assigned(body), cur, entry, c.span)
        guard = self.enc.expr(c.cond, cur, it)
        return gseq([*save, GLoop(guard, tuple(invs), body, head)])

    def checked(self, formula: z3.BoolRef, span: Optional[Span], message: str,
                kinds: Tuple[str, str] = (KIND_LOOP_INIT, KIND_LOOP_PRESERVE)) -> LoopInvariant:
        return LoopInvariant(formula, self.em.meta(kinds[0], span, message), self.em.meta(kinds[1], span, message))

    def frame_invariants(self, targets: Sequence[z3.ExprRef], cur: Frame, entry: Frame, span: Optional[Span]) -> List[LoopInvariant]:
        """Invariants every loop gets for the state it may change."""
        ids = {t.get_id() for t in targets}
        heaps = [f for f, h in cur.heap.items() if h.get_id() in ids]
        grows = cur.alloct.get_id() in ids
        gvars = [g.name for g in self.world.globals if g.name in cur.vars and cur.vars[g.name].get_id() in ids]
        out: List[LoopInvariant] = []
        if heaps or grows or gvars:
            f = self.wf(cur)
            out.append(LoopInvariant(f) if self.trust_wf else self.checked(f, span, "well-formedness"))
        if grows:
            out.append(self.checked(alloc_monotone(entry.alloct, cur.alloct), span, "allocation only grows"))
        if self.entry is not None:
            for f in heaps:
                if f in {fd.name for fd in self.fields()}:
                    out.append(self.checked(self.frame_condition(f, self.entry, cur), span, f"frame condition for {f}"))
        for name, v in cur.vars.items():
            decl = self._decl_type(name)
            if v.get_id() in ids and decl is not None and (decl.is_class or decl == A.RGN):
                out.append(self.checked(typing(self.th, cur.alloct, v, decl), span, f"type of {name}"))
        return out

    def _decl_type(self, name: str) -> Optional[A.Type]:
        return self._types.get(name)

    def declare(self, name: str, t: A.Type) -> None:
        self._types[name] = t

    # --------- calls ---------

    def callee(self, name: str, span: Optional[Span]) -> A.MethodDecl:
        m = self.world.method(name)
        if m is None:
            raise VcgenError(f"unknown method {name!r}", span)
        if not m.spec.declared:
            raise VcgenError(f"call to {name!r}, which has no specification", span)
        return m

    def hidden_call(self, name: str) -> bool:
        return self.world.iface is not None and self.world.iface != self.world.name and name in self.world.hidden

    def invariants(self, frame: Frame) -> List[Tuple[A.InvariantDecl, z3.BoolRef]]:
        return [(inv, self.enc.expr(inv.formula, frame)) for inv in self.world.invariants]

    def call_begin(self, name: str, args: Sequence[A.Expr], cur: Frame, old: Optional[Frame], span: Optional[Span]) -> Tuple[CallSite, List[GCmd]]:
        """Argument temps and precondition checks of a call."""
        m = self.callee(name, span)
        out: List[GCmd] = []
        temps: Dict[str, z3.ExprRef] = {}
        for p, a in zip(m.params, args):
            out += self.null_checks(a, cur, old, span)
            t = self.temp(f"{name}.{p.name}", self.th.sort(p.ptype))
            out.append(GAssign(t, self.enc.expr(a, cur, old)))
            temps[p.name] = t
        callf = cur.with_vars(temps)
        for r in m.spec.requires:
            out.append(self._assert(self.enc.expr(r, callf), KIND_CALL_PRE, span, f"precondition of {name}"))
        if self.hidden_call(name):
            for inv, f in self.invariants(callf):
                out.append(self._assert(f, KIND_CALL_PRE, span, f"invariant {inv.name} before {name}"))
        out += self._call_effects(m, span)
        pre, save = snapshot(callf, self.em.tag(), [g.name for g in self.world.globals] + list(temps))
        out += save
        res = self.temp(f"{name}.result", self.th.sort(m.ret)) if m.ret != A.UNIT else None
        return CallSite(m, temps, res, pre), out

    def _call_effects(self, m: A.MethodDecl, span: Optional[Span]) -> List[GCmd]:
        mine = self.effects or A.Effect()
        theirs = m.spec.effects or A.Effect()
        out: List[GCmd] = []
        for g in theirs.written_vars():
            if g not in mine.written_vars():
                out += self._violation(span, f"call to {m.name} writes global {g!r} not covered by the effects")
        if theirs.allows_alloc and not mine.allows_alloc:
            out += self._violation(span, f"call to {m.name} allocates without rw alloc")
        for f in theirs.written_fields():
            if f not in mine.written_fields() and not mine.allows_alloc:
                out += self._violation(span, f"call to {m.name} writes field {f!r} not covered by the effects")
        return out

    def call_havoc(self, site: CallSite, cur: Frame) -> List[GCmd]:
        eff = site.callee.spec.effects or A.Effect()
        visible = [fd.name for fd in self.fields()]
        heaps = visible if eff.allows_alloc else [f for f in eff.written_fields() if f in visible]
        site.havoced = tuple(heaps)
        targets = [cur.var(g) for g in eff.written_vars() if g in cur.vars]
        targets += [cur.field(f) for f in heaps]
        if eff.allows_alloc:
            targets.append(cur.alloct)
        if site.result is not None:
            targets.append(site.result)
        return [GHavoc(tuple(targets))] if targets else []

    def call_assume(self, site: CallSite, cur: Frame) -> List[GCmd]:
        m = site.callee
        eff = m.spec.effects or A.Effect()
        post = cur.with_vars(site.temps)
        if site.result is not None:
            post = post.with_vars({"result": site.result})
        facts: List[z3.BoolRef] = [self.enc.expr(e, post, site.pre) for e in m.spec.ensures]
        facts += [self.frame_condition(f, site.pre, cur, eff) for f in site.havoced]
        if eff.allows_alloc:
            facts.append(alloc_monotone(site.pre.alloct, cur.alloct))
        facts.append(self.wf(cur))
        if site.result is not None:
            facts.append(typing(self.th, cur.alloct, site.result, m.ret))
        if self.hidden_call(m.name):
            facts += [f for _, f in self.invariants(post)]
        return [GAssume(z3.And(facts))]

    def call_end(self, site: CallSite, target: Optional[str], cur: Frame, span: Optional[Span]) -> List[GCmd]:
        if target is None or site.result is None:
            return []
        return self._global_write(target, span) + [GAssign(cur.var(target), site.result)]

    def call(self, name: str, args: Sequence[A.Expr], target: Optional[str], cur: Frame, old: Optional[Frame], c: A.Command) -> GCmd:
        site, out = self.call_begin(name, args, cur, old, c.span)
        out = self.disjointness(c, cur, old) + out
        out += self.call_havoc(site, cur)
        out += self.call_assume(site, cur)
        out += self.call_end(site, target, cur, c.span)
        return gseq(out)


# ========== method procedures ==========


def method_frame(th: Theory, world: World, m: A.MethodDecl, tr: CommandTranslator, suffix: str = "") -> Frame:
    cur = state_frame(th, world, suffix)
    params = {p.name: z3.Const(f"{p.name}{suffix}", th.sort(p.ptype)) for p in m.params}
    for p in m.params:
        tr.declare(p.name, p.ptype)
    for g in world.globals:
        tr.declare(g.name, g.gtype)
    if m.ret != A.UNIT:
        params["result"] = z3.Const(f"result{suffix}", th.sort(m.ret))
        tr.declare("result", m.ret)
    return cur.with_vars(params)


def declare_locals(c: A.Command, tr: CommandTranslator) -> None:
    if isinstance(c, A.VarBlock):
        tr.declare(c.name, c.vtype)
        declare_locals(c.body, tr)
    elif isinstance(c, A.Seq):
        for x in c.items:
            declare_locals(x, tr)
    elif isinstance(c, A.If):
        declare_locals(c.then, tr)
        declare_locals(c.orelse, tr)
    elif isinstance(c, A.While):
        declare_locals(c.body, tr)


def entry_assumptions(tr: CommandTranslator, m: A.MethodDecl, cur: Frame) -> List[z3.BoolRef]:
    th = tr.th
    facts = [tr.wf(cur)]
    facts += [typing(th, cur.alloct, cur.var(p.name), p.ptype) for p in m.params]
    facts += [tr.enc.expr(r, cur) for r in m.spec.requires]
    if tr.hidden_call(m.name):
        facts += [f for _, f in tr.invariants(cur)]
    return facts


def frame_posts(tr: CommandTranslator, m: A.MethodDecl, entry: Frame, cur: Frame, changed: Sequence[z3.ExprRef]) -> List[Tuple[str, z3.BoolRef]]:
    """Frame conditions for the heaps a procedure may change.

    Globals outside the effects and the allocation table without ``alloc``
    are never assigned (writes to them are effect violations), so only the
    field maps need postconditions.
    """
    ids = {t.get_id() for t in changed}
    visible = {fd.name for fd in tr.fields()}
    return [
        (f, tr.frame_condition(f, entry, cur, m.spec.effects))
        for f, h in cur.heap.items()
        if h.get_id() in ids and f in visible
    ]


def translate_unary(
    th: Theory,
    world: World,
    m: A.MethodDecl,
    *,
    report: Optional[EncapReport] = None,
    trust_wf: bool = False,
    em: Optional[Emitter] = None,
) -> GCmd:
    """The guarded-command procedure checking ``m``'s body against its spec."""
    if m.body is None:
        raise VcgenError(f"method {m.name!r} has no body", m.span)
    em = em or Emitter()
    report = report or EncapReport()
    tr = CommandTranslator(
        th, world, em, effects=m.spec.effects, disjoint=report.disjointness(world.name, m.name), trust_wf=trust_wf
    )
    cur = method_frame(th, world, m, tr)
    declare_locals(m.body, tr)
    entry, save = snapshot(cur, "entry")
    tr.entry = entry
    init: List[GCmd] = [GAssume(z3.And(entry_assumptions(tr, m, cur))), *save]
    if m.ret != A.UNIT:
        init.append(GAssign(cur.var("result"), th.default(m.ret)))
    body = tr.cmd(m.body, cur, entry)

    post = cur.with_vars({p.name: entry.var(p.name) for p in m.params})
    exits: List[GCmd] = []
    for e in m.spec.ensures:
        exits.append(tr._assert(tr.enc.expr(e, post, entry), KIND_POST, e.span or m.span, f"postcondition of {m.name}"))
    if tr.hidden_call(m.name):
        for inv, f in tr.invariants(post):
            exits.append(tr._assert(f, KIND_POST, inv.span or m.span, f"invariant {inv.name} after {m.name}"))
    for ob in report.monotonicity(world.name, m.name):
        exits.append(
            tr._assert(tr.enc.expr(ob.formula, post, entry), KIND_MONOTONICITY, ob.span, ob.message, ob.label or None)  # type: ignore[arg-type]
        )
    for f, cond in frame_posts(tr, m, entry, cur, assigned(body)):
        exits.append(tr._assert(cond, KIND_FRAME, m.span, f"{m.name} writes {f} outside its effects"))
    if not trust_wf:
        exits.append(tr._assert(tr.wf(cur), KIND_WF, m.span, "state well-formedness"))
    return gseq([*init, body, *exits])


def unary_vcs(
    th: Theory, world: World, m: A.MethodDecl, *, report: Optional[EncapReport] = None, trust_wf: bool = False
) -> List[VC]:
    em = Emitter()
    proc = translate_unary(th, world, m, report=report, trust_wf=trust_wf, em=em)
    vcs = em.collect(proc, world.name, m.name)
    log.debug("%s.%s: %d VCs", world.name, m.name, len(vcs))
    return vcs


# ========== frames lemmas ==========


def _two_states(th: Theory, world: World, tag: str) -> Tuple[Frame, Frame]:
    s = state_frame(th, world, prefix=f"{tag}s.")
    t = state_frame(th, world, prefix=f"{tag}t.")
    t.alloct = s.alloct
    return s, t


def invariant_frames_vc(th: Theory, world: World, ob: Obligation) -> VC:
    """Two states with equal allocation that agree on the boundary agree on the invariant."""
    enc = Encoder(th, world)
    s, t = _two_states(th, world, "")
    fields, globs = world.classes.all_fields(), world.globals
    hyp = z3.And(wf(th, s, fields, globs), wf(th, t, fields, globs), *(agree_on_boundary(enc, b, s, t) for b in ob.boundaries))
    inv = ob.formula
    goal = z3.Implies(hyp, enc.expr(inv, s) == enc.expr(inv, t))  # type: ignore[arg-type]
    return VC(ob.label, KIND_FRAMES_LEMMA, ob.unit, ob.owner, goal, ob.span, ob.message)


def frames_lemma_vcs(th: Theory, tp: TypedProgram, report: EncapReport, units: Optional[Sequence[str]] = None) -> List[VC]:
    from .relational import coupling_frames_vc

    out: List[VC] = []
    for ob in report.of_kind(KIND_FRAMES_LEMMA):
        if units is not None and ob.unit not in units:
            continue
        if tp.unit(ob.unit).kind == "bimodule":
            out.append(coupling_frames_vc(th, tp, ob))
        else:
            out.append(invariant_frames_vc(th, tp.world(ob.unit), ob))
    return out


__all__ = [
    "CHECK",
    "PRODUCT",
    "Emitter",
    "CallSite",
    "CommandTranslator",
    "method_frame",
    "declare_locals",
    "entry_assumptions",
    "frame_posts",
    "translate_unary",
    "unary_vcs",
    "invariant_frames_vc",
    "frames_lemma_vcs",
]
