"""Translation of products into guarded commands over a pair of states.

The left state lives in constants suffixed ``@L``, the right in ``@R``, and
the reference permutation in ``$pi.fwd``/``$pi.bwd``. Relational formulas
are interpreted over the triple; aligned calls use the relational method
context of the bimodule and couplings are only seen by module bimethods.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple

import z3

from ..align.product import (
    INVARIANT,
    PAlloc,
    PAssert,
    PAssume,
    PCall,
    PGuardedLoop,
    PIf,
    PLoop,
    PNode,
    POne,
    ProductIR,
    PSeq,
    PVar,
    build_product,
)
from ..align.projection import LEFT, default_biprogram
from ..constants import (
    KIND_ADEQUACY_INV,
    KIND_CALL_PRE,
    KIND_FRAMES_LEMMA,
    KIND_GUARD_AGREE,
    KIND_LOOP_INIT,
    KIND_LOOP_PRESERVE,
    KIND_POST,
)
from ..diagnostics import Span, VcgenError
from ..encap import Obligation
from ..lang import ast as A
from ..typecheck import TypedProgram
from .encode import (
    LEFT_SUFFIX,
    RIGHT_SUFFIX,
    Encoder,
    Frame,
    Pi,
    agree_on_boundary,
    pi_extends,
    pi_valid,
    snapshot,
    state_frame,
    typing,
    wf,
)
from .gcl import VC, GAssert, GAssign, GAssume, GChoice, GCmd, GHavoc, GLoop, LoopInvariant, assigned, gseq
from .theory import Theory
from .unary import PRODUCT, CallSite, CommandTranslator, Emitter, declare_locals, method_frame

log = logging.getLogger("relverify.vcgen")

_INVARIANT_KINDS: Dict[str, Tuple[str, str]] = {
    INVARIANT: (KIND_LOOP_INIT, KIND_LOOP_PRESERVE),
    KIND_GUARD_AGREE: (KIND_GUARD_AGREE, KIND_GUARD_AGREE),
    KIND_ADEQUACY_INV: (KIND_ADEQUACY_INV, KIND_ADEQUACY_INV),
}


@dataclass(frozen=True)
class _Pair:
    lcur: Frame
    rcur: Frame
    lold: Optional[Frame]
    rold: Optional[Frame]

    def with_vars(self, lvars: Dict[str, z3.ExprRef], rvars: Dict[str, z3.ExprRef]) -> "_Pair":
        return _Pair(self.lcur.with_vars(lvars), self.rcur.with_vars(rvars), self.lold, self.rold)


def _pi_snapshot(pi: Pi, tag: str) -> Tuple[Pi, List[GCmd]]:
    saved = Pi.named(f"{tag}.")
    return saved, [GAssign(saved.fwd, pi.fwd), GAssign(saved.bwd, pi.bwd)]


def _unary_view(frame: Frame, m: Optional[A.MethodDecl], params: Tuple[A.Param, ...]) -> Frame:
    """``frame`` with the side method's parameter names bound positionally."""
    if m is None:
        return frame
    return frame.with_vars({up.name: frame.var(bp.name) for up, bp in zip(m.params, params) if bp.name in frame.vars})


class ProductTranslator:
    """Guarded-command procedure for one bimethod of a bimodule."""

    def __init__(self, th: Theory, tp: TypedProgram, bimodule: str, m: A.BiMethodDecl, *, trust_wf: bool = False):
        self.th = th
        self.tp = tp
        self.unit = tp.unit(bimodule)
        self.m = m
        self.lw, self.rw = tp.sides(bimodule)
        self.lm = self.lw.method(m.name)
        self.rm = self.rw.method(m.name)
        self.em = Emitter()
        self.L = CommandTranslator(th, self.lw, self.em, suffix=LEFT_SUFFIX, mode=PRODUCT,
                                   effects=self.lm.spec.effects if self.lm else None, trust_wf=trust_wf)
        self.R = CommandTranslator(th, self.rw, self.em, suffix=RIGHT_SUFFIX, mode=PRODUCT,
                                   effects=self.rm.spec.effects if self.rm else None, trust_wf=trust_wf)
        self.pi = Pi.named()
        self.relspecs = tp.relspecs(bimodule)
        self.own = {b.name for b in self.unit.bimethods}
        self.couplings = self.unit.couplings

    # --------- formulas ---------

    def rel(self, rf: A.RelFormula, st: _Pair, lold: Optional[Frame] = None, rold: Optional[Frame] = None) -> z3.BoolRef:
        return self.L.enc.rel(rf, st.lcur, st.rcur, self.pi, lold or st.lold, rold or st.rold, right=self.R.enc)

    def coupling(self, st: _Pair) -> List[Tuple[A.CouplingDecl, z3.BoolRef]]:
        return [(c, self.L.enc.rel(c.formula, st.lcur, st.rcur, self.pi, right=self.R.enc)) for c in self.couplings]

    def _assert(self, f: z3.BoolRef, kind: str, span: Optional[Span], message: str = "") -> GAssert:
        return GAssert(f, self.em.meta(kind, span, message))

    # --------- product nodes ---------

    def node(self, p: PNode, st: _Pair) -> GCmd:
        if isinstance(p, PSeq):
            return gseq(self.node(x, st) for x in p.items)
        if isinstance(p, POne):
            if p.side == LEFT:
                return self.L.cmd(p.cmd, st.lcur, st.lold)
            return self.R.cmd(p.cmd, st.rcur, st.rold)
        if isinstance(p, PAssert):
            return self._assert(self.rel(p.formula, st), p.kind, p.span, "relational assertion")
        if isinstance(p, PAssume):
            return GAssume(self.rel(p.formula, st))
        if isinstance(p, PVar):
            lv = self.L.local(p.lname, self.th.sort(p.ltype))
            rv = self.R.local(p.rname, self.th.sort(p.rtype))
            self.L.declare(p.lname, p.ltype)
            self.R.declare(p.rname, p.rtype)
            inner = st.with_vars({p.lname: lv}, {p.rname: rv})
            return gseq([GAssign(lv, self.th.default(p.ltype)), GAssign(rv, self.th.default(p.rtype)), self.node(p.body, inner)])
        if isinstance(p, PIf):
            lc = self.L.enc.expr(p.lcond, st.lcur, st.lold)
            rc = self.R.enc.expr(p.rcond, st.rcur, st.rold)
            return GChoice(
                gseq([GAssume(z3.And(lc, rc)), self.node(p.then, st)]),
                gseq([GAssume(z3.And(z3.Not(lc), z3.Not(rc))), self.node(p.orelse, st)]),
            )
        if isinstance(p, (PLoop, PGuardedLoop)):
            return self.loop(p, st)
        if isinstance(p, PAlloc):
            lx, rx = st.lcur.var(p.lvar), st.rcur.var(p.rvar)
            out = self.L.allocate(lx, p.cls, st.lcur) + self.R.allocate(rx, p.cls, st.rcur)
            out += [GAssign(self.pi.fwd, z3.Store(self.pi.fwd, lx, rx)), GAssign(self.pi.bwd, z3.Store(self.pi.bwd, rx, lx))]
            return gseq(out)
        if isinstance(p, PCall):
            return self.call(p, st)
        raise VcgenError(f"cannot translate product node {type(p).__name__}", p.span)

    def loop(self, p, st: _Pair) -> GCmd:
        lent, save_l = snapshot(st.lcur, self.em.tag())
        rent, save_r = snapshot(st.rcur, self.em.tag())
        pi_ent, save_pi = _pi_snapshot(self.pi, self.em.tag())
        lit, it_l = snapshot(st.lcur, self.em.tag())
        rit, it_r = snapshot(st.rcur, self.em.tag())
        inner = _Pair(st.lcur, st.rcur, lit, rit)
        lc = self.L.enc.expr(p.lcond, st.lcur)
        rc = self.R.enc.expr(p.rcond, st.rcur)
        if isinstance(p, PLoop):
            guard = lc
            body = self.node(p.body, inner)
        else:
            guard = z3.Or(lc, rc)
            lsel = z3.And(lc, self.rel(p.lguard, inner)) if p.lguard is not None else z3.BoolVal(False)
            rsel = z3.And(rc, self.rel(p.rguard, inner)) if p.rguard is not None else z3.BoolVal(False)
            body = GChoice(
                gseq([GAssume(lsel), self.L.cmd(p.left, st.lcur, lit)]),
                GChoice(
                    gseq([GAssume(z3.And(z3.Not(lsel), rsel)), self.R.cmd(p.right, st.rcur, rit)]),
                    gseq([GAssume(z3.And(z3.Not(lsel), z3.Not(rsel))), self.node(p.body, inner)]),
                ),
            )
        body = gseq([*it_l, *it_r, body])
        invs: List[LoopInvariant] = []
        for n, (rf, kind) in enumerate(p.invariants):
            f = self.rel(rf, st, lent, rent)
            invs.append(self.L.checked(f, rf.span or p.span, f"{kind} {n}", _INVARIANT_KINDS.get(kind, _INVARIANT_KINDS[INVARIANT])))
        targets = assigned(body)
        invs += self.L.frame_invariants(targets, st.lcur, lent, p.span)
        invs += self.R.frame_invariants(targets, st.rcur, rent, p.span)
        ids = {t.get_id() for t in targets}
        if self.pi.fwd.get_id() in ids or self.pi.bwd.get_id() in ids:
            invs.append(self.L.checked(pi_extends(self.pi, pi_ent, self.th.null), p.span, "refperm only grows"))
            invs.append(self.L.checked(pi_valid(self.th, self.pi, st.lcur.alloct, st.rcur.alloct), p.span, "refperm validity"))
        return gseq([*save_l, *save_r, *save_pi, GLoop(guard, tuple(invs), body)])

    # --------- aligned calls ---------

    def call(self, p: PCall, st: _Pair) -> GCmd:
        rs = self.relspecs.get(p.method)
        if rs is None:
            raise VcgenError(f"aligned call to {p.method!r}, which has no relational specification", p.span)
        lsite, out = self.L.call_begin(p.method, p.largs, st.lcur, st.lold, p.span)
        rsite, rpre = self.R.call_begin(p.method, p.rargs, st.rcur, st.rold, p.span)
        out += rpre
        lnames = {bp.name: t for bp, t in zip(rs.lparams, lsite.temps.values())}
        rnames = {bp.name: t for bp, t in zip(rs.rparams, rsite.temps.values())}
        call_st = st.with_vars(lnames, rnames)
        for r in rs.spec.requires:
            out.append(self._assert(self.rel(r, call_st), KIND_CALL_PRE, p.span, f"relational precondition of {p.method}"))
        mine = p.method in self.own
        if mine:
            for c, f in self.coupling(st):
                out.append(self._assert(f, KIND_CALL_PRE, p.span, f"coupling {c.name} before {p.method}"))
        pi_pre, save = _pi_snapshot(self.pi, self.em.tag())
        out += save
        out += self.L.call_havoc(lsite, st.lcur) + self.R.call_havoc(rsite, st.rcur)
        out.append(GHavoc((self.pi.fwd, self.pi.bwd)))
        out += self.L.call_assume(lsite, st.lcur) + self.R.call_assume(rsite, st.rcur)
        facts = [pi_extends(self.pi, pi_pre, self.th.null), pi_valid(self.th, self.pi, st.lcur.alloct, st.rcur.alloct)]
        post_st = _Pair(
            st.lcur.with_vars({**lnames, **_result(lsite)}),
            st.rcur.with_vars({**rnames, **_result(rsite)}),
            lsite.pre.with_vars(lnames),
            rsite.pre.with_vars(rnames),
        )
        facts += [self.rel(e, post_st) for e in rs.spec.ensures]
        if mine:
            facts += [f for _, f in self.coupling(st)]
        out.append(GAssume(z3.And(facts)))
        out += self.L.call_end(lsite, p.ltarget, st.lcur, p.span) + self.R.call_end(rsite, p.rtarget, st.rcur, p.span)
        return gseq(out)

    # --------- procedure ---------

    def product(self) -> ProductIR:
        m = self.m
        if m.body is None:
            if self.lm is None or self.rm is None or self.lm.body is None or self.rm.body is None:
                raise VcgenError(f"bimethod {m.name!r} has no body and no unary bodies to compose", m.span)
            if [x.name for x in self.lm.params] != [x.name for x in m.lparams] or [x.name for x in self.rm.params] != [
                x.name for x in m.rparams
            ]:
                raise VcgenError(f"bimethod {m.name!r} without a body must use the unary parameter names", m.span)
            m = replace(m, body=default_biprogram(self.lm.body, self.rm.body))
        return build_product(m, is_method=lambda n: self.lw.method(n) is not None)

    def translate(self) -> GCmd:
        th, m = self.th, self.m
        ir = self.product()
        lcur = method_frame(th, self.lw, A.MethodDecl(m.name, ir.lparams, ir.lret, A.Spec(), None), self.L, LEFT_SUFFIX)
        rcur = method_frame(th, self.rw, A.MethodDecl(m.name, ir.rparams, ir.rret, A.Spec(), None), self.R, RIGHT_SUFFIX)
        _declare_product_locals(ir.body, self.L, True)
        _declare_product_locals(ir.body, self.R, False)
        st = _Pair(lcur, rcur, None, None)
        facts = [self.L.wf(lcur), self.R.wf(rcur), pi_valid(th, self.pi, lcur.alloct, rcur.alloct)]
        for tr, cur, um, params in ((self.L, lcur, self.lm, ir.lparams), (self.R, rcur, self.rm, ir.rparams)):
            facts += [typing(th, cur.alloct, cur.var(x.name), x.ptype) for x in params]
            if um is not None:
                view = _unary_view(cur, um, params)
                facts += [tr.enc.expr(r, view) for r in um.spec.requires]
                if tr.hidden_call(m.name):
                    facts += [f for _, f in tr.invariants(view)]
        facts += [self.rel(r, st) for r in m.spec.requires]
        facts += [f for _, f in self.coupling(st)]
        lent, save_l = snapshot(lcur, "entry")
        rent, save_r = snapshot(rcur, "entry")
        self.L.entry, self.R.entry = lent, rent
        init: List[GCmd] = [GAssume(z3.And(facts)), *save_l, *save_r]
        if ir.lret != A.UNIT:
            init.append(GAssign(lcur.var("result"), th.default(ir.lret)))
        if ir.rret != A.UNIT:
            init.append(GAssign(rcur.var("result"), th.default(ir.rret)))
        body = self.node(ir.body, _Pair(lcur, rcur, lent, rent))

        post = _Pair(
            lcur.with_vars({x.name: lent.var(x.name) for x in ir.lparams}),
            rcur.with_vars({x.name: rent.var(x.name) for x in ir.rparams}),
            lent,
            rent,
        )
        exits: List[GCmd] = [
            self._assert(self.rel(e, post), KIND_POST, e.span or m.span, f"relational postcondition of {m.name}")
            for e in m.spec.ensures
        ]
        exits += [
            self._assert(f, KIND_POST, c.span or m.span, f"coupling {c.name} after {m.name}") for c, f in self.coupling(st)
        ]
        return gseq([*init, body, *exits])


def _result(site: CallSite) -> Dict[str, z3.ExprRef]:
    return {"result": site.result} if site.result is not None else {}


def _declare_product_locals(p: PNode, tr: CommandTranslator, left: bool) -> None:
    """Record the declared types of product and one-sided locals for loop typing invariants."""
    if isinstance(p, PSeq):
        for x in p.items:
            _declare_product_locals(x, tr, left)
    elif isinstance(p, PVar):
        tr.declare(p.lname if left else p.rname, p.ltype if left else p.rtype)
        _declare_product_locals(p.body, tr, left)
    elif isinstance(p, POne):
        if (p.side == LEFT) == left:
            declare_locals(p.cmd, tr)
    elif isinstance(p, PIf):
        _declare_product_locals(p.then, tr, left)
        _declare_product_locals(p.orelse, tr, left)
    elif isinstance(p, (PLoop, PGuardedLoop)):
        _declare_product_locals(p.body, tr, left)


def translate_product(th: Theory, tp: TypedProgram, bimodule: str, m: A.BiMethodDecl, *, trust_wf: bool = False) -> Tuple[GCmd, Emitter]:
    pt = ProductTranslator(th, tp, bimodule, m, trust_wf=trust_wf)
    return pt.translate(), pt.em


def gen_relational_vcs(th: Theory, tp: TypedProgram, bimodule: str, m: A.BiMethodDecl, *, trust_wf: bool = False) -> List[VC]:
    proc, em = translate_product(th, tp, bimodule, m, trust_wf=trust_wf)
    vcs = em.collect(proc, bimodule, m.name)
    log.debug("%s.%s: %d relational VCs", bimodule, m.name, len(vcs))
    return vcs


# ========== coupling frames lemmas ==========


def coupling_frames_vc(th: Theory, tp: TypedProgram, ob: Obligation) -> VC:
    """State pairs sharing a refperm that agree on both boundaries agree on the coupling."""
    lw, rw = tp.sides(ob.unit)
    el, er = Encoder(th, lw), Encoder(th, rw)
    sl = state_frame(th, lw, LEFT_SUFFIX, prefix="s.")
    tl = state_frame(th, lw, LEFT_SUFFIX, prefix="t.")
    sr = state_frame(th, rw, RIGHT_SUFFIX, prefix="s.")
    tr = state_frame(th, rw, RIGHT_SUFFIX, prefix="t.")
    tl.alloct, tr.alloct = sl.alloct, sr.alloct
    pi = Pi.named()
    lf, rf_ = lw.classes.all_fields(), rw.classes.all_fields()
    hyp = [wf(th, sl, lf, lw.globals), wf(th, tl, lf, lw.globals), wf(th, sr, rf_, rw.globals), wf(th, tr, rf_, rw.globals)]
    hyp.append(pi_valid(th, pi, sl.alloct, sr.alloct))
    bl, br = ob.boundaries
    hyp += [agree_on_boundary(el, bl, sl, tl), agree_on_boundary(er, br, sr, tr)]
    f = ob.formula
    goal = z3.Implies(z3.And(hyp), el.rel(f, sl, sr, pi, right=er) == el.rel(f, tl, tr, pi, right=er))  # type: ignore[arg-type]
    return VC(ob.label, KIND_FRAMES_LEMMA, ob.unit, ob.owner, goal, ob.span, ob.message)


__all__ = [
    "ProductTranslator",
    "translate_product",
    "gen_relational_vcs",
    "coupling_frames_vc",
]
