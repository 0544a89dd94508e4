"""Execution of products over a pair of states and a reference permutation."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Union

from ..align.product import (
    PAlloc,
    PAssert,
    PAssume,
    PCall,
    PGuardedLoop,
    PIf,
    PLoop,
    PNode,
    POne,
    PSeq,
    PVar,
    ProductIR,
)
from ..align.projection import LEFT, RIGHT
from ..constants import DEFAULT_FUEL, KIND_ADEQUACY_INV, KIND_GUARD_AGREE
from ..diagnostics import InterpError
from ..frontend.linker import World
from ..lang import ast as A
from ..lang.pretty import pretty_rel
from ..lang.regions import RefPerm, Reference, Region
from .evaluator import (
    FAULT_ASSUME,
    Env,
    Evaluator,
    Fault,
    OldFrame,
    OutOfFuel,
    Trace,
    Unevaluable,
    _Abort,
    _NoFuel,
)
from .state import ConcreteState, Value, default_value

log = logging.getLogger("relverify.interp")


# ========== relational formulas ==========


def agree_values(t: Optional[A.Type], lv: Value, rv: Value, pi: RefPerm) -> bool:
    if isinstance(lv, Region) and isinstance(rv, Region):
        return pi.image(lv) == rv and pi.inverse().image(rv) == lv
    if isinstance(lv, Reference) and isinstance(rv, Reference):
        return pi.relates(lv, rv)
    return lv == rv


@dataclass
class _Side:
    ev: Evaluator
    st: ConcreteState
    env: Env
    old: OldFrame = None


def _rel(rf: A.RelFormula, left: _Side, right: _Side, pi: RefPerm) -> bool:
    if isinstance(rf, A.Agree):
        lv = left.ev.expr(rf.left, left.st, left.env, left.old)
        rv = right.ev.expr(rf.right, right.st, right.env, right.old)
        return agree_values(rf.left.ty, lv, rv, pi)
    if isinstance(rf, A.LeftF):
        return bool(left.ev.expr(rf.formula, left.st, left.env, left.old))
    if isinstance(rf, A.RightF):
        return bool(right.ev.expr(rf.formula, right.st, right.env, right.old))
    if isinstance(rf, A.BothF):
        return bool(left.ev.expr(rf.formula, left.st, left.env, left.old)) and bool(
            right.ev.expr(rf.formula, right.st, right.env, right.old)
        )
    if isinstance(rf, A.RBool):
        return rf.value
    if isinstance(rf, A.RNot):
        return not _rel(rf.operand, left, right, pi)
    if isinstance(rf, A.RBin):
        a = _rel(rf.left, left, right, pi)
        if rf.op == "/\\":
            return a and _rel(rf.right, left, right, pi)
        if rf.op == "\\/":
            return a or _rel(rf.right, left, right, pi)
        if rf.op == "->":
            return (not a) or _rel(rf.right, left, right, pi)
        return a == _rel(rf.right, left, right, pi)
    if isinstance(rf, A.RQuant):
        lvals = left.ev.domain(rf.ltype, rf.ldomain, left.st, left.env, left.old)
        rvals = right.ev.domain(rf.rtype, rf.rdomain, right.st, right.env, right.old)
        pairs = [
            (lv, rv) for lv in lvals for rv in rvals
            if not rf.ltype.is_class or pi.get(lv) == rv  # type: ignore[arg-type]
        ]

        def test(lv: Value, rv: Value) -> bool:
            ls = _Side(left.ev, left.st, {**left.env, rf.lvar: lv}, _bind(left.old, rf.lvar, lv))
            rs = _Side(right.ev, right.st, {**right.env, rf.rvar: rv}, _bind(right.old, rf.rvar, rv))
            return _rel(rf.body, ls, rs, pi)

        if rf.kind == "forall":
            return all(test(l, r) for l, r in pairs)
        return any(test(l, r) for l, r in pairs)
    raise InterpError(f"cannot evaluate relational formula {type(rf).__name__}", rf.span)


def _bind(old: OldFrame, name: str, v: Value) -> OldFrame:
    return None if old is None else (old[0], {**old[1], name: v})


def eval_relformula(
    rf: A.RelFormula,
    sl: ConcreteState,
    sr: ConcreteState,
    pi: RefPerm,
    *,
    left: World,
    right: World,
    lenv: Optional[Env] = None,
    renv: Optional[Env] = None,
) -> bool:
    """Truth of ``rf`` in the state pair; unevaluable quantifiers count as true."""
    ls = _Side(Evaluator(left), sl, dict(lenv or {}))
    rs = _Side(Evaluator(right), sr, dict(renv or {}))
    try:
        return _rel(rf, ls, rs, pi)
    except Unevaluable as ex:
        log.warning("skipping unevaluable relational formula %s: %s", pretty_rel(rf), ex)
        return True


# ========== products ==========


@dataclass
class ProductRun:
    left: ConcreteState
    right: ConcreteState
    pi: RefPerm
    lenv: Env
    renv: Env
    ltrace: Trace
    rtrace: Trace


class ProductEvaluator:
    def __init__(
        self,
        left: World,
        right: World,
        fuel: int = DEFAULT_FUEL,
        *,
        units: Optional[Mapping[str, A.CompilationUnit]] = None,
    ):
        self.budget = Trace(fuel=fuel)
        self.ltrace = Trace(budget=self.budget)
        self.rtrace = Trace(budget=self.budget)
        self.lev = Evaluator(left, units=units, trace=self.ltrace)
        self.rev = Evaluator(right, units=units, trace=self.rtrace)
        self.lold: OldFrame = None
        self.rold: OldFrame = None

    @property
    def steps(self) -> int:
        return self.ltrace.steps + self.rtrace.steps

    def _side(self, side: str, sl: ConcreteState, sr: ConcreteState, lenv: Env, renv: Env):
        if side == LEFT:
            return self.lev, sl, lenv
        return self.rev, sr, renv

    def _one(self, side: str, c: A.Command, sl: ConcreteState, sr: ConcreteState, lenv: Env, renv: Env) -> None:
        ev, st, env = self._side(side, sl, sr, lenv, renv)
        ev.cmd(c, st, env, self.lold if side == LEFT else self.rold)

    def check(self, rf: A.RelFormula, kind: str, sl, sr, pi: RefPerm, lenv: Env, renv: Env, span=None) -> None:
        ok = self.rel(rf, sl, sr, pi, lenv, renv)
        if not ok:
            raise _Abort(Fault(kind, f"relational assertion {pretty_rel(rf)} failed", span or rf.span))

    def rel(self, rf: A.RelFormula, sl, sr, pi: RefPerm, lenv: Env, renv: Env) -> bool:
        try:
            return _rel(rf, _Side(self.lev, sl, lenv, self.lold), _Side(self.rev, sr, renv, self.rold), pi)
        except Unevaluable as ex:
            log.warning("skipping unevaluable relational formula %s: %s", pretty_rel(rf), ex)
            return True

    def node(self, p: PNode, sl: ConcreteState, sr: ConcreteState, pi: RefPerm, lenv: Env, renv: Env) -> RefPerm:
        if isinstance(p, PSeq):
            for it in p.items:
                pi = self.node(it, sl, sr, pi, lenv, renv)
            return pi
        if isinstance(p, POne):
            self._one(p.side, p.cmd, sl, sr, lenv, renv)
            return pi
        if isinstance(p, PAssert):
            self.check(p.formula, p.kind, sl, sr, pi, lenv, renv, p.span)
            return pi
        if isinstance(p, PAssume):
            if not self.rel(p.formula, sl, sr, pi, lenv, renv):
                raise _Abort(Fault(FAULT_ASSUME, f"assumption {pretty_rel(p.formula)} is false", p.span))
            return pi
        if isinstance(p, PVar):
            return self._var(p, sl, sr, pi, lenv, renv)
        if isinstance(p, PIf):
            # guard agreement was asserted just before; the left guard picks the branch
            self.ltrace.tick("guard", p.span)
            taken = self.lev.expr(p.lcond, sl, lenv, track=True)
            self.rev.expr(p.rcond, sr, renv, track=True)
            return self.node(p.then if taken else p.orelse, sl, sr, pi, lenv, renv)
        if isinstance(p, PLoop):
            return self._loop(p, sl, sr, pi, lenv, renv)
        if isinstance(p, PGuardedLoop):
            return self._guarded(p, sl, sr, pi, lenv, renv)
        if isinstance(p, PAlloc):
            self.ltrace.tick("new", p.span)
            lref = sl.allocate(p.cls, self.lev.ct)
            rref = sr.allocate(p.cls, self.rev.ct)
            for tr, ref in ((self.ltrace, lref), (self.rtrace, rref)):
                tr.allocated.append(ref)
            self.lev.assign(p.lvar, lref, sl, lenv)
            self.rev.assign(p.rvar, rref, sr, renv)
            return pi.extend(lref, rref)
        if isinstance(p, PCall):
            return self._call(p, sl, sr, pi, lenv, renv)
        raise InterpError(f"cannot execute product node {type(p).__name__}", p.span)

    def _var(self, p: PVar, sl, sr, pi: RefPerm, lenv: Env, renv: Env) -> RefPerm:
        missing = object()
        saved = (lenv.get(p.lname, missing), renv.get(p.rname, missing))
        lenv[p.lname] = default_value(p.ltype)
        renv[p.rname] = default_value(p.rtype)
        try:
            return self.node(p.body, sl, sr, pi, lenv, renv)
        finally:
            for env, name, old in ((lenv, p.lname, saved[0]), (renv, p.rname, saved[1])):
                if old is missing:
                    env.pop(name, None)
                else:
                    env[name] = old  # type: ignore[assignment]

    def _head(self, p: Union[PLoop, PGuardedLoop], sl, sr, pi: RefPerm, lenv: Env, renv: Env) -> None:
        for rf, kind in p.invariants:
            if kind in (KIND_GUARD_AGREE, KIND_ADEQUACY_INV):
                self.check(rf, kind, sl, sr, pi, lenv, renv, p.span)

    def _snapshot(self, sl, sr, lenv: Env, renv: Env) -> None:
        """Relational and one-sided ``old`` inside a loop body means the start of the iteration."""
        self.lold = (sl.copy(), dict(lenv))
        self.rold = (sr.copy(), dict(renv))

    def _loop(self, p: PLoop, sl, sr, pi: RefPerm, lenv: Env, renv: Env) -> RefPerm:
        saved = (self.lold, self.rold)
        try:
            while True:
                self._head(p, sl, sr, pi, lenv, renv)
                self.ltrace.tick("guard", p.span)
                if not self.lev.expr(p.lcond, sl, lenv, track=True):
                    return pi
                self.rev.expr(p.rcond, sr, renv, track=True)
                self._snapshot(sl, sr, lenv, renv)
                pi = self.node(p.body, sl, sr, pi, lenv, renv)
        finally:
            self.lold, self.rold = saved

    def _guarded(self, p: PGuardedLoop, sl, sr, pi: RefPerm, lenv: Env, renv: Env) -> RefPerm:
        saved = (self.lold, self.rold)
        try:
            while True:
                self._head(p, sl, sr, pi, lenv, renv)
                self.ltrace.tick("guard", p.span)
                lc = bool(self.lev.expr(p.lcond, sl, lenv, track=True))
                rc = bool(self.rev.expr(p.rcond, sr, renv, track=True))
                if not (lc or rc):
                    return pi
                self._snapshot(sl, sr, lenv, renv)
                # branch order: left-only, then right-only, else lockstep
                if lc and p.lguard is not None and self.rel(p.lguard, sl, sr, pi, lenv, renv):
                    self._one(LEFT, p.left, sl, sr, lenv, renv)
                elif rc and p.rguard is not None and self.rel(p.rguard, sl, sr, pi, lenv, renv):
                    self._one(RIGHT, p.right, sl, sr, lenv, renv)
                else:
                    pi = self.node(p.body, sl, sr, pi, lenv, renv)
        finally:
            self.lold, self.rold = saved


    def _call(self, p: PCall, sl, sr, pi: RefPerm, lenv: Env, renv: Env) -> RefPerm:
        largs = [self.lev.expr(a, sl, lenv, track=True) for a in p.largs]
        rargs = [self.rev.expr(a, sr, renv, track=True) for a in p.rargs]
        lmark, rmark = len(self.ltrace.allocated), len(self.rtrace.allocated)
        self.ltrace.tick("call", p.span)
        lv = self.lev.call(p.method, largs, sl, p.span)
        rv = self.rev.call(p.method, rargs, sr, p.span)
        if p.ltarget is not None:
            self.lev.assign(p.ltarget, lv, sl, lenv)
        if p.rtarget is not None:
            self.rev.assign(p.rtarget, rv, sr, renv)
        return pair_allocations(
            pi, self.ltrace.allocated[lmark:], self.rtrace.allocated[rmark:], sl, sr
        )


def pair_allocations(
    pi: RefPerm, lrefs: Sequence[Reference], rrefs: Sequence[Reference], sl: ConcreteState, sr: ConcreteState
) -> RefPerm:
    """Extend ``pi`` by pairing fresh objects of the same class in allocation order."""
    by_class: Dict[str, List[Reference]] = {}
    for r in rrefs:
        by_class.setdefault(sr.alloc[r], []).append(r)
    for l in lrefs:
        queue = by_class.get(sl.alloc[l])
        if queue:
            pi = pi.extend(l, queue.pop(0))
    return pi


def eval_product(
    p: ProductIR,
    sl: ConcreteState,
    sr: ConcreteState,
    pi: RefPerm,
    fuel: int = DEFAULT_FUEL,
    *,
    left: World,
    right: World,
    largs: Sequence[Value] = (),
    rargs: Sequence[Value] = (),
    units: Optional[Mapping[str, A.CompilationUnit]] = None,
) -> Union[ProductRun, Fault, OutOfFuel]:
    """Run ``p`` from copies of ``sl``/``sr`` with the parameters bound to the arguments."""
    pe = ProductEvaluator(left, right, fuel, units=units)
    l, r = sl.copy(), sr.copy()
    lenv: Env = {q.name: v for q, v in zip(p.lparams, largs)}
    renv: Env = {q.name: v for q, v in zip(p.rparams, rargs)}
    if p.lret != A.UNIT:
        lenv["result"] = default_value(p.lret)
    if p.rret != A.UNIT:
        renv["result"] = default_value(p.rret)
    pe.lold, pe.rold = (l.copy(), dict(lenv)), (r.copy(), dict(renv))
    try:
        pi2 = pe.node(p.body, l, r, pi, lenv, renv)
    except _Abort as ex:
        return ex.fault
    except _NoFuel:
        return OutOfFuel(pe.steps, pe.ltrace)
    return ProductRun(l, r, pi2, lenv, renv, pe.ltrace, pe.rtrace)


__all__ = [
    "agree_values",
    "eval_relformula",
    "eval_product",
    "pair_allocations",
    "ProductRun",
    "ProductEvaluator",
]
