"""Encoding of expressions, formulas and relational formulas into solver terms."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import z3

from ..diagnostics import VcgenError
from ..frontend.linker import World
from ..lang import ast as A
from .gcl import GAssign
from .theory import PredicateInfo, Theory, alloct_sort, intlist_sort, ref_sort, region_sort

LEFT_SUFFIX = "@L"
RIGHT_SUFFIX = "@R"


# ========== state frames ==========


@dataclass
class Frame:
    """Solver constants standing for one state: allocation table, heaps and variables."""

    alloct: z3.ExprRef
    heap: Dict[str, z3.ExprRef]
    vars: Dict[str, z3.ExprRef] = field(default_factory=dict)
    suffix: str = ""

    def var(self, name: str) -> z3.ExprRef:
        try:
            return self.vars[name]
        except KeyError:
            raise VcgenError(f"no variable {name!r} in scope") from None

    def field(self, f: str) -> z3.ExprRef:
        try:
            return self.heap[f]
        except KeyError:
            raise VcgenError(f"unknown field {f!r}") from None

    def with_vars(self, extra: Mapping[str, z3.ExprRef]) -> "Frame":
        return replace(self, vars={**self.vars, **extra})

    def components(self) -> List[z3.ExprRef]:
        return [self.alloct, *self.heap.values(), *self.vars.values()]


def state_frame(th: Theory, world: World, suffix: str = "", prefix: str = "") -> Frame:
    heap = {f: z3.Const(f"{prefix}h.{f}{suffix}", th.field_sort(f)) for f in th.fields}
    glob = {g.name: z3.Const(f"{prefix}{g.name}{suffix}", th.sort(g.gtype)) for g in world.globals}
    return Frame(z3.Const(f"{prefix}$alloct{suffix}", alloct_sort()), heap, glob, suffix)


def snapshot(frame: Frame, tag: str, names: Optional[Iterable[str]] = None) -> Tuple[Frame, List[GAssign]]:
    """Fresh constants holding a copy of ``frame`` (all variables, or ``names``)."""
    keep = list(frame.vars) if names is None else [n for n in names if n in frame.vars]
    al = z3.Const(f"{tag}.$alloct{frame.suffix}", alloct_sort())
    heap = {f: z3.Const(f"{tag}.h.{f}{frame.suffix}", h.sort()) for f, h in frame.heap.items()}
    vs = {n: z3.Const(f"{tag}.{n}{frame.suffix}", frame.vars[n].sort()) for n in keep}
    assigns = [GAssign(al, frame.alloct)]
    assigns += [GAssign(heap[f], frame.heap[f]) for f in frame.heap]
    assigns += [GAssign(vs[n], frame.vars[n]) for n in keep]
    return Frame(al, heap, vs, frame.suffix), assigns


@dataclass
class Pi:
    """Reference permutation as forward and backward maps; null marks unmapped."""

    fwd: z3.ExprRef
    bwd: z3.ExprRef

    @staticmethod
    def named(prefix: str = "") -> "Pi":
        arr = z3.ArraySort(ref_sort(), ref_sort())
        return Pi(z3.Const(f"{prefix}$pi.fwd", arr), z3.Const(f"{prefix}$pi.bwd", arr))

    def components(self) -> List[z3.ExprRef]:
        return [self.fwd, self.bwd]


# ========== state predicates ==========


def typing(th: Theory, al: z3.ExprRef, v: z3.ExprRef, t: A.Type) -> z3.BoolRef:
    if t.is_class and t != A.NULLTYPE:
        return z3.Or(v == th.null, al[v] == th.code(t.name))
    if t == A.RGN:
        q = z3.Const("q", ref_sort())
        return z3.ForAll([q], z3.Implies(v[q], z3.Or(q == th.null, al[q] != 0)), patterns=[v[q]])
    return z3.BoolVal(True)


def wf(th: Theory, frame: Frame, fields: Iterable[A.FieldDecl], globals: Iterable[A.GlobalDecl]) -> z3.BoolRef:
    """Null is never allocated, no dangling references, values are well typed."""
    al = frame.alloct
    parts: List[z3.BoolRef] = [al[th.null] == 0]
    p = z3.Const("p", ref_sort())
    for fd in fields:
        if not (fd.ftype.is_class or fd.ftype == A.RGN):
            continue
        h = frame.field(fd.name)
        owned = al[p] == th.code(th.field_class(fd.name))
        parts.append(z3.ForAll([p], z3.Implies(owned, typing(th, al, h[p], fd.ftype)), patterns=[h[p]]))
    for g in globals:
        if g.name in frame.vars:
            parts.append(typing(th, al, frame.vars[g.name], g.gtype))
    return z3.And(parts)


def wr_framed(th: Theory, f: str, al_pre: z3.ExprRef, h_pre: z3.ExprRef, h_post: z3.ExprRef, region: z3.ExprRef) -> z3.BoolRef:
    """Allocated objects of ``f``'s class outside ``region`` keep their ``f``."""
    p = z3.Const("p", ref_sort())
    hyp = z3.And(al_pre[p] == th.code(th.field_class(f)), z3.Not(region[p]))
    return z3.ForAll([p], z3.Implies(hyp, h_post[p] == h_pre[p]), patterns=[h_post[p]])


def alloc_monotone(al_pre: z3.ExprRef, al_post: z3.ExprRef) -> z3.BoolRef:
    p = z3.Const("p", ref_sort())
    return z3.ForAll([p], z3.Implies(al_pre[p] != 0, al_post[p] == al_pre[p]), patterns=[al_post[p]])


def pi_valid(th: Theory, pi: Pi, al_l: z3.ExprRef, al_r: z3.ExprRef) -> z3.BoolRef:
    l = z3.Const("l", ref_sort())
    r = z3.Const("r", ref_sort())
    null = th.null
    fwd_ok = z3.ForAll(
        [l],
        z3.Implies(pi.fwd[l] != null, z3.And(l != null, pi.bwd[pi.fwd[l]] == l, al_l[l] != 0, al_r[pi.fwd[l]] == al_l[l])),
        patterns=[pi.fwd[l]],
    )
    bwd_ok = z3.ForAll(
        [r],
        z3.Implies(pi.bwd[r] != null, z3.And(r != null, pi.fwd[pi.bwd[r]] == r, al_r[r] != 0)),
        patterns=[pi.bwd[r]],
    )
    return z3.And(pi.fwd[null] == null, pi.bwd[null] == null, fwd_ok, bwd_ok)


def pi_extends(new: Pi, old: Pi, null: z3.ExprRef) -> z3.BoolRef:
    l = z3.Const("l", ref_sort())
    return z3.And(
        z3.ForAll([l], z3.Implies(old.fwd[l] != null, new.fwd[l] == old.fwd[l]), patterns=[old.fwd[l]]),
        z3.ForAll([l], z3.Implies(old.bwd[l] != null, new.bwd[l] == old.bwd[l]), patterns=[old.bwd[l]]),
    )


def agree(th: Theory, t: Optional[A.Type], lv: z3.ExprRef, rv: z3.ExprRef, pi: Pi) -> z3.BoolRef:
    """Agreement of a left and a right value modulo the permutation."""
    if t == A.RGN or lv.sort() == region_sort():
        p = z3.Const("p", ref_sort())
        null = th.null
        fwd = z3.ForAll(
            [p],
            z3.Implies(lv[p], z3.If(p == null, rv[null], z3.And(pi.fwd[p] != null, rv[pi.fwd[p]]))),
            patterns=[lv[p]],
        )
        bwd = z3.ForAll(
            [p],
            z3.Implies(rv[p], z3.If(p == null, lv[null], z3.And(pi.bwd[p] != null, lv[pi.bwd[p]]))),
            patterns=[rv[p]],
        )
        return z3.And(fwd, bwd)
    if lv.sort() == ref_sort():
        return z3.And(pi.fwd[lv] == rv, (lv == th.null) == (rv == th.null))
    return lv == rv


# ========== encoder ==========


class Encoder:
    """Translates typed expressions of one world into solver terms over a frame."""

    def __init__(self, th: Theory, world: World):
        self.th = th
        self.world = world
        self._bound = 0

    def _bound_const(self, name: str, sort: z3.SortRef) -> z3.ExprRef:
        self._bound += 1
        return z3.Const(f"{name}%{self._bound}", sort)

    def expr(self, e: A.Expr, cur: Frame, old: Optional[Frame] = None) -> z3.ExprRef:
        th = self.th
        if isinstance(e, A.IntLit):
            return z3.IntVal(e.value)
        if isinstance(e, A.BoolLit):
            return z3.BoolVal(e.value)
        if isinstance(e, A.NullLit):
            return th.null
        if isinstance(e, A.NilLit):
            return intlist_sort().nil  # type: ignore[attr-defined]
        if isinstance(e, A.Var):
            if e.name == "alloc" and "alloc" not in cur.vars:
                p = z3.Const("p", ref_sort())
                return z3.Lambda([p], cur.alloct[p] != 0)
            return cur.var(e.name)
        if isinstance(e, A.FieldRead):
            return z3.Select(cur.field(e.field), self.expr(e.obj, cur, old))
        if isinstance(e, A.Image):
            return th.img[e.field](cur.alloct, cur.field(e.field), self.expr(e.region, cur, old))
        if isinstance(e, A.RegionLit):
            out = z3.EmptySet(ref_sort())
            for x in e.elems:
                out = z3.SetAdd(out, self.expr(x, cur, old))
            return out
        if isinstance(e, A.Unary):
            v = self.expr(e.operand, cur, old)
            return z3.Not(v) if e.op == "not" else -v
        if isinstance(e, A.Binary):
            return self._binary(e, cur, old)
        if isinstance(e, A.Old):
            if old is None:
                raise VcgenError("old(...) without a pre-state", e.span)
            return self.expr(e.expr, old.with_vars({k: v for k, v in cur.vars.items() if k not in old.vars}), old)
        if isinstance(e, A.Call):
            return self._call(e, cur, old)
        if isinstance(e, A.Quant):
            q = self._bound_const(e.var, th.sort(e.vtype))
            body = self.expr(e.body, cur.with_vars({e.var: q}), old.with_vars({e.var: q}) if old else None)
            guard = self._quant_guard(e.vtype, e.domain, q, cur, old)
            if e.kind == "forall":
                return z3.ForAll([q], z3.Implies(guard, body) if guard is not None else body)
            return z3.Exists([q], z3.And(guard, body) if guard is not None else body)
        raise VcgenError(f"cannot encode {type(e).__name__}", e.span)

    def _quant_guard(self, t: A.Type, dom: Optional[A.Expr], q: z3.ExprRef, cur: Frame, old: Optional[Frame]):
        if not t.is_class:
            return None
        g = cur.alloct[q] == self.th.code(t.name)
        if dom is not None:
            g = z3.And(g, self.expr(dom, cur, old)[q])
        return g

    def _binary(self, e: A.Binary, cur: Frame, old: Optional[Frame]) -> z3.ExprRef:
        a = self.expr(e.left, cur, old)
        b = self.expr(e.right, cur, old)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        if op == "%":
            return a % b
        if op == "=":
            return a == b
        if op == "<>":
            return a != b
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == ">":
            return a > b
        if op == ">=":
            return a >= b
        if op == "/\\":
            return z3.And(a, b)
        if op == "\\/":
            return z3.Or(a, b)
        if op == "->":
            return z3.Implies(a, b)
        if op == "<->":
            return a == b
        if op == "++":
            return z3.SetUnion(a, b)
        if op == "--":
            return z3.SetDifference(a, b)
        if op == "^^":
            return z3.SetIntersect(a, b)
        if op == "iin":
            return z3.IsMember(a, b)
        if op == "<<":
            return z3.IsSubset(a, b)
        raise VcgenError(f"unknown operator {op!r}", e.span)

    def _call(self, e: A.Call, cur: Frame, old: Optional[Frame]) -> z3.ExprRef:
        args = [self.expr(a, cur, old) for a in e.args]
        L = intlist_sort()
        if e.name == "cons":
            return L.cons(*args)  # type: ignore[attr-defined]
        if e.name == "hd":
            return L.hd(*args)  # type: ignore[attr-defined]
        if e.name == "tl":
            return L.tl(*args)  # type: ignore[attr-defined]
        if e.name == "len":
            return self.th.length(*args)  # type: ignore[misc]
        if self.world.predicate(e.name) is not None:
            info = self.th.predicates[self.th.predicate_key(self.world, e.name)]
            return self.apply_predicate(info, args, cur)
        raise VcgenError(f"method call {e.name}(...) inside a formula", e.span)

    def apply_predicate(self, info: PredicateInfo, args: Sequence[z3.ExprRef], cur: Frame) -> z3.ExprRef:
        state = [cur.alloct] + [cur.field(f) for f in info.fields] + [cur.var(g) for g, _ in info.globals]
        return info.func(*args, *state)

    def predicate_axiom(self, info: PredicateInfo) -> z3.BoolRef:
        th = self.th
        params = [z3.Const(f"{p.name}", th.sort(p.ptype)) for p in info.decl.params]
        al = z3.Const("al", alloct_sort())
        heap = {f: z3.Const(f"h.{f}", th.field_sort(f)) for f in info.fields}
        glob = {g: z3.Const(g, th.sort(t)) for g, t in info.globals}
        frame = Frame(al, dict(heap), {**glob, **{p.name: c for p, c in zip(info.decl.params, params)}})
        # heaps outside the footprint are never read by the body
        frame.heap.update({f: z3.Const(f"h.{f}", th.field_sort(f)) for f in th.fields if f not in heap})
        bound = params + [al] + [heap[f] for f in info.fields] + [glob[g] for g, _ in info.globals]
        app = info.func(*bound)
        return z3.ForAll(bound, app == self.expr(info.decl.body, frame), patterns=[app])

    # --------- relational formulas ---------

    def rel(
        self,
        rf: A.RelFormula,
        lcur: Frame,
        rcur: Frame,
        pi: Pi,
        lold: Optional[Frame] = None,
        rold: Optional[Frame] = None,
        right: Optional["Encoder"] = None,
    ) -> z3.BoolRef:
        renc = right or self
        if isinstance(rf, A.Agree):
            lv = self.expr(rf.left, lcur, lold)
            rv = renc.expr(rf.right, rcur, rold)
            return agree(self.th, rf.left.ty if rf.left.ty != A.NULLTYPE else rf.right.ty, lv, rv, pi)
        if isinstance(rf, A.LeftF):
            return self.expr(rf.formula, lcur, lold)
        if isinstance(rf, A.RightF):
            return renc.expr(rf.formula, rcur, rold)
        if isinstance(rf, A.BothF):
            return z3.And(self.expr(rf.formula, lcur, lold), renc.expr(rf.formula, rcur, rold))
        if isinstance(rf, A.RBool):
            return z3.BoolVal(rf.value)
        if isinstance(rf, A.RNot):
            return z3.Not(self.rel(rf.operand, lcur, rcur, pi, lold, rold, right))
        if isinstance(rf, A.RBin):
            a = self.rel(rf.left, lcur, rcur, pi, lold, rold, right)
            b = self.rel(rf.right, lcur, rcur, pi, lold, rold, right)
            return {"/\\": z3.And, "\\/": z3.Or, "->": z3.Implies}.get(rf.op, lambda x, y: x == y)(a, b)
        if isinstance(rf, A.RQuant):
            th = self.th
            lq = self._bound_const(rf.lvar, th.sort(rf.ltype))
            # the right variable is the permuted image of the left one
            paired = rf.ltype.is_class and rf.rtype.is_class
            rq = pi.fwd[lq] if paired else self._bound_const(rf.rvar, th.sort(rf.rtype))
            lc, rc = lcur.with_vars({rf.lvar: lq}), rcur.with_vars({rf.rvar: rq})
            lo = lold.with_vars({rf.lvar: lq}) if lold else None
            ro = rold.with_vars({rf.rvar: rq}) if rold else None
            body = self.rel(rf.body, lc, rc, pi, lo, ro, right)
            guards = []
            lg = self._quant_guard(rf.ltype, rf.ldomain, lq, lcur, lold)
            rg = renc._quant_guard(rf.rtype, rf.rdomain, rq, rcur, rold)
            if lg is not None:
                guards.append(lg)
            if rg is not None:
                guards.append(rg)
            if paired:
                guards.append(rq != th.null)
            elif rf.ltype.is_class:
                guards.append(pi.fwd[lq] == rq)
            bound = [lq] if paired else [lq, rq]
            if rf.kind == "forall":
                return z3.ForAll(bound, z3.Implies(z3.And(guards), body) if guards else body)
            return z3.Exists(bound, z3.And(*guards, body) if guards else body)
        raise VcgenError(f"cannot encode relational formula {type(rf).__name__}", rf.span)


# ========== boundaries ==========


def agree_on_boundary(enc: Encoder, b: A.Boundary, s: Frame, t: Frame) -> z3.BoolRef:
    """``s`` and ``t`` agree on every location the boundary denotes in ``s``."""
    parts: List[z3.BoolRef] = []
    for a in b.atoms:
        if isinstance(a, A.Var):
            if a.name == "alloc":
                continue
            parts.append(s.var(a.name) == t.var(a.name))
        elif isinstance(a, A.Image):
            parts.append(_agree_on_image(enc, a, s, t))
    return z3.And(parts) if parts else z3.BoolVal(True)


def _agree_on_image(enc: Encoder, a: A.Image, s: Frame, t: Frame) -> z3.BoolRef:
    """Agreement on ``R`f``. A base that is itself an image ``Q`g`` is unfolded
    through ``g`` so that each agreement instance is triggered by a heap read."""
    th = enc.th
    p = z3.Const("p", ref_sort())
    hs, ht = s.field(a.field), t.field(a.field)
    code = th.code(th.field_class(a.field))
    base = a.region
    if isinstance(base, A.Image) and base.field in th.fields:
        g = th.fields[base.field].ftype
        q = z3.Const("q", ref_sort())
        hg = s.field(base.field)
        outer = z3.And(s.alloct[q] == th.code(th.field_class(base.field)), enc.expr(base.region, s)[q])
        if g == A.RGN:
            hyp = z3.And(outer, hg[q][p], s.alloct[p] == code)
            return z3.ForAll(
                [q, p],
                z3.Implies(hyp, hs[p] == ht[p]),
                patterns=[z3.MultiPattern(hs[p], hg[q][p]), z3.MultiPattern(ht[p], hg[q][p])],
            )
        if g.is_class:
            r = hg[q]
            hyp = z3.And(outer, s.alloct[r] == code)
            return z3.ForAll([q], z3.Implies(hyp, hs[r] == ht[r]), patterns=[hs[r], ht[r]])
    owned = z3.And(s.alloct[p] == code, enc.expr(base, s)[p])
    return z3.ForAll([p], z3.Implies(owned, hs[p] == ht[p]), patterns=[hs[p], ht[p]])


__all__ = [
    "LEFT_SUFFIX",
    "RIGHT_SUFFIX",
    "Frame",
    "Pi",
    "state_frame",
    "snapshot",
    "typing",
    "wf",
    "wr_framed",
    "alloc_monotone",
    "pi_valid",
    "pi_extends",
    "agree",
    "Encoder",
    "agree_on_boundary",
]
