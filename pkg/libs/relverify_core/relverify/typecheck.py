"""Typechecking of worlds and bimodules, plus datagroup expansion.

Every expression comes back annotated with its type. Specs are typed and
expanded per world, since ``G`any`` means all fields of the world's class
table and a module world has more fields than its interface.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Tuple

from .diagnostics import Span, TypecheckError
from .frontend.linker import LinkedProgram, World
from .lang import ast as A

log = logging.getLogger("relverify.typecheck")

DATAGROUP = "any"


@dataclass(frozen=True)
class VarInfo:
    ty: A.Type
    ghost: bool = False
    kind: str = "local"  # local | param | result | global | bound


@dataclass(frozen=True)
class _Ctx:
    allow_old: bool = False
    ghost_ok: bool = True  # spec positions may read ghost state
    datagroup: bool = False
    method_call: bool = False


SPEC = _Ctx()
POST = _Ctx(allow_old=True)
CODE = _Ctx(ghost_ok=False)
GHOST_CODE = _Ctx()


@dataclass(frozen=True)
class TypedProgram(LinkedProgram):
    """A linked program whose worlds and bimodules are typed and datagroup-free."""

    inputs: Tuple[str, ...] = field(default=())


def compatible(t: A.Type, u: A.Type) -> bool:
    if t == u:
        return True
    if t == A.NULLTYPE:
        return u.is_class
    if u == A.NULLTYPE:
        return t.is_class
    return False


class Checker:
    def __init__(self, world: World):
        self.world = world
        self.ct = world.classes

    def error(self, message: str, span: Optional[Span]) -> TypecheckError:
        return TypecheckError(message, span)

    # --------- scopes ---------

    def globals_scope(self) -> Dict[str, VarInfo]:
        return {g.name: VarInfo(g.gtype, g.ghost, "global") for g in self.world.globals}

    def check_type(self, t: A.Type, span: Optional[Span], allow_unit: bool = False) -> None:
        if t == A.UNIT and allow_unit:
            return
        if t.name in A.PRIMITIVE_TYPES and t != A.UNIT:
            return
        if not self.ct.has_class(t.name):
            raise self.error(f"unknown type {t}", span)

    # --------- expressions ---------

    def expr(self, e: A.Expr, sc: Dict[str, VarInfo], ctx: _Ctx) -> A.Expr:
        if isinstance(e, A.IntLit):
            return replace(e, ty=A.INT)
        if isinstance(e, A.BoolLit):
            return replace(e, ty=A.BOOL)
        if isinstance(e, A.NullLit):
            return replace(e, ty=A.NULLTYPE)
        if isinstance(e, A.NilLit):
            return replace(e, ty=A.INTLIST)
        if isinstance(e, A.Var):
            if e.name == "alloc":
                return replace(e, ty=A.RGN)
            info = sc.get(e.name)
            if info is None:
                raise self.error(f"unbound identifier {e.name!r}", e.span)
            if info.ghost and not ctx.ghost_ok:
                raise self.error(f"ghost variable {e.name!r} read in non-ghost code", e.span)
            return replace(e, ty=info.ty)
        if isinstance(e, A.FieldRead):
            obj = self.expr(e.obj, sc, ctx)
            fd = self._field_of(obj.ty, e.field, e.span)
            if fd.ghost and not ctx.ghost_ok:
                raise self.error(f"ghost field {e.field!r} read in non-ghost code", e.span)
            return replace(e, obj=obj, ty=fd.ftype)
        if isinstance(e, A.Image):
            region = self.expr(e.region, sc, ctx)
            if region.ty != A.RGN:
                raise self.error(f"image base must be a region, got {region.ty}", e.span)
            if e.field == DATAGROUP:
                if not ctx.datagroup:
                    raise self.error("datagroup `any is only allowed in effects and boundaries", e.span)
            else:
                fd = self.ct.field(e.field)
                if fd is None:
                    raise self.error(f"unknown field {e.field!r}", e.span)
                if fd.ghost and not ctx.ghost_ok:
                    raise self.error(f"ghost field {e.field!r} read in non-ghost code", e.span)
            return replace(e, region=region, ty=A.RGN)
        if isinstance(e, A.RegionLit):
            elems = tuple(self.expr(x, sc, ctx) for x in e.elems)
            for x in elems:
                if not (x.ty == A.NULLTYPE or x.ty.is_class):  # type: ignore[union-attr]
                    raise self.error(f"region element must be a reference, got {x.ty}", x.span)
            return replace(e, elems=elems, ty=A.RGN)
        if isinstance(e, A.Unary):
            operand = self.expr(e.operand, sc, ctx)
            want = A.BOOL if e.op == "not" else A.INT
            self._expect(operand, want)
            return replace(e, operand=operand, ty=want)
        if isinstance(e, A.Binary):
            return self._binary(e, sc, ctx)
        if isinstance(e, A.Old):
            if not ctx.allow_old:
                raise self.error("old(...) is only allowed in postconditions, loop invariants and assertions", e.span)
            inner = self.expr(e.expr, sc, ctx)
            return replace(e, expr=inner, ty=inner.ty)
        if isinstance(e, A.Call):
            return self._call(e, sc, ctx)
        if isinstance(e, A.Quant):
            self.check_type(e.vtype, e.span)
            dom = None
            if e.domain is not None:
                if not e.vtype.is_class:
                    raise self.error("only class-typed quantifiers may be bounded by a region", e.span)
                dom = self.expr(e.domain, sc, ctx)
                self._expect(dom, A.RGN)
            inner = dict(sc)
            inner[e.var] = VarInfo(e.vtype, False, "bound")
            body = self.expr(e.body, inner, ctx)
            self._expect(body, A.BOOL)
            return replace(e, domain=dom, body=body, ty=A.BOOL)
        raise self.error(f"unsupported expression {type(e).__name__}", e.span)

    def _expect(self, e: A.Expr, want: A.Type) -> None:
        if not compatible(e.ty, want):  # type: ignore[arg-type]
            raise self.error(f"type mismatch: expected {want}, got {e.ty}", e.span)

    def _field_of(self, t: Optional[A.Type], fname: str, span: Optional[Span]) -> A.FieldDecl:
        if t is None or not t.is_class or t == A.NULLTYPE:
            raise self.error(f"field access .{fname} on non-object type {t}", span)
        owner = self.ct.owner(fname)
        if owner != t.name:
            raise self.error(f"class {t} has no field {fname!r}", span)
        return self.ct.field(fname)  # type: ignore[return-value]

    def _binary(self, e: A.Binary, sc: Dict[str, VarInfo], ctx: _Ctx) -> A.Expr:
        left = self.expr(e.left, sc, ctx)
        right = self.expr(e.right, sc, ctx)
        op = e.op
        if op in A.ARITH_OPS:
            self._expect(left, A.INT)
            self._expect(right, A.INT)
            ty = A.INT
        elif op in ("=", "<>"):
            if not compatible(left.ty, right.ty):  # type: ignore[arg-type]
                raise self.error(f"cannot compare {left.ty} with {right.ty}", e.span)
            ty = A.BOOL
        elif op in A.COMPARE_OPS:
            self._expect(left, A.INT)
            self._expect(right, A.INT)
            ty = A.BOOL
        elif op in A.LOGIC_OPS:
            self._expect(left, A.BOOL)
            self._expect(right, A.BOOL)
            ty = A.BOOL
        elif op in A.REGION_OPS:
            self._expect(left, A.RGN)
            self._expect(right, A.RGN)
            ty = A.RGN
        elif op == "iin":
            if not (left.ty == A.NULLTYPE or left.ty.is_class):  # type: ignore[union-attr]
                raise self.error(f"iin expects a reference on the left, got {left.ty}", e.span)
            self._expect(right, A.RGN)
            ty = A.BOOL
        elif op == "<<":
            self._expect(left, A.RGN)
            self._expect(right, A.RGN)
            ty = A.BOOL
        else:
            raise self.error(f"unknown operator {op!r}", e.span)
        return replace(e, left=left, right=right, ty=ty)

    def _call(self, e: A.Call, sc: Dict[str, VarInfo], ctx: _Ctx) -> A.Expr:
        args = tuple(self.expr(a, sc, ctx) for a in e.args)
        sigs = {
            "cons": ((A.INT, A.INTLIST), A.INTLIST),
            "hd": ((A.INTLIST,), A.INT),
            "tl": ((A.INTLIST,), A.INTLIST),
            "len": ((A.INTLIST,), A.INT),
        }
        if e.name in sigs:
            params, ret = sigs[e.name]
            self._check_args(e, args, params)
            return replace(e, args=args, ty=ret)
        pred = self.world.predicate(e.name)
        if pred is not None:
            self._check_args(e, args, tuple(p.ptype for p in pred.params))
            return replace(e, args=args, ty=A.BOOL)
        meth = self.world.method(e.name)
        if meth is not None:
            if not ctx.method_call:
                raise self.error(f"method call {e.name}(...) is only allowed as a command or assignment source", e.span)
            self._check_args(e, args, tuple(p.ptype for p in meth.params))
            return replace(e, args=args, ty=meth.ret)
        raise self.error(f"unknown function {e.name!r}", e.span)

    def _check_args(self, e: A.Call, args: Tuple[A.Expr, ...], params: Tuple[A.Type, ...]) -> None:
        if len(args) != len(params):
            raise self.error(f"{e.name} expects {len(params)} arguments, got {len(args)}", e.span)
        for a, t in zip(args, params):
            self._expect(a, t)

    # --------- commands ---------

    def cmd(self, c: A.Command, sc: Dict[str, VarInfo]) -> A.Command:
        if isinstance(c, A.Skip):
            return c
        if isinstance(c, A.Seq):
            return replace(c, items=tuple(self.cmd(x, sc) for x in c.items))
        if isinstance(c, A.VarBlock):
            if c.name in sc or c.name == "alloc":
                raise self.error(f"duplicate variable {c.name!r}", c.span)
            self.check_type(c.vtype, c.span)
            inner = dict(sc)
            inner[c.name] = VarInfo(c.vtype, c.ghost, "local")
            return replace(c, body=self.cmd(c.body, inner))
        if isinstance(c, A.Assign):
            info = self._target(c.target, sc, c.span)
            ctx = GHOST_CODE if info.ghost else CODE
            if isinstance(c.value, A.Call) and self.world.method(c.value.name) is not None:
                if info.ghost:
                    raise self.error(f"ghost write from non-ghost code: {c.target!r} assigned from a method call", c.span)
                value = self.expr(c.value, sc, replace(ctx, method_call=True))
            else:
                value = self.expr(c.value, sc, ctx)
            if not compatible(value.ty, info.ty):  # type: ignore[arg-type]
                raise self.error(f"cannot assign {value.ty} to {c.target!r} of type {info.ty}", c.span)
            return replace(c, value=value)
        if isinstance(c, A.FieldAssign):
            info = sc.get(c.obj)
            if info is None:
                raise self.error(f"unbound identifier {c.obj!r}", c.span)
            if info.ghost:
                raise self.error(f"ghost variable {c.obj!r} read in non-ghost code", c.span)
            fd = self._field_of(info.ty, c.field, c.span)
            value = self.expr(c.value, sc, GHOST_CODE if fd.ghost else CODE)
            if not compatible(value.ty, fd.ftype):  # type: ignore[arg-type]
                raise self.error(f"cannot assign {value.ty} to field {c.field!r} of type {fd.ftype}", c.span)
            return replace(c, value=value)
        if isinstance(c, A.New):
            info = self._target(c.target, sc, c.span)
            if not self.ct.has_class(c.cls):
                raise self.error(f"unknown class {c.cls!r}", c.span)
            if info.ty != A.Type(c.cls):
                raise self.error(f"cannot assign new {c.cls} to {c.target!r} of type {info.ty}", c.span)
            return c
        if isinstance(c, A.If):
            cond = self.expr(c.cond, sc, CODE)
            self._expect(cond, A.BOOL)
            return replace(c, cond=cond, then=self.cmd(c.then, sc), orelse=self.cmd(c.orelse, sc))
        if isinstance(c, A.While):
            cond = self.expr(c.cond, sc, CODE)
            self._expect(cond, A.BOOL)
            invs = tuple(self._formula(i, sc, POST) for i in c.invariants)
            return replace(c, cond=cond, invariants=invs, body=self.cmd(c.body, sc))
        if isinstance(c, A.CallCmd):
            meth = self.world.method(c.method)
            if meth is None:
                raise self.error(f"unknown method {c.method!r}", c.span)
            args = tuple(self.expr(a, sc, CODE) for a in c.args)
            self._check_args(A.Call(c.method, c.args, span=c.span), args, tuple(p.ptype for p in meth.params))
            return replace(c, args=args)
        if isinstance(c, A.Assert):
            return replace(c, formula=self._formula(c.formula, sc, POST))
        if isinstance(c, A.Assume):
            return replace(c, formula=self._formula(c.formula, sc, POST))
        raise self.error(f"unsupported command {type(c).__name__}", c.span)

    def _target(self, name: str, sc: Dict[str, VarInfo], span: Optional[Span]) -> VarInfo:
        info = sc.get(name)
        if info is None:
            raise self.error(f"unbound identifier {name!r}", span)
        if info.kind == "bound":
            raise self.error(f"cannot assign to bound variable {name!r}", span)
        return info

    def _formula(self, f: A.Expr, sc: Dict[str, VarInfo], ctx: _Ctx) -> A.Expr:
        out = self.expr(f, sc, ctx)
        self._expect(out, A.BOOL)
        return out

    # --------- declarations ---------

    def effect(self, eff: Optional[A.Effect], sc: Dict[str, VarInfo]) -> Optional[A.Effect]:
        if eff is None:
            return None
        ctx = _Ctx(datagroup=True)
        atoms = []
        for a in eff.atoms:
            atoms.append(replace(a, target=self.expr(a.target, sc, ctx)))
        return expand_datagroups(replace(eff, atoms=tuple(atoms)), self.ct)

    def method_scope(self, m: A.MethodDecl) -> Dict[str, VarInfo]:
        sc = self.globals_scope()
        for p in m.params:
            self.check_type(p.ptype, p.span)
            if p.name in sc or p.name in ("alloc", "result"):
                raise self.error(f"duplicate variable {p.name!r}", p.span)
            sc[p.name] = VarInfo(p.ptype, False, "param")
        return sc

    def method(self, m: A.MethodDecl) -> A.MethodDecl:
        self.check_type(m.ret, m.span, allow_unit=True)
        sc = self.method_scope(m)
        requires = tuple(self._formula(r, sc, SPEC) for r in m.spec.requires)
        post_sc = dict(sc)
        if m.ret != A.UNIT:
            post_sc["result"] = VarInfo(m.ret, False, "result")
        ensures = tuple(self._formula(e, post_sc, POST) for e in m.spec.ensures)
        effects = self.effect(m.spec.effects, sc)
        body = self.cmd(m.body, post_sc) if m.body is not None else None
        spec = replace(m.spec, requires=requires, ensures=ensures, effects=effects)
        return replace(m, spec=spec, body=body)

    def predicate(self, p: A.PredicateDecl) -> A.PredicateDecl:
        sc = self.globals_scope()
        for prm in p.params:
            self.check_type(prm.ptype, prm.span)
            sc[prm.name] = VarInfo(prm.ptype, False, "param")
        return replace(p, body=self._formula(p.body, sc, SPEC))

    def invariant(self, inv: A.InvariantDecl) -> A.InvariantDecl:
        return replace(inv, formula=self._formula(inv.formula, self.globals_scope(), SPEC))

    def boundary(self, b: A.Boundary, ct: Optional[A.ClassTable] = None) -> A.Boundary:
        sc = self.globals_scope()
        ctx = _Ctx(datagroup=True)
        atoms = []
        for a in b.atoms:
            t = self.expr(a, sc, ctx)
            if isinstance(t, A.Var) and t.name != "alloc" and sc.get(t.name, VarInfo(A.UNIT)).kind != "global":
                raise self.error(f"boundary variable {t.name!r} is not a global", a.span)
            atoms.append(t)
        return expand_datagroups(replace(b, atoms=tuple(atoms)), ct or self.ct)


class RelChecker:
    """Types relational formulas and biprograms against a pair of worlds."""

    def __init__(self, left: World, right: World):
        self.lc = Checker(left)
        self.rc = Checker(right)

    def rel(self, rf: A.RelFormula, lsc: Dict[str, VarInfo], rsc: Dict[str, VarInfo], ctx: _Ctx) -> A.RelFormula:
        if isinstance(rf, A.Agree):
            left = self.lc.expr(rf.left, lsc, ctx)
            right = self.rc.expr(rf.right, rsc, ctx)
            if not compatible(left.ty, right.ty):  # type: ignore[arg-type]
                raise TypecheckError(f"agreement between unequal types {left.ty} and {right.ty}", rf.span)
            return replace(rf, left=left, right=right)
        if isinstance(rf, A.LeftF):
            return replace(rf, formula=self.lc._formula(rf.formula, lsc, ctx))
        if isinstance(rf, A.RightF):
            return replace(rf, formula=self.rc._formula(rf.formula, rsc, ctx))
        if isinstance(rf, A.BothF):
            return A.RBin(
                "/\\",
                A.LeftF(self.lc._formula(rf.formula, lsc, ctx), span=rf.span),
                A.RightF(self.rc._formula(rf.formula, rsc, ctx), span=rf.span),
                span=rf.span,
            )
        if isinstance(rf, A.RBool):
            return rf
        if isinstance(rf, A.RNot):
            return replace(rf, operand=self.rel(rf.operand, lsc, rsc, ctx))
        if isinstance(rf, A.RBin):
            return replace(rf, left=self.rel(rf.left, lsc, rsc, ctx), right=self.rel(rf.right, lsc, rsc, ctx))
        if isinstance(rf, A.RQuant):
            self.lc.check_type(rf.ltype, rf.span)
            self.rc.check_type(rf.rtype, rf.span)
            ldom = rdom = None
            if rf.ldomain is not None:
                ldom = self.lc.expr(rf.ldomain, lsc, ctx)
                self.lc._expect(ldom, A.RGN)
            if rf.rdomain is not None:
                rdom = self.rc.expr(rf.rdomain, rsc, ctx)
                self.rc._expect(rdom, A.RGN)
            if rf.ltype.is_class != rf.rtype.is_class:
                raise TypecheckError("quantified pair mixes a reference and a value type", rf.span)
            lin = dict(lsc)
            lin[rf.lvar] = VarInfo(rf.ltype, False, "bound")
            rin = dict(rsc)
            rin[rf.rvar] = VarInfo(rf.rtype, False, "bound")
            return replace(rf, ldomain=ldom, rdomain=rdom, body=self.rel(rf.body, lin, rin, ctx))
        raise TypecheckError(f"unsupported relational formula {type(rf).__name__}", rf.span)

    def bi(self, b: A.Biprogram, lsc: Dict[str, VarInfo], rsc: Dict[str, VarInfo]) -> A.Biprogram:
        if isinstance(b, A.BSplit):
            return replace(b, left=self.lc.cmd(b.left, lsc), right=self.rc.cmd(b.right, rsc))
        if isinstance(b, A.BSync):
            typed = self.lc.cmd(b.cmd, lsc)
            self.rc.cmd(b.cmd, rsc)
            return replace(b, cmd=typed)
        if isinstance(b, A.BSeq):
            return replace(b, items=tuple(self.bi(x, lsc, rsc) for x in b.items))
        if isinstance(b, A.BVar):
            for name, sc, t, chk in ((b.lname, lsc, b.ltype, self.lc), (b.rname, rsc, b.rtype, self.rc)):
                if name in sc or name == "alloc":
                    raise TypecheckError(f"duplicate variable {name!r}", b.span)
                chk.check_type(t, b.span)
            lin = dict(lsc)
            lin[b.lname] = VarInfo(b.ltype)
            rin = dict(rsc)
            rin[b.rname] = VarInfo(b.rtype)
            return replace(b, body=self.bi(b.body, lin, rin))
        if isinstance(b, A.BIf):
            lcond = self.lc.expr(b.lcond, lsc, CODE)
            rcond = self.rc.expr(b.rcond, rsc, CODE)
            self.lc._expect(lcond, A.BOOL)
            self.rc._expect(rcond, A.BOOL)
            return replace(b, lcond=lcond, rcond=rcond, then=self.bi(b.then, lsc, rsc), orelse=self.bi(b.orelse, lsc, rsc))
        if isinstance(b, A.BWhile):
            lcond = self.lc.expr(b.lcond, lsc, CODE)
            rcond = self.rc.expr(b.rcond, rsc, CODE)
            self.lc._expect(lcond, A.BOOL)
            self.rc._expect(rcond, A.BOOL)
            lg = self.rel(b.lguard, lsc, rsc, SPEC) if b.lguard is not None else None
            rg = self.rel(b.rguard, lsc, rsc, SPEC) if b.rguard is not None else None
            invs = tuple(self.rel(i, lsc, rsc, POST) for i in b.invariants)
            return replace(b, lcond=lcond, rcond=rcond, lguard=lg, rguard=rg, invariants=invs, body=self.bi(b.body, lsc, rsc))
        if isinstance(b, A.BAssert):
            return replace(b, formula=self.rel(b.formula, lsc, rsc, POST))
        if isinstance(b, A.BCall):
            if self.lc.world.method(b.method) is None or self.rc.world.method(b.method) is None:
                raise TypecheckError(f"aligned call of {b.method!r} needs a method on both sides", b.span)
            if (b.ltarget is None) != (b.rtarget is None):
                raise TypecheckError("aligned call binds a result on one side only", b.span)
            lcmd = self.lc.cmd(b.side_command(True), lsc)
            rcmd = self.rc.cmd(b.side_command(False), rsc)
            return replace(b, largs=_call_args(lcmd), rargs=_call_args(rcmd))
        raise TypecheckError(f"unsupported biprogram {type(b).__name__}", b.span)

    def bimethod(self, m: A.BiMethodDecl) -> A.BiMethodDecl:
        lsc = self.lc.method_scope(A.MethodDecl(m.name, m.lparams, m.lret, A.Spec(), None, span=m.span))
        rsc = self.rc.method_scope(A.MethodDecl(m.name, m.rparams, m.rret, A.Spec(), None, span=m.span))
        requires = tuple(self.rel(r, lsc, rsc, SPEC) for r in m.spec.requires)
        lpost, rpost = dict(lsc), dict(rsc)
        if m.lret != A.UNIT:
            lpost["result"] = VarInfo(m.lret, False, "result")
        if m.rret != A.UNIT:
            rpost["result"] = VarInfo(m.rret, False, "result")
        ensures = tuple(self.rel(e, lpost, rpost, POST) for e in m.spec.ensures)
        body = self.bi(m.body, lpost, rpost) if m.body is not None else None
        return replace(m, spec=replace(m.spec, requires=requires, ensures=ensures), body=body)

    def coupling(self, c: A.CouplingDecl) -> A.CouplingDecl:
        return replace(c, formula=self.rel(c.formula, self.lc.globals_scope(), self.rc.globals_scope(), SPEC))


def _call_args(c: A.Command) -> Tuple[A.Expr, ...]:
    if isinstance(c, A.CallCmd):
        return c.args
    assert isinstance(c, A.Assign) and isinstance(c.value, A.Call)
    return c.value.args


# --------- datagroups ---------


def expand_datagroups(x, ct: A.ClassTable):
    """Replace every ``G`any`` by the images of all fields of ``ct``.

    Accepts an Effect, a Boundary, or a region expression. Atoms whose region
    is the empty literal are dropped.
    """
    if isinstance(x, A.Effect):
        atoms: List[A.EffectAtom] = []
        for a in x.atoms:
            for t in _expand_atom(a.target, ct):
                atoms.append(replace(a, target=t))
        return replace(x, atoms=tuple(atoms))
    if isinstance(x, A.Boundary):
        out: List[A.Expr] = []
        for a in x.atoms:
            out.extend(_expand_atom(a, ct))
        return replace(x, atoms=tuple(out))
    return _expand_region(x, ct)


def _expand_atom(t: A.Expr, ct: A.ClassTable) -> List[A.Expr]:
    if isinstance(t, A.Image):
        region = _expand_region(t.region, ct)
        if isinstance(region, A.RegionLit) and not region.elems:
            return []
        if t.field == DATAGROUP:
            return [A.Image(region, f.name, ty=A.RGN, span=t.span) for f in ct.all_fields()]
        return [replace(t, region=region)]
    return [t]


def _expand_region(e: A.Expr, ct: A.ClassTable) -> A.Expr:
    if isinstance(e, A.Image):
        region = _expand_region(e.region, ct)
        if e.field != DATAGROUP:
            return replace(e, region=region)
        parts: List[A.Expr] = [A.Image(region, f.name, ty=A.RGN, span=e.span) for f in ct.all_fields()]
        if not parts:
            return A.RegionLit((), ty=A.RGN, span=e.span)
        out = parts[0]
        for p in parts[1:]:
            out = A.Binary("++", out, p, ty=A.RGN, span=e.span)
        return out
    if isinstance(e, A.Binary) and e.op in A.REGION_OPS:
        return replace(e, left=_expand_region(e.left, ct), right=_expand_region(e.right, ct))
    return e


# --------- entry points ---------


def _owned_classes(world: World, units: Mapping[str, A.CompilationUnit], owner: str) -> A.ClassTable:
    owners = [n for n in world.units if n == owner or units[n].iface == owner]
    allowed = {f.name for n in owners for c in units[n].classes for f in c.fields}
    return A.ClassTable(
        tuple(replace(c, fields=tuple(f for f in c.fields if f.name in allowed)) for c in world.classes.classes)
    )


def typecheck_world(world: World, units: Optional[Mapping[str, A.CompilationUnit]] = None) -> World:
    """Type a world. With ``units``, boundary datagroups range over the owning
    interface and its implementing modules only."""
    chk = Checker(world)
    for c in world.classes.classes:
        for f in c.fields:
            chk.check_type(f.ftype, f.span)
    for g in world.globals:
        chk.check_type(g.gtype, g.span)
    preds = tuple(chk.predicate(p) for p in world.predicates)
    methods = tuple(chk.method(m) for m in world.methods)
    invariants = tuple(chk.invariant(i) for i in world.invariants)
    boundaries = tuple(
        chk.boundary(b, _owned_classes(world, units, b.owner) if units is not None else None) for b in world.boundaries
    )
    log.debug("typed world %s: %d methods", world.name, len(methods))
    return replace(world, predicates=preds, methods=methods, invariants=invariants, boundaries=boundaries)


def typecheck(lp: LinkedProgram, inputs: Tuple[str, ...] = ()) -> TypedProgram:
    worlds = {name: typecheck_world(w, lp.units) for name, w in sorted(lp.worlds.items())}
    units = dict(lp.units)
    for u in sorted(lp.bimodules(), key=lambda x: x.name):
        rc = RelChecker(worlds[u.left], worlds[u.right])  # type: ignore[index]
        couplings = tuple(rc.coupling(c) for c in u.couplings)
        bimethods = tuple(rc.bimethod(m) for m in u.bimethods)
        units[u.name] = replace(u, couplings=couplings, bimethods=bimethods)
    log.info("typechecked %d worlds", len(worlds))
    return TypedProgram(units, worlds, lp.main, inputs=tuple(inputs))


__all__ = [
    "TypedProgram",
    "VarInfo",
    "Checker",
    "RelChecker",
    "compatible",
    "expand_datagroups",
    "typecheck",
    "typecheck_world",
]
