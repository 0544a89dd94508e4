"""Product construction: from a typed biprogram to a program over state pairs.

The product acts on a left state, a right state and a reference permutation
relating their allocations. One-sided commands stay unary; aligned
conditionals and loops carry guard-agreement checks; paired allocations and
aligned calls are the only points where the permutation grows.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..constants import KIND_ADEQUACY_INV, KIND_ASSERT, KIND_GUARD_AGREE
from ..diagnostics import AlignmentError, Span
from ..lang import ast as A
from ..lang.desugar import desugar_both, walk
from ..lang.pretty import pretty_command, pretty_expr, pretty_rel
from .projection import LEFT, RIGHT, project

log = logging.getLogger("relverify.align")

# kind of a user-written loop invariant in PLoop.invariants
INVARIANT = "invariant"


# ========== product IR ==========


@dataclass(frozen=True)
class PNode:
    span: Optional[Span] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class POne(PNode):
    side: str
    cmd: A.Command


@dataclass(frozen=True)
class PAssert(PNode):
    formula: A.RelFormula
    kind: str = KIND_ASSERT


@dataclass(frozen=True)
class PAssume(PNode):
    formula: A.RelFormula


@dataclass(frozen=True)
class PVar(PNode):
    lname: str
    ltype: A.Type
    rname: str
    rtype: A.Type
    body: PNode


@dataclass(frozen=True)
class PIf(PNode):
    lcond: A.Expr
    rcond: A.Expr
    then: PNode
    orelse: PNode


@dataclass(frozen=True)
class PLoop(PNode):
    """Lockstep loop on the left guard; guard agreement is one of the invariants."""

    lcond: A.Expr
    rcond: A.Expr
    invariants: Tuple[Tuple[A.RelFormula, str], ...]
    body: PNode


@dataclass(frozen=True)
class PGuardedLoop(PNode):
    lcond: A.Expr
    rcond: A.Expr
    lguard: Optional[A.RelFormula]
    rguard: Optional[A.RelFormula]
    invariants: Tuple[Tuple[A.RelFormula, str], ...]
    left: A.Command
    right: A.Command
    body: PNode

    @property
    def adequacy(self) -> A.RelFormula:
        return adequacy_invariant(self.lcond, self.rcond, self.lguard, self.rguard)


@dataclass(frozen=True)
class PAlloc(PNode):
    lvar: str
    rvar: str
    cls: str


@dataclass(frozen=True)
class PCall(PNode):
    method: str
    largs: Tuple[A.Expr, ...]
    rargs: Tuple[A.Expr, ...]
    ltarget: Optional[str] = None
    rtarget: Optional[str] = None


@dataclass(frozen=True)
class PSeq(PNode):
    items: Tuple[PNode, ...]


@dataclass(frozen=True)
class ProductIR:
    name: str
    lparams: Tuple[A.Param, ...]
    rparams: Tuple[A.Param, ...]
    lret: A.Type
    rret: A.Type
    body: PNode


def pseq(*items: PNode) -> PNode:
    flat: List[PNode] = []
    for it in items:
        if isinstance(it, PSeq):
            flat.extend(it.items)
        elif not (isinstance(it, POne) and isinstance(it.cmd, A.Skip)):
            flat.append(it)
    if len(flat) == 1:
        return flat[0]
    return PSeq(tuple(flat))


# ========== formulas ==========


def guard_agreement(lcond: A.Expr, rcond: A.Expr, span: Optional[Span] = None) -> A.RelFormula:
    return A.RBin("<->", A.LeftF(lcond, span=span), A.RightF(rcond, span=span), span=span)


def adequacy_invariant(
    lcond: A.Expr, rcond: A.Expr, lguard: Optional[A.RelFormula], rguard: Optional[A.RelFormula]
) -> A.RelFormula:
    """Every iteration state is left-only, right-only, lockstep, or finished."""
    lc, rc = A.LeftF(lcond), A.RightF(rcond)
    nl = A.LeftF(A.Unary("not", lcond, ty=A.BOOL))
    nr = A.RightF(A.Unary("not", rcond, ty=A.BOOL))
    parts: List[A.RelFormula] = []
    if lguard is not None:
        parts.append(A.RBin("/\\", lc, lguard))
    if rguard is not None:
        parts.append(A.RBin("/\\", rc, rguard))
    parts.append(A.RBin("/\\", lc, rc))
    parts.append(A.RBin("/\\", nl, nr))
    out = parts[0]
    for p in parts[1:]:
        out = A.RBin("\\/", out, p)
    return out


def check_guard_fragment(rf: A.RelFormula) -> None:
    """Alignment guards must be quantifier-free boolean combinations of
    agreements and one-sided formulas."""
    rf = desugar_both(rf)
    if isinstance(rf, A.RBool):
        return
    if isinstance(rf, A.RNot):
        return check_guard_fragment(rf.operand)
    if isinstance(rf, A.RBin):
        check_guard_fragment(rf.left)
        check_guard_fragment(rf.right)
        return
    if isinstance(rf, A.Agree):
        exprs = [rf.left, rf.right]
    elif isinstance(rf, (A.LeftF, A.RightF)):
        exprs = [rf.formula]
    else:
        raise AlignmentError(f"alignment guard outside the supported fragment: {pretty_rel(rf)}", rf.span)
    for e in exprs:
        for sub in walk(e):
            if isinstance(sub, (A.Quant, A.Old)):
                raise AlignmentError(
                    f"alignment guard outside the supported fragment: {pretty_expr(sub)}", sub.span or rf.span
                )


# ========== construction ==========


def _method_call(value: A.Expr, is_method) -> Optional[A.Call]:
    if isinstance(value, A.Call) and is_method(value.name):
        return value
    return None


def _sync(c: A.Command, is_method) -> PNode:
    if isinstance(c, A.Seq):
        return pseq(*(_sync(x, is_method) for x in c.items))
    if isinstance(c, A.VarBlock):
        return PVar(c.name, c.vtype, c.name, c.vtype, _sync(c.body, is_method), span=c.span)
    if isinstance(c, A.New):
        return PAlloc(c.target, c.target, c.cls, span=c.span)
    if isinstance(c, A.CallCmd):
        return PCall(c.method, c.args, c.args, span=c.span)
    if isinstance(c, A.Assign):
        call = _method_call(c.value, is_method)
        if call is not None:
            return PCall(call.name, call.args, call.args, c.target, c.target, span=c.span)
    if isinstance(c, A.Skip):
        return POne(LEFT, c, span=c.span)
    return pseq(POne(LEFT, c, span=c.span), POne(RIGHT, c, span=c.span))


def _build(bi: A.Biprogram, is_method) -> PNode:
    if isinstance(bi, A.BSplit):
        return pseq(POne(LEFT, bi.left, span=bi.span), POne(RIGHT, bi.right, span=bi.span))
    if isinstance(bi, A.BSync):
        return _sync(bi.cmd, is_method)
    if isinstance(bi, A.BSeq):
        return pseq(*(_build(x, is_method) for x in bi.items))
    if isinstance(bi, A.BVar):
        return PVar(bi.lname, bi.ltype, bi.rname, bi.rtype, _build(bi.body, is_method), span=bi.span)
    if isinstance(bi, A.BIf):
        agree = PAssert(guard_agreement(bi.lcond, bi.rcond, bi.span), KIND_GUARD_AGREE, span=bi.span)
        branch = PIf(bi.lcond, bi.rcond, _build(bi.then, is_method), _build(bi.orelse, is_method), span=bi.span)
        return pseq(agree, branch)
    if isinstance(bi, A.BWhile):
        invs = tuple((desugar_both(i), INVARIANT) for i in bi.invariants)
        body = _build(bi.body, is_method)
        if not bi.guarded:
            invs = invs + ((guard_agreement(bi.lcond, bi.rcond, bi.span), KIND_GUARD_AGREE),)
            return PLoop(bi.lcond, bi.rcond, invs, body, span=bi.span)
        for g in (bi.lguard, bi.rguard):
            if g is not None:
                check_guard_fragment(g)
        lg = desugar_both(bi.lguard) if bi.lguard is not None else None
        rg = desugar_both(bi.rguard) if bi.rguard is not None else None
        invs = invs + ((adequacy_invariant(bi.lcond, bi.rcond, lg, rg), KIND_ADEQUACY_INV),)
        return PGuardedLoop(
            bi.lcond, bi.rcond, lg, rg, invs,
            project(bi.body, LEFT), project(bi.body, RIGHT), body, span=bi.span,
        )
    if isinstance(bi, A.BAssert):
        return PAssert(desugar_both(bi.formula), KIND_ASSERT, span=bi.span)
    if isinstance(bi, A.BCall):
        return PCall(bi.method, bi.largs, bi.rargs, bi.ltarget, bi.rtarget, span=bi.span)
    raise TypeError(f"not a biprogram: {bi!r}")


def build_product(m: A.BiMethodDecl, is_method=lambda name: False) -> ProductIR:
    """Product of bimethod ``m``.

    ``is_method`` tells method calls apart from predicate and math
    applications on the right of synchronized assignments.
    """
    if m.body is None:
        raise AlignmentError(f"bimethod {m.name!r} has no body", m.span)
    body = _build(m.body, is_method)
    log.debug("product for %s built", m.name)
    return ProductIR(m.name, m.lparams, m.rparams, m.lret, m.rret, body)


# ========== dump ==========


def _lines(p: PNode, d: int) -> List[str]:
    pad = "  " * d
    if isinstance(p, PSeq):
        out: List[str] = []
        for it in p.items:
            out.extend(_lines(it, d))
        return out
    if isinstance(p, POne):
        mark = "<|" if p.side == LEFT else "|>"
        return [f"{pad}{mark} {line.strip()}" for line in pretty_command(p.cmd).splitlines()]
    if isinstance(p, PAssert):
        return [f"{pad}assert[{p.kind}] {pretty_rel(p.formula)}"]
    if isinstance(p, PAssume):
        return [f"{pad}assume {pretty_rel(p.formula)}"]
    if isinstance(p, PVar):
        return [f"{pad}var {p.lname}: {p.ltype} | {p.rname}: {p.rtype}"] + _lines(p.body, d + 1)
    if isinstance(p, PIf):
        return (
            [f"{pad}if {pretty_expr(p.lcond)} | {pretty_expr(p.rcond)}"]
            + _lines(p.then, d + 1) + [f"{pad}else"] + _lines(p.orelse, d + 1)
        )
    if isinstance(p, PLoop):
        head = [f"{pad}loop {pretty_expr(p.lcond)} | {pretty_expr(p.rcond)}"]
        invs = [f"{pad}  invariant[{k}] {pretty_rel(f)}" for f, k in p.invariants]
        return head + invs + _lines(p.body, d + 1)
    if isinstance(p, PGuardedLoop):
        head = [f"{pad}guarded loop {pretty_expr(p.lcond)} | {pretty_expr(p.rcond)}"]
        invs = [f"{pad}  invariant[{k}] {pretty_rel(f)}" for f, k in p.invariants]
        lg = pretty_rel(p.lguard) if p.lguard is not None else "false"
        rg = pretty_rel(p.rguard) if p.rguard is not None else "false"
        return (
            head + invs
            + [f"{pad}  left-only when {lg}"] + [f"{pad}    <| {x.strip()}" for x in pretty_command(p.left).splitlines()]
            + [f"{pad}  right-only when {rg}"] + [f"{pad}    |> {x.strip()}" for x in pretty_command(p.right).splitlines()]
            + [f"{pad}  lockstep"] + _lines(p.body, d + 2)
        )
    if isinstance(p, PAlloc):
        return [f"{pad}{p.lvar} | {p.rvar} := new {p.cls} (paired)"]
    if isinstance(p, PCall):
        la = ", ".join(pretty_expr(a) for a in p.largs)
        ra = ", ".join(pretty_expr(a) for a in p.rargs)
        tgt = f"{p.ltarget} | {p.rtarget} := " if p.ltarget is not None else ""
        return [f"{pad}{tgt}{p.method}({la} | {ra}) (aligned)"]
    raise TypeError(f"not a product node: {p!r}")


def pretty_product(p: ProductIR) -> str:
    return f"product {p.name}\n" + "\n".join(_lines(p.body, 1)) + "\n"


__all__ = [
    "INVARIANT",
    "PNode",
    "POne",
    "PAssert",
    "PAssume",
    "PVar",
    "PIf",
    "PLoop",
    "PGuardedLoop",
    "PAlloc",
    "PCall",
    "PSeq",
    "ProductIR",
    "pseq",
    "guard_agreement",
    "adequacy_invariant",
    "check_guard_fragment",
    "build_product",
    "pretty_product",
]
