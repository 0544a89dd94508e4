"""Encapsulation checks for dynamic boundaries.

Clients of an interface may touch the locations its boundary names only
through the interface's methods. This module turns that rule into data:
static violations for direct boundary-variable access, disjointness
assertions in front of client heap accesses, frames lemmas for hidden
invariants and couplings, and boundary monotonicity postconditions for
module methods.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from .constants import KIND_DISJOINT, KIND_FRAMES_LEMMA, KIND_MONOTONICITY, KIND_STATIC
from .diagnostics import Span
from .frontend.linker import World
from .lang import ast as A
from .lang.desugar import Location, free_locations, rel_free_locations, subexprs
from .typecheck import TypedProgram

log = logging.getLogger("relverify.encap")


@dataclass(frozen=True)
class Obligation:
    kind: str
    unit: str
    owner: str  # method, invariant or coupling the obligation belongs to
    span: Optional[Span]
    formula: Union[A.Expr, A.RelFormula, None] = None
    message: str = ""
    boundaries: Tuple[A.Boundary, ...] = ()
    node: Optional[int] = field(default=None, compare=False)  # id() of the guarded command
    label: str = ""


# --------- boundary helpers ---------


def boundary_vars(b: A.Boundary) -> List[str]:
    return [a.name for a in b.atoms if isinstance(a, A.Var) and a.name != "alloc"]


def boundary_images(b: A.Boundary, fld: str) -> List[A.Expr]:
    return [a.region for a in b.atoms if isinstance(a, A.Image) and a.field == fld]


def _code_exprs(c: A.Command) -> Iterator[A.Expr]:
    """Expressions evaluated by the executable part of ``c`` itself (not its sub-commands)."""
    if isinstance(c, A.Assign):
        yield c.value
    elif isinstance(c, A.FieldAssign):
        yield c.value
    elif isinstance(c, (A.If, A.While)):
        yield c.cond
    elif isinstance(c, A.CallCmd):
        yield from c.args


def _children(c: A.Command) -> Iterator[A.Command]:
    if isinstance(c, A.Seq):
        yield from c.items
    elif isinstance(c, A.VarBlock):
        yield c.body
    elif isinstance(c, A.If):
        yield c.then
        yield c.orelse
    elif isinstance(c, A.While):
        yield c.body


def commands(c: A.Command) -> Iterator[A.Command]:
    yield c
    for ch in _children(c):
        yield from commands(ch)


def _reads(e: A.Expr) -> Iterator[A.Expr]:
    """Variable and field-read nodes of a code expression, outside quantifiers."""
    if isinstance(e, (A.Var, A.FieldRead)):
        yield e
    if isinstance(e, A.Quant):
        return
    for ch in subexprs(e):
        yield from _reads(ch)


def _not_in(obj: A.Expr, region: A.Expr, span: Optional[Span]) -> A.Expr:
    return A.Unary("not", A.Binary("iin", obj, region, ty=A.BOOL, span=span), ty=A.BOOL, span=span)


# ========== operations ==========


def check_static_writes(m: A.MethodDecl, b: A.Boundary, unit: str = "") -> List[Obligation]:
    """Direct accesses of boundary variables from client code.

    Writes are the rule; reads of boundary variables in executable code are
    reported as well. Specs and assertions may mention them freely.
    """
    if m.body is None:
        return []
    names = set(boundary_vars(b))
    out: List[Obligation] = []
    for c in commands(m.body):
        target = c.target if isinstance(c, (A.Assign, A.New)) else None
        if target in names:
            out.append(
                Obligation(KIND_STATIC, unit, m.name, c.span,
                           message=f"write to boundary variable {target!r} of {b.owner}", node=id(c))
            )
        for e in _code_exprs(c):
            for r in _reads(e):
                if isinstance(r, A.Var) and r.name in names:
                    out.append(
                        Obligation(KIND_STATIC, unit, m.name, r.span or c.span,
                                   message=f"read of boundary variable {r.name!r} of {b.owner}", node=id(c))
                    )
    return out


def gen_disjointness_obligations(m: A.MethodDecl, b: A.Boundary, unit: str = "") -> List[Obligation]:
    """Assertions that client heap accesses stay outside the boundary.

    Each obligation is keyed to the command it must be checked in front of,
    in that command's pre-state.
    """
    if m.body is None:
        return []
    out: List[Obligation] = []
    for c in commands(m.body):
        if isinstance(c, A.FieldAssign):
            obj = A.Var(c.obj, span=c.span)
            for g in boundary_images(b, c.field):
                out.append(
                    Obligation(KIND_DISJOINT, unit, m.name, c.span, _not_in(obj, g, c.span),
                               message=f"write {c.obj}.{c.field} outside boundary of {b.owner}",
                               boundaries=(b,), node=id(c))
                )
        for e in _code_exprs(c):
            for r in _reads(e):
                if not isinstance(r, A.FieldRead):
                    continue
                for g in boundary_images(b, r.field):
                    out.append(
                        Obligation(KIND_DISJOINT, unit, m.name, r.span or c.span, _not_in(r.obj, g, r.span),
                                   message=f"read of .{r.field} outside boundary of {b.owner}",
                                   boundaries=(b,), node=id(c))
                    )
    return out


def uncovered_reads(reads: Iterable[Location], b: A.Boundary) -> List[Location]:
    """Read locations that no atom of ``b`` names syntactically.

    An empty result means the frames lemma is immediate; otherwise it may
    still hold, e.g. when the invariant itself keeps the reads inside the
    boundary.
    """
    names = set(boundary_vars(b)) | {"alloc"}
    images = {(a.region, a.field) for a in b.atoms if isinstance(a, A.Image)}
    out = []
    for loc in reads:
        if loc.var is not None:
            if loc.var not in names:
                out.append(loc)
        elif (loc.region, loc.field) not in images:
            out.append(loc)
    return sorted(out, key=str)


def gen_frames_lemma(
    inv: Union[A.InvariantDecl, A.CouplingDecl],
    b: Union[A.Boundary, Tuple[A.Boundary, A.Boundary]],
    unit: str = "",
    ct: Union[A.ClassTable, Tuple[A.ClassTable, A.ClassTable], None] = None,
) -> Obligation:
    """The boundary (both boundaries, for a coupling) frames ``inv``.

    The obligation carries the formula and the boundaries; the two-state
    encoding is built by the VC generator. With class tables, reads the
    boundaries do not name are listed in the message.
    """
    bs = b if isinstance(b, tuple) else (b,)
    message = f"{inv.name} is framed by the boundary of {bs[0].owner}"
    if ct is not None:
        if isinstance(inv, A.CouplingDecl):
            lct, rct = ct if isinstance(ct, tuple) else (ct, ct)
            sides = zip(rel_free_locations(inv.formula, lct, rct), bs)
        else:
            sides = [(free_locations(inv.formula, ct), bs[0])]  # type: ignore[arg-type]
        extra = [str(loc) for reads, bb in sides for loc in uncovered_reads(reads, bb)]
        if extra:
            message += "; reads not named by the boundary: " + ", ".join(extra)
            log.debug("frames lemma %s: %s", inv.name, message)
    return Obligation(KIND_FRAMES_LEMMA, unit, inv.name, inv.span, inv.formula, message=message, boundaries=bs)


def gen_monotonicity_post(m: A.MethodDecl, b: A.Boundary, unit: str = "") -> Obligation:
    parts: List[A.Expr] = []
    for a in b.atoms:
        if isinstance(a, A.Var) and a.name != "alloc" and a.ty == A.RGN:
            parts.append(A.Binary("<<", A.Old(a, ty=A.RGN), a, ty=A.BOOL, span=a.span))
    return Obligation(
        KIND_MONOTONICITY, unit, m.name, m.span, A.conj(parts),
        message=f"boundary of {b.owner} only grows", boundaries=(b,),
    )


# ========== whole-program collection ==========


@dataclass
class EncapReport:
    obligations: List[Obligation] = field(default_factory=list)

    def static_violations(self) -> List[Obligation]:
        return [o for o in self.obligations if o.kind == KIND_STATIC]

    def of_kind(self, kind: str) -> List[Obligation]:
        return [o for o in self.obligations if o.kind == kind]

    def disjointness(self, unit: str, method: str) -> Dict[int, List[Obligation]]:
        out: Dict[int, List[Obligation]] = {}
        for o in self.obligations:
            if o.kind == KIND_DISJOINT and o.unit == unit and o.owner == method:
                out.setdefault(o.node, []).append(o)  # type: ignore[arg-type]
        return out

    def monotonicity(self, unit: str, method: str) -> List[Obligation]:
        return [o for o in self.obligations if o.kind == KIND_MONOTONICITY and o.unit == unit and o.owner == method]


class _Labeler:
    def __init__(self) -> None:
        self.counts: Dict[Tuple[str, str], int] = {}

    def __call__(self, ob: Obligation) -> Obligation:
        key = (ob.unit, ob.owner)
        n = self.counts.get(key, 0)
        self.counts[key] = n + 1
        return replace(ob, label=f"encap:{ob.unit}.{ob.owner}:{n}")


def own_methods(w: World) -> List[A.MethodDecl]:
    """Methods whose body belongs to the world's root unit."""
    return [m for m in w.methods if m.body is not None and w.method_units.get(m.name) == w.name]


def world_obligations(w: World, label: Optional[_Labeler] = None) -> List[Obligation]:
    label = label or _Labeler()
    out: List[Obligation] = []
    foreign = w.foreign_boundaries()
    for m in own_methods(w):
        for b in foreign:
            out.extend(label(o) for o in check_static_writes(m, b, w.name))
            out.extend(label(o) for o in gen_disjointness_obligations(m, b, w.name))
    own = w.boundary(w.iface) if w.iface is not None and w.iface != w.name else None
    if own is not None:
        for inv in w.invariants:
            out.append(label(gen_frames_lemma(inv, own, w.name, w.classes)))
        for name in w.hidden:
            m = w.method(name)
            if m is not None and m.body is not None:
                out.append(label(gen_monotonicity_post(m, own, w.name)))
    return out


def bimodule_obligations(tp: TypedProgram, bm: A.CompilationUnit, label: Optional[_Labeler] = None) -> List[Obligation]:
    label = label or _Labeler()
    left, right = tp.sides(bm.name)
    if not bm.couplings:
        return []
    lb = left.boundary(left.iface) if left.iface else None
    rb = right.boundary(right.iface) if right.iface else None
    empty_l = A.Boundary(left.iface or left.name, ())
    empty_r = A.Boundary(right.iface or right.name, ())
    cts = (left.classes, right.classes)
    return [label(gen_frames_lemma(c, (lb or empty_l, rb or empty_r), bm.name, cts)) for c in bm.couplings]


def check_encapsulation(tp: TypedProgram, units: Optional[Sequence[str]] = None) -> EncapReport:
    """Collect every encapsulation obligation of the program (or of ``units``)."""
    label = _Labeler()
    rep = EncapReport()
    for name in sorted(tp.worlds):
        if units is not None and name not in units:
            continue
        if tp.unit(name).kind == "interface":
            continue
        rep.obligations.extend(world_obligations(tp.world(name), label))
    for bm in sorted(tp.bimodules(), key=lambda u: u.name):
        if units is not None and bm.name not in units:
            continue
        rep.obligations.extend(bimodule_obligations(tp, bm, label))
    log.info(
        "encap: %d obligations, %d static violations", len(rep.obligations), len(rep.static_violations())
    )
    return rep


__all__ = [
    "Obligation",
    "EncapReport",
    "boundary_vars",
    "boundary_images",
    "commands",
    "own_methods",
    "check_static_writes",
    "gen_disjointness_obligations",
    "uncovered_reads",
    "gen_frames_lemma",
    "gen_monotonicity_post",
    "world_obligations",
    "bimodule_obligations",
    "check_encapsulation",
]
