from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, List, Optional, Set, Tuple

from .ast import (
    Agree, BOOL, Binary, BothF, Call, ClassTable, Expr, FieldRead, Image, LeftF, Old, Quant, RGN,
    RBin, RBool, RegionLit, RelFormula, RightF, RNot, RQuant, Unary, Var,
)


@dataclass(frozen=True)
class Location:
    """A read/written location atom: a variable, or the ``field`` of every object in ``region``."""

    var: Optional[str] = None
    region: Optional[Expr] = None
    field: Optional[str] = None

    @staticmethod
    def of_var(name: str) -> "Location":
        return Location(var=name)

    @staticmethod
    def of_image(region: Expr, fld: str) -> "Location":
        return Location(region=region, field=fld)

    def __str__(self) -> str:
        if self.var is not None:
            return self.var
        from .pretty import pretty_expr

        return f"{pretty_expr(self.region)}`{self.field}"  # type: ignore[arg-type]


def desugar_both(rf: RelFormula) -> RelFormula:
    """Replace every ``Both(P)`` by ``<|P|] /\\ [>P|>``. Idempotent."""
    if isinstance(rf, BothF):
        return RBin("/\\", LeftF(rf.formula, span=rf.span), RightF(rf.formula, span=rf.span), span=rf.span)
    if isinstance(rf, RNot):
        return RNot(desugar_both(rf.operand), span=rf.span)
    if isinstance(rf, RBin):
        return RBin(rf.op, desugar_both(rf.left), desugar_both(rf.right), span=rf.span)
    if isinstance(rf, RQuant):
        return RQuant(
            rf.kind, rf.lvar, rf.ltype, rf.ldomain, rf.rvar, rf.rtype, rf.rdomain,
            desugar_both(rf.body), span=rf.span,
        )
    return rf


def subexprs(e: Expr) -> Iterator[Expr]:
    """Immediate children of an expression."""
    if isinstance(e, (FieldRead,)):
        yield e.obj
    elif isinstance(e, Image):
        yield e.region
    elif isinstance(e, RegionLit):
        yield from e.elems
    elif isinstance(e, Unary):
        yield e.operand
    elif isinstance(e, Binary):
        yield e.left
        yield e.right
    elif isinstance(e, Old):
        yield e.expr
    elif isinstance(e, Call):
        yield from e.args
    elif isinstance(e, Quant):
        if e.domain is not None:
            yield e.domain
        yield e.body


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in subexprs(e):
        yield from walk(c)


def rel_exprs(rf: RelFormula) -> Iterator[Expr]:
    """Unary expressions embedded in a relational formula, paired with no side info."""
    if isinstance(rf, Agree):
        yield rf.left
        yield rf.right
    elif isinstance(rf, (LeftF, RightF, BothF)):
        yield rf.formula
    elif isinstance(rf, RNot):
        yield from rel_exprs(rf.operand)
    elif isinstance(rf, RBin):
        yield from rel_exprs(rf.left)
        yield from rel_exprs(rf.right)
    elif isinstance(rf, RQuant):
        for d in (rf.ldomain, rf.rdomain):
            if d is not None:
                yield d
        yield from rel_exprs(rf.body)


def free_locations(f: Expr, ct: ClassTable) -> Set[Location]:
    """Variables and field-image atoms syntactically read by ``f``.

    Field reads through quantifier-bound variables are generalised to the
    region the object ranges over: the quantifier's domain (``alloc`` when
    unbounded), or its image under the reference and region fields of ``ct``
    for paths like ``s.top.val``. Other field reads ``e.f`` are reported as
    ``{e}`f``.
    """
    out: Set[Location] = set()
    _free(f, ct, {}, out)
    return out


def rel_free_locations(rf: RelFormula, lct: ClassTable, rct: ClassTable) -> Tuple[Set[Location], Set[Location]]:
    """Left and right read sets of a relational formula."""
    lout: Set[Location] = set()
    rout: Set[Location] = set()
    _rel_free(rf, lct, rct, {}, {}, lout, rout)
    return lout, rout


def _rel_free(rf, lct, rct, lb: dict, rb: dict, lout: Set[Location], rout: Set[Location]) -> None:
    if isinstance(rf, Agree):
        _free(rf.left, lct, lb, lout)
        _free(rf.right, rct, rb, rout)
    elif isinstance(rf, (LeftF, BothF)):
        _free(rf.formula, lct, lb, lout)
        if isinstance(rf, BothF):
            _free(rf.formula, rct, rb, rout)
    elif isinstance(rf, RightF):
        _free(rf.formula, rct, rb, rout)
    elif isinstance(rf, RNot):
        _rel_free(rf.operand, lct, rct, lb, rb, lout, rout)
    elif isinstance(rf, RBin):
        _rel_free(rf.left, lct, rct, lb, rb, lout, rout)
        _rel_free(rf.right, lct, rct, lb, rb, lout, rout)
    elif isinstance(rf, RQuant):
        lin, rin = dict(lb), dict(rb)
        lin[rf.lvar] = _domain(rf.ldomain, lct, lb, lout)
        rin[rf.rvar] = _domain(rf.rdomain, rct, rb, rout)
        _rel_free(rf.body, lct, rct, lin, rin, lout, rout)


def _mentions(e: Expr, bound: dict) -> bool:
    return any(isinstance(x, Var) and x.name in bound for x in walk(e))


def _region(e: Expr, ct: ClassTable, bound: dict) -> Optional[Expr]:
    """Region containing every value of ``e`` as its bound variables vary."""
    if isinstance(e, Var) and e.name in bound:
        return bound[e.name]
    if isinstance(e, FieldRead):
        fd = ct.field(e.field)
        if fd is None or not (fd.ftype.is_class or fd.ftype.is_region):
            return None
        inner = _region(e.obj, ct, bound)
        return Image(inner, e.field, ty=RGN) if inner is not None else None
    return None


def _domain(dom: Optional[Expr], ct: ClassTable, bound: dict, out: Set[Location]) -> Expr:
    if dom is None:
        return Var("alloc", ty=RGN)
    _free(dom, ct, bound, out)
    if not _mentions(dom, bound):
        return dom
    return _region(dom, ct, bound) or Var("alloc", ty=RGN)


def _free(e: Expr, ct: ClassTable, bound: dict, out: Set[Location]) -> None:
    if isinstance(e, Var):
        if e.name not in bound:
            out.add(Location.of_var(e.name))
        return
    if isinstance(e, FieldRead):
        obj = e.obj
        if _mentions(obj, bound):
            out.add(Location.of_image(_region(obj, ct, bound) or Var("alloc", ty=RGN), e.field))
        else:
            out.add(Location.of_image(RegionLit((obj,)), e.field))
        _free(obj, ct, bound, out)
        return
    if isinstance(e, Image):
        if _mentions(e.region, bound):
            out.add(Location.of_image(_region(e.region, ct, bound) or Var("alloc", ty=RGN), e.field))
        else:
            out.add(Location.of_image(e.region, e.field))
        _free(e.region, ct, bound, out)
        return
    if isinstance(e, Quant):
        inner = dict(bound)
        inner[e.var] = _domain(e.domain, ct, bound, out)
        _free(e.body, ct, inner, out)
        return
    for c in subexprs(e):
        _free(c, ct, bound, out)


def fields_read(f: Expr) -> List[str]:
    seen: List[str] = []
    for e in walk(f):
        if isinstance(e, (FieldRead, Image)) and e.field not in seen:
            seen.append(e.field)
    return seen


def mentions_old(f: Expr) -> bool:
    return any(isinstance(e, Old) for e in walk(f))


def negate(e: Expr) -> Expr:
    return Unary("not", e, ty=BOOL, span=e.span)


def rel_not(rf: RelFormula) -> RelFormula:
    if isinstance(rf, RBool):
        return RBool(not rf.value)
    return RNot(rf)


__all__ = [
    "Location",
    "desugar_both",
    "subexprs",
    "walk",
    "rel_exprs",
    "free_locations",
    "rel_free_locations",
    "fields_read",
    "mentions_old",
    "negate",
    "rel_not",
]
