"""The state model handed to the solver.

References are an uninterpreted sort with a distinguished ``null``; regions
are characteristic arrays ``Ref -> Bool``; the allocation table maps every
reference to a class code (0 means unallocated); each field is an array from
references to values. Field images are uninterpreted functions constrained by
axioms, user predicates and ``len`` likewise.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import z3

from ..diagnostics import VcgenError
from ..frontend.linker import World
from ..lang import ast as A
from ..lang.desugar import walk
from ..typecheck import TypedProgram

log = logging.getLogger("relverify.vcgen")

_SORTS: Dict[str, object] = {}


def ref_sort() -> z3.SortRef:
    if "ref" not in _SORTS:
        _SORTS["ref"] = z3.DeclareSort("Ref")
    return _SORTS["ref"]  # type: ignore[return-value]


def intlist_sort() -> z3.DatatypeSortRef:
    if "intlist" not in _SORTS:
        dt = z3.Datatype("IntList")
        dt.declare("nil")
        dt.declare("cons", ("hd", z3.IntSort()), ("tl", dt))
        _SORTS["intlist"] = dt.create()
    return _SORTS["intlist"]  # type: ignore[return-value]


def region_sort() -> z3.ArraySortRef:
    return z3.ArraySort(ref_sort(), z3.BoolSort())


def alloct_sort() -> z3.ArraySortRef:
    return z3.ArraySort(ref_sort(), z3.IntSort())


@dataclass
class PredicateInfo:
    key: str
    decl: A.PredicateDecl
    func: z3.FuncDeclRef
    fields: Tuple[str, ...]
    globals: Tuple[Tuple[str, A.Type], ...]


@dataclass
class Theory:
    """Sorts, functions and axioms shared by every VC of a run."""

    class_codes: Dict[str, int]
    fields: Dict[str, A.FieldDecl]
    field_owner: Dict[str, str]
    img: Dict[str, z3.FuncDeclRef] = field(default_factory=dict)
    predicates: Dict[str, PredicateInfo] = field(default_factory=dict)
    axioms: List[Tuple[str, z3.BoolRef]] = field(default_factory=list)
    length: Optional[z3.FuncDeclRef] = None

    # --------- sorts and values ---------

    @property
    def ref(self) -> z3.SortRef:
        return ref_sort()

    @property
    def null(self) -> z3.ExprRef:
        return z3.Const("null", ref_sort())

    @property
    def intlist(self) -> z3.DatatypeSortRef:
        return intlist_sort()

    def sort(self, t: A.Type) -> z3.SortRef:
        if t == A.INT:
            return z3.IntSort()
        if t == A.BOOL:
            return z3.BoolSort()
        if t == A.RGN:
            return region_sort()
        if t == A.INTLIST:
            return intlist_sort()
        if t == A.UNIT:
            raise VcgenError("unit has no values")
        return ref_sort()

    def default(self, t: A.Type) -> z3.ExprRef:
        if t == A.INT:
            return z3.IntVal(0)
        if t == A.BOOL:
            return z3.BoolVal(False)
        if t == A.RGN:
            return z3.EmptySet(ref_sort())
        if t == A.INTLIST:
            return intlist_sort().nil  # type: ignore[attr-defined]
        return self.null

    def code(self, cls: str) -> int:
        try:
            return self.class_codes[cls]
        except KeyError:
            raise VcgenError(f"unknown class {cls!r}") from None

    def field_sort(self, f: str) -> z3.SortRef:
        return z3.ArraySort(ref_sort(), self.sort(self.fields[f].ftype))

    def field_class(self, f: str) -> str:
        return self.field_owner[f]

    def predicate_key(self, world: World, name: str) -> str:
        for key, info in self.predicates.items():
            if info.decl.name == name and key in (name, *(f"{u}.{name}" for u in world.units)):
                return key
        raise VcgenError(f"unknown predicate {name!r}")

    # --------- axiom selection ---------

    def axioms_for(self, goal: z3.ExprRef) -> List[Tuple[str, z3.BoolRef]]:
        """Axioms about the uninterpreted functions reachable from ``goal``."""
        defined = {name: ax for name, ax in self.axioms}
        wanted: Set[str] = set()
        pending = [goal]
        while pending:
            for name in _app_names(pending.pop()):
                if name in defined and name not in wanted:
                    wanted.add(name)
                    pending.append(defined[name])
        return [(n, a) for n, a in self.axioms if n in wanted]


def _app_names(e: z3.ExprRef) -> Set[str]:
    out: Set[str] = set()
    seen: Set[int] = set()
    todo = [e]
    while todo:
        x = todo.pop()
        key = x.get_id()
        if key in seen:
            continue
        seen.add(key)
        if z3.is_quantifier(x):
            todo.append(x.body())
            continue
        if z3.is_app(x):
            out.add(x.decl().name())
            todo.extend(x.children())
    return out


# ========== construction ==========


def _program_classes(tp: TypedProgram) -> Tuple[Dict[str, int], Dict[str, A.FieldDecl], Dict[str, str]]:
    codes: Dict[str, int] = {}
    fields: Dict[str, A.FieldDecl] = {}
    owner: Dict[str, str] = {}
    for name in sorted(tp.units):
        for c in tp.units[name].classes:
            if c.name not in codes:
                codes[c.name] = len(codes) + 1
            for f in c.fields:
                fields[f.name] = f
                owner[f.name] = c.name
    return codes, fields, owner


def _img_axiom(th: Theory, f: str) -> z3.BoolRef:
    fd = th.fields[f]
    al = z3.Const("al", alloct_sort())
    h = z3.Const("h", th.field_sort(f))
    r = z3.Const("r", region_sort())
    img = th.img[f](al, h, r)
    if not (fd.ftype.is_class or fd.ftype == A.RGN):
        return z3.ForAll([al, h, r], img == z3.EmptySet(ref_sort()), patterns=[img])
    p = z3.Const("p", ref_sort())
    q = z3.Const("q", ref_sort())
    owned = z3.And(al[q] == th.code(th.field_owner[f]), r[q])
    hit = h[q] == p if fd.ftype.is_class else h[q][p]
    member = z3.Select(img, p)
    return z3.ForAll([al, h, r, p], member == z3.Exists([q], z3.And(owned, hit)), patterns=[member])


def _length_axioms(th: Theory) -> List[z3.BoolRef]:
    L = intlist_sort()
    ln = th.length
    k = z3.Int("k")
    xs = z3.Const("xs", L)
    return [
        ln(L.nil) == 0,  # type: ignore[attr-defined, misc]
        z3.ForAll([k, xs], ln(L.cons(k, xs)) == 1 + ln(xs), patterns=[ln(L.cons(k, xs))]),  # type: ignore[attr-defined, misc]
        z3.ForAll([xs], ln(xs) >= 0, patterns=[ln(xs)]),  # type: ignore[misc]
    ]


def predicate_footprint(world: World, name: str, seen: Optional[Set[str]] = None) -> Tuple[Set[str], Set[str]]:
    """Fields and globals a predicate reads, through the predicates it calls."""
    seen = seen if seen is not None else set()
    if name in seen:
        return set(), set()
    seen.add(name)
    p = world.predicate(name)
    fields: Set[str] = set()
    globs: Set[str] = set()
    if p is None:
        return fields, globs
    params = {x.name for x in p.params}
    gnames = {g.name for g in world.globals}
    for e in walk(p.body):
        if isinstance(e, (A.FieldRead, A.Image)):
            fields.add(e.field)
        elif isinstance(e, A.Var) and e.name not in params and e.name in gnames:
            globs.add(e.name)
        elif isinstance(e, A.Call) and world.predicate(e.name) is not None:
            f2, g2 = predicate_footprint(world, e.name, seen)
            fields |= f2
            globs |= g2
    return fields, globs


def _declare_predicates(th: Theory, tp: TypedProgram) -> List[Tuple[str, World, PredicateInfo]]:
    declaring: Dict[str, List[str]] = {}
    for uname in sorted(tp.units):
        for p in tp.units[uname].predicates:
            declaring.setdefault(p.name, []).append(uname)
    out = []
    for wname in sorted(tp.worlds):
        w = tp.worlds[wname]
        for p in w.predicates:
            owners = [u for u in declaring.get(p.name, []) if u in w.units]
            key = p.name if len(declaring.get(p.name, [])) <= 1 else f"{owners[0]}.{p.name}"
            if key in th.predicates:
                continue
            fields, globs = predicate_footprint(w, p.name)
            gtypes = tuple((g, w.global_decl(g).gtype) for g in sorted(globs))  # type: ignore[union-attr]
            fs = tuple(sorted(fields))
            dom = [th.sort(x.ptype) for x in p.params] + [alloct_sort()]
            dom += [th.field_sort(f) for f in fs] + [th.sort(t) for _, t in gtypes]
            func = z3.Function(f"pred.{key}", *dom, z3.BoolSort())
            info = PredicateInfo(key, p, func, fs, gtypes)
            th.predicates[key] = info
            out.append((key, w, info))
    return out


def emit_theory(tp: TypedProgram) -> Theory:
    codes, fields, owner = _program_classes(tp)
    th = Theory(codes, fields, owner)
    th.length = z3.Function("len", intlist_sort(), z3.IntSort())
    for ax in _length_axioms(th):
        th.axioms.append(("len", ax))
    for f in fields:
        th.img[f] = z3.Function(f"img.{f}", alloct_sort(), th.field_sort(f), region_sort(), region_sort())
        th.axioms.append((f"img.{f}", _img_axiom(th, f)))
    from .encode import Encoder  # predicate bodies need the encoder

    for key, w, info in _declare_predicates(th, tp):
        enc = Encoder(th, w)
        th.axioms.append((f"pred.{key}", enc.predicate_axiom(info)))
    log.info("theory: %d classes, %d fields, %d predicates", len(codes), len(fields), len(th.predicates))
    return th


def class_names(th: Theory) -> Sequence[str]:
    return sorted(th.class_codes, key=th.class_codes.get)  # type: ignore[arg-type]


__all__ = [
    "Theory",
    "PredicateInfo",
    "emit_theory",
    "predicate_footprint",
    "ref_sort",
    "region_sort",
    "alloct_sort",
    "intlist_sort",
    "class_names",
]
