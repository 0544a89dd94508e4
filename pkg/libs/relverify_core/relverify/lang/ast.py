"""Abstract syntax shared by every phase.

All nodes are frozen dataclasses. Source spans and inferred types are carried
as keyword-only fields excluded from equality, so two trees compare equal
modulo locations (the adequacy check and the pretty-printer round trip rely
on this).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Optional, Tuple, Union

from ..diagnostics import Span


# ========== types ==========

PRIMITIVE_TYPES = ("int", "bool", "rgn", "intlist", "unit")


@dataclass(frozen=True)
class Type:
    name: str

    @property
    def is_class(self) -> bool:
        return self.name not in PRIMITIVE_TYPES

    @property
    def is_region(self) -> bool:
        return self.name == "rgn"

    def __str__(self) -> str:
        return self.name


INT = Type("int")
BOOL = Type("bool")
RGN = Type("rgn")
INTLIST = Type("intlist")
UNIT = Type("unit")
# type of `null` before unification with a class type
NULLTYPE = Type("$null")


@dataclass(frozen=True)
class Node:
    span: Optional[Span] = field(default=None, compare=False, repr=False, kw_only=True)


# ========== expressions and unary formulas ==========


@dataclass(frozen=True)
class Expr(Node):
    ty: Optional[Type] = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class NullLit(Expr):
    pass


@dataclass(frozen=True)
class NilLit(Expr):
    pass


@dataclass(frozen=True)
class Var(Expr):
    """A variable occurrence. The name ``alloc`` denotes the allocated region."""

    name: str


@dataclass(frozen=True)
class FieldRead(Expr):
    obj: Expr
    field: str


@dataclass(frozen=True)
class Image(Expr):
    region: Expr
    field: str


@dataclass(frozen=True)
class RegionLit(Expr):
    elems: Tuple[Expr, ...]


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "not" | "neg"
    operand: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Old(Expr):
    expr: Expr


@dataclass(frozen=True)
class Call(Expr):
    """Application of a math function, a user predicate, or (in commands) a method."""

    name: str
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Quant(Expr):
    kind: str  # "forall" | "exists"
    var: str
    vtype: Type
    domain: Optional[Expr]
    body: Expr


ARITH_OPS = ("+", "-", "*", "/", "%")
COMPARE_OPS = ("=", "<>", "<", "<=", ">", ">=")
LOGIC_OPS = ("/\\", "\\/", "->", "<->")
REGION_OPS = ("++", "--", "^^")
REGION_PREDICATES = ("iin", "<<")
MATH_FUNCTIONS = ("cons", "hd", "tl", "len")


def conj(items: List[Expr]) -> Expr:
    if not items:
        return BoolLit(True, ty=BOOL)
    out = items[0]
    for it in items[1:]:
        out = Binary("/\\", out, it, ty=BOOL)
    return out


# ========== commands ==========


@dataclass(frozen=True)
class Command(Node):
    pass


@dataclass(frozen=True)
class Skip(Command):
    pass


@dataclass(frozen=True)
class VarBlock(Command):
    name: str
    vtype: Type
    body: Command
    ghost: bool = False


@dataclass(frozen=True)
class Assign(Command):
    target: str
    value: Expr


@dataclass(frozen=True)
class FieldAssign(Command):
    obj: str
    field: str
    value: Expr


@dataclass(frozen=True)
class New(Command):
    target: str
    cls: str


@dataclass(frozen=True)
class Seq(Command):
    items: Tuple[Command, ...]


@dataclass(frozen=True)
class If(Command):
    cond: Expr
    then: Command
    orelse: Command


@dataclass(frozen=True)
class While(Command):
    cond: Expr
    invariants: Tuple[Expr, ...]
    body: Command


@dataclass(frozen=True)
class CallCmd(Command):
    method: str
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Assert(Command):
    formula: Expr


@dataclass(frozen=True)
class Assume(Command):
    formula: Expr


def seq(*items: Command) -> Command:
    flat: List[Command] = []
    for it in items:
        if isinstance(it, Seq):
            flat.extend(it.items)
        else:
            flat.append(it)
    if len(flat) == 1:
        return flat[0]
    return Seq(tuple(flat))


# ========== relational formulas ==========


@dataclass(frozen=True)
class RelFormula(Node):
    pass


@dataclass(frozen=True)
class Agree(RelFormula):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class LeftF(RelFormula):
    formula: Expr


@dataclass(frozen=True)
class RightF(RelFormula):
    formula: Expr


@dataclass(frozen=True)
class BothF(RelFormula):
    formula: Expr


@dataclass(frozen=True)
class RBool(RelFormula):
    value: bool


@dataclass(frozen=True)
class RNot(RelFormula):
    operand: RelFormula


@dataclass(frozen=True)
class RBin(RelFormula):
    op: str  # one of LOGIC_OPS
    left: RelFormula
    right: RelFormula


@dataclass(frozen=True)
class RQuant(RelFormula):
    """Quantifier binding a pair of variables, one per side."""

    kind: str
    lvar: str
    ltype: Type
    ldomain: Optional[Expr]
    rvar: str
    rtype: Type
    rdomain: Optional[Expr]
    body: RelFormula


def rconj(items: List[RelFormula]) -> RelFormula:
    if not items:
        return RBool(True)
    out = items[0]
    for it in items[1:]:
        out = RBin("/\\", out, it)
    return out


# ========== biprograms ==========


@dataclass(frozen=True)
class Biprogram(Node):
    pass


@dataclass(frozen=True)
class BSplit(Biprogram):
    left: Command
    right: Command


@dataclass(frozen=True)
class BSync(Biprogram):
    cmd: Command


@dataclass(frozen=True)
class BSeq(Biprogram):
    items: Tuple[Biprogram, ...]


@dataclass(frozen=True)
class BVar(Biprogram):
    lname: str
    ltype: Type
    rname: str
    rtype: Type
    body: Biprogram


@dataclass(frozen=True)
class BIf(Biprogram):
    lcond: Expr
    rcond: Expr
    then: Biprogram
    orelse: Biprogram


@dataclass(frozen=True)
class BWhile(Biprogram):
    """Lockstep loop when both alignment guards are absent, guarded loop otherwise."""

    lcond: Expr
    rcond: Expr
    lguard: Optional[RelFormula]
    rguard: Optional[RelFormula]
    invariants: Tuple[RelFormula, ...]
    body: Biprogram

    @property
    def guarded(self) -> bool:
        return self.lguard is not None or self.rguard is not None


@dataclass(frozen=True)
class BAssert(Biprogram):
    formula: RelFormula


@dataclass(frozen=True)
class BCall(Biprogram):
    """Aligned call; each side passes its own arguments and may bind its own target."""

    method: str
    largs: Tuple[Expr, ...]
    rargs: Tuple[Expr, ...]
    ltarget: Optional[str] = None
    rtarget: Optional[str] = None

    def side_command(self, left: bool) -> Command:
        args, target = (self.largs, self.ltarget) if left else (self.rargs, self.rtarget)
        if target is None:
            return CallCmd(self.method, args, span=self.span)
        return Assign(target, Call(self.method, args, span=self.span), span=self.span)


def bseq(*items: Biprogram) -> Biprogram:
    flat: List[Biprogram] = []
    for it in items:
        if isinstance(it, BSeq):
            flat.extend(it.items)
        else:
            flat.append(it)
    if len(flat) == 1:
        return flat[0]
    return BSeq(tuple(flat))


# ========== effects ==========


@dataclass(frozen=True)
class EffectAtom(Node):
    """``rd``/``rw`` of a variable, of an image ``G`f``, or of ``alloc``."""

    mode: str  # "rd" | "rw"
    target: Expr  # Var or Image

    @property
    def is_alloc(self) -> bool:
        return isinstance(self.target, Var) and self.target.name == "alloc"

    @property
    def is_var(self) -> bool:
        return isinstance(self.target, Var) and self.target.name != "alloc"

    @property
    def is_image(self) -> bool:
        return isinstance(self.target, Image)

    @property
    def writes(self) -> bool:
        return self.mode == "rw"


@dataclass(frozen=True)
class Effect(Node):
    atoms: Tuple[EffectAtom, ...] = ()

    def writes(self) -> Iterator[EffectAtom]:
        return (a for a in self.atoms if a.writes)

    @property
    def allows_alloc(self) -> bool:
        return any(a.is_alloc and a.writes for a in self.atoms)

    def written_vars(self) -> List[str]:
        return [a.target.name for a in self.atoms if a.writes and a.is_var]  # type: ignore[union-attr]

    def written_images(self, fld: str) -> List[Expr]:
        return [a.target.region for a in self.atoms if a.writes and a.is_image and a.target.field == fld]  # type: ignore[union-attr]

    def written_fields(self) -> List[str]:
        seen: List[str] = []
        for a in self.atoms:
            if a.writes and a.is_image and a.target.field not in seen:  # type: ignore[union-attr]
                seen.append(a.target.field)  # type: ignore[union-attr]
        return seen


# ========== declarations ==========


@dataclass(frozen=True)
class Param(Node):
    name: str
    ptype: Type


@dataclass(frozen=True)
class GlobalDecl(Node):
    name: str
    gtype: Type
    visibility: str = "public"
    ghost: bool = False


@dataclass(frozen=True)
class FieldDecl(Node):
    name: str
    ftype: Type
    ghost: bool = False


@dataclass(frozen=True)
class ClassDecl(Node):
    name: str
    fields: Tuple[FieldDecl, ...]


@dataclass(frozen=True)
class InvariantDecl(Node):
    name: str
    visibility: str  # "public" | "private"
    formula: Expr


@dataclass(frozen=True)
class CouplingDecl(Node):
    name: str
    formula: RelFormula


@dataclass(frozen=True)
class PredicateDecl(Node):
    name: str
    params: Tuple[Param, ...]
    body: Expr


@dataclass(frozen=True)
class Spec(Node):
    requires: Tuple[Expr, ...] = ()
    ensures: Tuple[Expr, ...] = ()
    effects: Optional[Effect] = None

    @property
    def declared(self) -> bool:
        return bool(self.requires or self.ensures or self.effects is not None)


@dataclass(frozen=True)
class MethodDecl(Node):
    name: str
    params: Tuple[Param, ...]
    ret: Type
    spec: Spec
    body: Optional[Command]


@dataclass(frozen=True)
class RelSpec(Node):
    requires: Tuple[RelFormula, ...] = ()
    ensures: Tuple[RelFormula, ...] = ()


@dataclass(frozen=True)
class BiMethodDecl(Node):
    name: str
    lparams: Tuple[Param, ...]
    rparams: Tuple[Param, ...]
    lret: Type
    rret: Type
    spec: RelSpec
    body: Optional[Biprogram]


@dataclass(frozen=True)
class Boundary(Node):
    owner: str
    atoms: Tuple[Expr, ...]  # Var or Image


@dataclass(frozen=True)
class CompilationUnit(Node):
    kind: str  # "interface" | "module" | "bimodule"
    name: str
    path: str = ""
    iface: Optional[str] = None
    imports: Tuple[str, ...] = ()
    left: Optional[str] = None
    right: Optional[str] = None
    globals: Tuple[GlobalDecl, ...] = ()
    classes: Tuple[ClassDecl, ...] = ()
    boundary: Optional[Boundary] = None
    invariants: Tuple[InvariantDecl, ...] = ()
    couplings: Tuple[CouplingDecl, ...] = ()
    predicates: Tuple[PredicateDecl, ...] = ()
    methods: Tuple[MethodDecl, ...] = ()
    bimethods: Tuple[BiMethodDecl, ...] = ()

    def method(self, name: str) -> Optional[MethodDecl]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def bimethod(self, name: str) -> Optional[BiMethodDecl]:
        for m in self.bimethods:
            if m.name == name:
                return m
        return None


# ========== class table ==========


@dataclass(frozen=True)
class ClassTable:
    """Ordered classes of the linked program with globally unique field names."""

    classes: Tuple[ClassDecl, ...] = ()

    def __post_init__(self) -> None:
        owners: Dict[str, str] = {}
        decls: Dict[str, FieldDecl] = {}
        for c in self.classes:
            for f in c.fields:
                owners[f.name] = c.name
                decls[f.name] = f
        object.__setattr__(self, "_owners", owners)
        object.__setattr__(self, "_decls", decls)

    @property
    def class_names(self) -> List[str]:
        return [c.name for c in self.classes]

    def has_class(self, name: str) -> bool:
        return any(c.name == name for c in self.classes)

    def fields_of(self, cls: str) -> Tuple[FieldDecl, ...]:
        for c in self.classes:
            if c.name == cls:
                return c.fields
        return ()

    def all_fields(self) -> List[FieldDecl]:
        return [f for c in self.classes for f in c.fields]

    def field(self, name: str) -> Optional[FieldDecl]:
        return self._decls.get(name)  # type: ignore[attr-defined]

    def owner(self, name: str) -> Optional[str]:
        return self._owners.get(name)  # type: ignore[attr-defined]

    def class_code(self, cls: str) -> int:
        """Positive code per class; 0 is reserved for "not allocated"."""
        return self.class_names.index(cls) + 1


Formula = Expr
AnyNode = Union[Expr, Command, RelFormula, Biprogram]


__all__ = [
    "PRIMITIVE_TYPES", "Type", "INT", "BOOL", "RGN", "INTLIST", "UNIT", "NULLTYPE",
    "Node", "Expr", "IntLit", "BoolLit", "NullLit", "NilLit", "Var", "FieldRead", "Image",
    "RegionLit", "Unary", "Binary", "Old", "Call", "Quant",
    "ARITH_OPS", "COMPARE_OPS", "LOGIC_OPS", "REGION_OPS", "REGION_PREDICATES", "MATH_FUNCTIONS",
    "conj", "Command", "Skip", "VarBlock", "Assign", "FieldAssign", "New", "Seq", "If", "While",
    "CallCmd", "Assert", "Assume", "seq",
    "RelFormula", "Agree", "LeftF", "RightF", "BothF", "RBool", "RNot", "RBin", "RQuant", "rconj",
    "Biprogram", "BSplit", "BSync", "BSeq", "BVar", "BIf", "BWhile", "BAssert", "BCall", "bseq",
    "EffectAtom", "Effect", "Param", "GlobalDecl", "FieldDecl", "ClassDecl", "InvariantDecl",
    "CouplingDecl", "PredicateDecl", "Spec", "MethodDecl", "RelSpec", "BiMethodDecl", "Boundary",
    "CompilationUnit", "ClassTable", "Formula",
]
