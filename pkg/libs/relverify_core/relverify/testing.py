"""Seeded random programs for property tests.

Generators for the adequacy oracle, product/projection coherence and
differential checks of verified methods against the interpreter. The module
constants are the full-scale counts; tests run reduced ones.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .align import build_product, project
from .align.projection import LEFT, RIGHT
from .frontend.linker import World
from .interp import ConcreteState, eval_command, eval_product
from .interp.evaluator import Fault, OutOfFuel
from .lang import ast as A
from .lang.pretty import pretty_command, pretty_expr
from .lang.regions import RefPerm

ADEQUACY_CASES = 1000
COHERENCE_RUNS = 500
DIFFERENTIAL_METHODS = 200
STATES_PER_METHOD = 100
SMALL_FUEL = 10_000
MAX_DEPTH = 5


def _v(name: str) -> A.Var:
    return A.Var(name, ty=A.INT)


def _int(n: int) -> A.IntLit:
    return A.IntLit(n, ty=A.INT)


def _bin(op: str, a: A.Expr, b: A.Expr, ty: A.Type = A.INT) -> A.Binary:
    return A.Binary(op, a, b, ty=ty)


# ========== commands and biprograms ==========


class ProgramGen:
    """Random loop-bounded commands over integer globals.

    Loops count with a dedicated counter per nesting depth (``k0``, ``k1`` ...)
    that no other command assigns, so every generated program terminates.
    """

    def __init__(self, rng: random.Random, variables: Sequence[str] = ("x", "y", "z"), max_depth: int = MAX_DEPTH):
        self.rng = rng
        self.variables = tuple(variables)
        self.max_depth = max_depth

    @property
    def counters(self) -> Tuple[str, ...]:
        return tuple(f"k{d}" for d in range(self.max_depth + 1))

    def world(self) -> World:
        names = self.variables + self.counters
        return World(
            name="Scratch",
            iface=None,
            units=("Scratch",),
            classes=A.ClassTable(),
            globals=tuple(A.GlobalDecl(n, A.INT) for n in names),
            methods=(),
        )

    def state(self) -> ConcreteState:
        st = ConcreteState.empty(self.world().globals)
        for v in self.variables:
            st.globals[v] = self.rng.randint(-5, 5)
        return st

    # --------- expressions ---------

    def expr(self, depth: int = 2) -> A.Expr:
        r = self.rng.random()
        if depth <= 0 or r < 0.4:
            if self.rng.random() < 0.6:
                return _v(self.rng.choice(self.variables))
            return _int(self.rng.randint(-3, 3))
        op = self.rng.choice(("+", "-", "+", "*"))
        if op == "*":
            return _bin(op, _int(self.rng.randint(-2, 2)), self.expr(depth - 1))
        return _bin(op, self.expr(depth - 1), self.expr(depth - 1))

    def cond(self) -> A.Expr:
        return _bin(self.rng.choice(("<", "<=", "=", "<>")), self.expr(1), self.expr(1), A.BOOL)

    # --------- commands ---------

    def assign(self) -> A.Command:
        return A.Assign(self.rng.choice(self.variables), self.expr())

    def command(self, depth: int = 0) -> A.Command:
        r = self.rng.random()
        if depth >= self.max_depth or r < 0.45:
            return self.assign() if self.rng.random() < 0.9 else A.Skip()
        if r < 0.7:
            return A.seq(*(self.command(depth + 1) for _ in range(self.rng.randint(2, 3))))
        if r < 0.85:
            return A.If(self.cond(), self.command(depth + 1), self.command(depth + 1))
        k = self.counters[depth]
        bound = self.rng.randint(0, 3)
        return A.seq(A.Assign(k, _int(0)), self._loop(k, bound, self.command(depth + 1)))

    @staticmethod
    def _loop(k: str, bound: int, body: A.Command) -> A.While:
        step = A.Assign(k, _bin("+", _v(k), _int(1)))
        return A.While(_bin("<", _v(k), _int(bound), A.BOOL), (), A.seq(body, step))

    def biprogram(self, depth: int = 0) -> A.Biprogram:
        r = self.rng.random()
        if depth >= self.max_depth or r < 0.3:
            if self.rng.random() < 0.5:
                return A.BSync(self.assign())
            return A.BSplit(self.command(depth + 1), self.command(depth + 1))
        if r < 0.6:
            return A.bseq(*(self.biprogram(depth + 1) for _ in range(self.rng.randint(2, 3))))
        if r < 0.8:
            return A.BIf(self.cond(), self.cond(), self.biprogram(depth + 1), self.biprogram(depth + 1))
        k = self.counters[depth]
        lb, rb = self.rng.randint(0, 3), self.rng.randint(0, 3)
        lc = _bin("<", _v(k), _int(lb), A.BOOL)
        rc = _bin("<", _v(k), _int(rb), A.BOOL)
        lguard = rguard = None
        if self.rng.random() < 0.7:
            not_l, not_r = A.Unary("not", lc, ty=A.BOOL), A.Unary("not", rc, ty=A.BOOL)
            lguard = A.RBin("/\\", A.LeftF(lc), A.RightF(not_r))
            rguard = A.RBin("/\\", A.LeftF(not_l), A.RightF(rc))
        step = A.BSync(A.Assign(k, _bin("+", _v(k), _int(1))))
        loop = A.BWhile(lc, rc, lguard, rguard, (), A.bseq(self.biprogram(depth + 1), step))
        return A.bseq(A.BSync(A.Assign(k, _int(0))), loop)

    # --------- rewrites ---------

    def noise(self, c: A.Command) -> A.Command:
        """A rewrite that normalization undoes: extra skips and regrouping."""
        if isinstance(c, A.Seq):
            items = [self.noise(x) for x in c.items]
            if len(items) > 2 and self.rng.random() < 0.5:
                cut = self.rng.randint(1, len(items) - 1)
                return A.Seq((A.Seq(tuple(items[:cut])), *items[cut:]))
            return A.Seq(tuple(items))
        if isinstance(c, A.If):
            return A.If(c.cond, self.noise(c.then), self.noise(c.orelse))
        if isinstance(c, A.While):
            inv = (A.BoolLit(True, ty=A.BOOL),) if self.rng.random() < 0.5 else ()
            return A.While(c.cond, inv, self.noise(c.body))
        r = self.rng.random()
        if r < 0.2:
            return A.Seq((A.Skip(), c))
        if r < 0.3:
            return A.Seq((c, A.Skip()))
        return c

    def mutate(self, c: A.Command) -> A.Command:
        """Change one primitive command; the result may still be equivalent by accident."""
        prims = list(_prims(c))
        if not prims:
            return A.seq(c, self.assign())
        target = self.rng.choice(prims)
        return _replace_prim(c, target, self.assign())


def _prims(c: A.Command):
    if isinstance(c, A.Seq):
        for it in c.items:
            yield from _prims(it)
    elif isinstance(c, A.If):
        yield from _prims(c.then)
        yield from _prims(c.orelse)
    elif isinstance(c, A.While):
        yield from _prims(c.body)
    elif isinstance(c, A.VarBlock):
        yield from _prims(c.body)
    elif isinstance(c, A.Assign) and not c.target.startswith("k"):
        yield c


def _replace_prim(c: A.Command, target: A.Command, new: A.Command) -> A.Command:
    if c is target:
        return new
    if isinstance(c, A.Seq):
        return A.Seq(tuple(_replace_prim(x, target, new) for x in c.items))
    if isinstance(c, A.If):
        return A.If(c.cond, _replace_prim(c.then, target, new), _replace_prim(c.orelse, target, new))
    if isinstance(c, A.While):
        return A.While(c.cond, c.invariants, _replace_prim(c.body, target, new))
    return c


# ========== independent program equality ==========


def shape(c: A.Command) -> Tuple:
    """Normal form as nested tuples of source text.

    Written independently of :func:`relverify.align.normalize`: it walks the
    command once, keeps the primitive commands in order and renders
    conditions and assignments through the pretty-printer.
    """
    out: List[Tuple] = []
    _shape_into(c, out)
    return tuple(out)


def _shape_into(c: A.Command, out: List[Tuple]) -> None:
    if isinstance(c, A.Seq):
        for it in c.items:
            _shape_into(it, out)
    elif isinstance(c, A.Skip):
        return
    elif isinstance(c, A.Assert):
        out.append(("assert", pretty_expr(c.formula)))
    elif isinstance(c, A.If):
        out.append(("if", pretty_expr(c.cond), shape(c.then), shape(c.orelse)))
    elif isinstance(c, A.While):
        out.append(("while", pretty_expr(c.cond), shape(c.body)))
    elif isinstance(c, A.VarBlock):
        out.append(("var", c.name, str(c.vtype), shape(c.body)))
    else:
        out.append(("cmd", pretty_command(c)))


def same_program(a: A.Command, b: A.Command) -> bool:
    return shape(a) == shape(b)


@dataclass
class AdequacyCase:
    bi: A.Biprogram
    left: A.Command
    right: A.Command

    @property
    def expected(self) -> bool:
        return same_program(self.left, project(self.bi, LEFT)) and same_program(self.right, project(self.bi, RIGHT))


def adequacy_case(gen: ProgramGen) -> AdequacyCase:
    """A biprogram with two candidate source programs, adequate or not."""
    bi = gen.biprogram()
    left, right = project(bi, LEFT), project(bi, RIGHT)
    r = gen.rng.random()
    if r < 0.25:
        left = gen.mutate(left)
    elif r < 0.5:
        right = gen.mutate(right)
    return AdequacyCase(bi, gen.noise(left), gen.noise(right))


# ========== product coherence ==========


def check_coherence(gen: ProgramGen, bi: A.Biprogram, fuel: int = SMALL_FUEL) -> Optional[str]:
    """Compare a product run with separate runs of both projections.

    Returns a description of the first disagreement, or None. Product runs
    that fault (e.g. on guard disagreement) or run out of fuel are vacuous.
    """
    world = gen.world()
    sl, sr = gen.state(), gen.state()
    m = A.BiMethodDecl("gen", (), (), A.UNIT, A.UNIT, A.RelSpec(), bi)
    res = eval_product(build_product(m), sl, sr, RefPerm(), fuel, left=world, right=world)
    if isinstance(res, (Fault, OutOfFuel)):
        return None
    for side, start, final in ((LEFT, sl, res.left), (RIGHT, sr, res.right)):
        alone = eval_command(project(bi, side), start, fuel, world=world)
        if isinstance(alone, (Fault, OutOfFuel)):
            return f"{side} projection failed alone: {alone!r}"
        st, _ = alone
        if st.globals != final.globals:
            return f"{side}: product {final.globals} vs projection {st.globals}"
    return None


# ========== verified methods ==========


@dataclass
class MethodCase:
    """Source of a module ``Gen`` whose method ``m`` should verify."""

    source: str
    loop: bool


class MethodGen:
    """Straight-line methods with at most one counting loop, over ints and one class.

    The postconditions are computed by symbolic execution, so every
    generated method is correct by construction.
    """

    LOCALS = ("x", "y")

    def __init__(self, rng: random.Random):
        self.rng = rng

    def _operand(self, sym: Dict[str, A.Expr]) -> Tuple[A.Expr, A.Expr]:
        """A random atom as written in code, and its symbolic value."""
        choices = ["a", "b", "x", "y", "g", "c.val", "lit"]
        pick = self.rng.choice(choices)
        if pick == "lit":
            n = self.rng.randint(-3, 3)
            return _int(n), _int(n)
        if pick == "c.val":
            return A.FieldRead(_v("c"), "val", ty=A.INT), sym["c.val"]
        if pick in ("a", "b"):
            return _v(pick), _v(pick)
        return _v(pick), sym[pick]

    def _expr(self, sym: Dict[str, A.Expr]) -> Tuple[A.Expr, A.Expr]:
        code, val = self._operand(sym)
        for _ in range(self.rng.randint(0, 2)):
            c2, v2 = self._operand(sym)
            op = self.rng.choice(("+", "-"))
            if self.rng.random() < 0.3:
                k = self.rng.randint(-2, 3)
                c2, v2 = _bin("*", _int(k), c2), _bin("*", _int(k), v2)
            code, val = _bin(op, code, c2), _bin(op, val, v2)
        return code, val

    def method(self) -> MethodCase:
        sym: Dict[str, A.Expr] = {
            "x": _int(0),
            "y": _int(0),
            "s": _int(0),
            "g": A.Old(_v("g"), ty=A.INT),
            "c.val": A.Old(A.FieldRead(_v("c"), "val", ty=A.INT), ty=A.INT),
        }
        body: List[str] = []
        has_loop = self.rng.random() < 0.5
        steps = self.rng.randint(2, 5)
        loop_at = self.rng.randint(0, steps) if has_loop else -1
        for i in range(steps + 1):
            if i == loop_at:
                self._loop(sym, body)
            if i == steps:
                break
            target = self.rng.choice(("x", "y", "g", "c.val"))
            code, val = self._expr(sym)
            body.append(f"{target} := {pretty_expr(code)}")
            sym[target] = val
        code, val = self._expr(sym)
        body.append(f"result := {pretty_expr(code)}")
        ensures = [
            f"ensures {{ result = {pretty_expr(val)} }}",
            f"ensures {{ g = {pretty_expr(sym['g'])} }}",
            f"ensures {{ c.val = {pretty_expr(sym['c.val'])} }}",
        ]
        src = "\n".join(
            [
                "module Gen =",
                "  g: int",
                "  class Cell { val: int }",
                "  meth m(c: Cell, a: int, b: int): int",
                "    requires { (c <> null) /\\ (0 <= a) }",
                *(f"    {e}" for e in ensures),
                "    effects { rw g; rw {c}`val }",
                "  = var x: int in var y: int in var s: int in var s0: int in var i: int in",
                "    " + ";\n    ".join(body),
            ]
        )
        return MethodCase(src + "\n", has_loop)

    def _loop(self, sym: Dict[str, A.Expr], body: List[str]) -> None:
        d = self.rng.randint(-2, 3)
        code, val = self._expr(sym)
        body.append(f"s := {pretty_expr(code)}")
        body.append("s0 := s")
        body.append("i := 0")
        body.append(
            "while i < a do"
            " invariant { (0 <= i) /\\ (i <= a) /\\ (s = (s0 + (i * " + pretty_expr(_int(d)) + "))) }"
            " s := s + " + pretty_expr(_int(d)) + "; i := i + 1 done"
        )
        sym["s"] = _bin("+", val, _bin("*", _v("a"), _int(d)))
        body.append("x := x + s")
        sym["x"] = _bin("+", sym["x"], sym["s"])


__all__ = [
    "ADEQUACY_CASES",
    "COHERENCE_RUNS",
    "DIFFERENTIAL_METHODS",
    "STATES_PER_METHOD",
    "SMALL_FUEL",
    "ProgramGen",
    "MethodGen",
    "MethodCase",
    "AdequacyCase",
    "adequacy_case",
    "check_coherence",
    "shape",
    "same_program",
]
