from __future__ import annotations

import z3

from relverify.align import build_product, pretty_product
from relverify.align.product import PCall, PGuardedLoop, PLoop, PSeq, PVar
from relverify.constants import KIND_ADEQUACY_INV, KIND_GUARD_AGREE
from relverify.frontend import parse_biprogram
from relverify.lang import ast as A
from relverify.pipeline import products


def _loops(p):
    if isinstance(p, PSeq):
        for it in p.items:
            yield from _loops(it)
    elif isinstance(p, PVar):
        yield from _loops(p.body)
    elif isinstance(p, (PLoop, PGuardedLoop)):
        yield p
        yield from _loops(p.body)


def test_lockstep_loop_gets_guard_agreement(example):
    ir = products(example("mult").program())["MultRel.mult"]
    [loop] = list(_loops(ir.body))
    assert isinstance(loop, PLoop)
    kinds = [k for _, k in loop.invariants]
    assert kinds[-1] == KIND_GUARD_AGREE
    text = pretty_product(ir)
    assert text.startswith("product mult\n")
    assert "loop (i < n) | (i < n)" in text
    assert "invariant[guard-agreement]" in text
    assert "assert[assert]" in text


def test_conditionally_aligned_loop(example):
    ir = products(example("sumpub").program())["SumPubRel.sumpub"]
    [loop] = list(_loops(ir.body))
    assert isinstance(loop, PGuardedLoop)
    assert loop.lguard is not None and loop.rguard is not None
    assert [k for _, k in loop.invariants][-1] == KIND_ADEQUACY_INV
    text = pretty_product(ir)
    assert "guarded loop" in text
    assert "left-only when" in text and "right-only when" in text
    assert "invariant[adequacy-invariant]" in text


def test_calls_and_allocations_are_aligned(example):
    irs = products(example("stack").program())
    assert "ClientRel.prog" in irs
    text = pretty_product(irs["ClientRel.prog"])
    assert "stk | stk := new Stack (paired)" in text
    assert "init(stk | stk) (aligned)" in text
    assert "c | c := pop(stk | stk) (aligned)" in text
    assert "push(stk, i | stk, i) (aligned)" in text


def test_aligned_call_keeps_each_sides_arguments():
    bi = parse_biprogram("|_ x | y := m(a | b) _|")
    ir = build_product(A.BiMethodDecl("t", (), (), A.UNIT, A.UNIT, A.RelSpec(), bi))
    assert ir.body == PCall("m", (A.Var("a"),), (A.Var("b"),), "x", "y")
    assert "x | y := m(a | b) (aligned)" in pretty_product(ir)
    bi = parse_biprogram("|_ y := m(a) _|")
    ir = build_product(A.BiMethodDecl("t", (), (), A.UNIT, A.UNIT, A.RelSpec(), bi), is_method=lambda n: n == "m")
    assert ir.body == PCall("m", (A.Var("a"),), (A.Var("a"),), "y", "y")


def _prop(rf, atoms):
    """Boolean skeleton of a quantifier-free relational formula over its side atoms."""
    if isinstance(rf, A.RBin):
        a, b = _prop(rf.left, atoms), _prop(rf.right, atoms)
        return {"/\\": z3.And, "\\/": z3.Or, "->": z3.Implies}.get(rf.op, lambda x, y: x == y)(a, b)
    if isinstance(rf, A.RNot):
        return z3.Not(_prop(rf.operand, atoms))
    if isinstance(rf, A.RBool):
        return z3.BoolVal(rf.value)
    if isinstance(rf, (A.LeftF, A.RightF)) and isinstance(rf.formula, A.Unary) and rf.formula.op == "not":
        return z3.Not(_prop(type(rf)(rf.formula.operand), atoms))
    if rf not in atoms:
        atoms[rf] = z3.Bool(f"a{len(atoms)}")
    return atoms[rf]


def _valid(f):
    s = z3.Solver()
    s.add(z3.Not(f))
    return s.check() == z3.unsat


def test_adequacy_invariant_covers_every_iteration_case(example):
    ir = products(example("sumpub").program())["SumPubRel.sumpub"]
    [loop] = list(_loops(ir.body))
    atoms = {}
    inv = _prop(loop.adequacy, atoms)
    lc, rc = _prop(A.LeftF(loop.lcond), atoms), _prop(A.RightF(loop.rcond), atoms)
    lg, rg = _prop(loop.lguard, atoms), _prop(loop.rguard, atoms)
    for case in (z3.And(lc, lg), z3.And(rc, rg), z3.And(lc, rc), z3.And(z3.Not(lc), z3.Not(rc))):
        assert _valid(z3.Implies(case, inv))
    # a left-only step the left guard does not allow is not covered
    assert not _valid(z3.Implies(z3.And(lc, z3.Not(rc), z3.Not(lg)), inv))


def test_adequacy_invariant_of_integer_guards():
    bi = parse_biprogram(
        "while x < 3 | y < 3 . *<| x < 2 *<] | [> 2 <= y |> do ( x := x + 1 | y := y + 1 ) done"
    )
    ir = build_product(A.BiMethodDecl("t", (), (), A.UNIT, A.UNIT, A.RelSpec(), bi))
    loop = ir.body
    assert isinstance(loop, PGuardedLoop)
    atoms = {}
    inv = _prop(loop.adequacy, atoms)
    lc, rc = _prop(A.LeftF(loop.lcond), atoms), _prop(A.RightF(loop.rcond), atoms)
    lg, rg = _prop(loop.lguard, atoms), _prop(loop.rguard, atoms)
    for case in (z3.And(lc, lg), z3.And(rc, rg), z3.And(lc, rc), z3.And(z3.Not(lc), z3.Not(rc))):
        assert _valid(z3.Implies(case, inv))
    assert not _valid(z3.Implies(z3.And(rc, z3.Not(lc), z3.Not(rg)), inv))
