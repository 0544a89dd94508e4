from __future__ import annotations

import z3

from relverify.constants import KIND_ASSERT, KIND_CALL_PRE, KIND_LOOP_INIT, KIND_LOOP_PRESERVE, KIND_POST, KIND_WF
from relverify.smt import emit_smtlib
from relverify.vcgen import emit_theory, generate_vcs, wp
from relverify.vcgen.gcl import GAssert, GAssign, GAssume, GChoice, GLoop, GSeq, LoopInvariant, VCMeta


def _valid(f: z3.BoolRef) -> bool:
    s = z3.Solver()
    s.add(z3.Not(f))
    return s.check() == z3.unsat


def test_wp_assignment_and_assumption():
    x = z3.Int("x")
    c = GSeq((GAssume(x >= 0), GAssign(x, x + 1), GAssert(x > 0, VCMeta(KIND_ASSERT, 1))))
    goals = wp(c)
    assert list(goals) == [1]
    meta, goal = goals[1]
    assert meta.kind == KIND_ASSERT
    assert _valid(goal)


def test_wp_choice_keeps_both_branches():
    x = z3.Int("x")
    c = GSeq((GChoice(GAssign(x, z3.IntVal(1)), GAssign(x, z3.IntVal(-1))), GAssert(x > 0, VCMeta(KIND_ASSERT, 1))))
    assert not _valid(wp(c)[1][1])


def test_wp_loop_is_cut_at_its_invariant():
    x = z3.Int("x")
    inv = LoopInvariant(z3.And(0 <= x, x <= 10), VCMeta(KIND_LOOP_INIT, 1), VCMeta(KIND_LOOP_PRESERVE, 2))
    c = GSeq((
        GAssign(x, z3.IntVal(0)),
        GLoop(x < 10, (inv,), GAssign(x, x + 1)),
        GAssert(x == 10, VCMeta(KIND_ASSERT, 3)),
    ))
    goals = wp(c)
    assert sorted(goals) == [1, 2, 3]
    assert all(_valid(g) for _, g in goals.values())

    weak = LoopInvariant(0 <= x, VCMeta(KIND_LOOP_INIT, 1), VCMeta(KIND_LOOP_PRESERVE, 2))
    c = GSeq((
        GAssign(x, z3.IntVal(0)),
        GLoop(x < 10, (weak,), GAssign(x, x + 1)),
        GAssert(x == 10, VCMeta(KIND_ASSERT, 3)),
    ))
    goals = wp(c)
    assert _valid(goals[1][1]) and _valid(goals[2][1])
    assert not _valid(goals[3][1])


def test_mult_vcs(example):
    tp = example("mult").program()
    th = emit_theory(tp)
    vcs = generate_vcs(tp, th)
    labels = [vc.label for vc in vcs]
    assert len(labels) == len(set(labels))
    assert {vc.unit for vc in vcs} <= {"MultL", "MultR", "MultRel"}
    posts = [vc for vc in vcs if vc.unit == "MultRel" and vc.kind == KIND_POST]
    assert posts
    assert all(vc.label.startswith("MultRel:mult:post:") for vc in posts)
    assert any(vc.kind == KIND_LOOP_INIT for vc in vcs)
    assert all(vc.span is not None for vc in posts)


def test_aligned_calls_use_relational_specs(example):
    tp = example("stack").program()
    vcs = generate_vcs(tp, units=["ClientRel"])
    messages = [vc.message for vc in vcs if vc.kind == KIND_CALL_PRE]
    for meth in ("init", "push", "pop"):
        assert f"relational precondition of {meth}" in messages
    # the coupling belongs to StackRel and is not visible to the client product
    assert not any(m.startswith("coupling") for m in messages)
    assert all(vc.unit == "ClientRel" for vc in vcs)


def test_units_restrict_generation(example):
    tp = example("mult").program()
    vcs = generate_vcs(tp, units=["MultR"])
    assert vcs and {vc.unit for vc in vcs} == {"MultR"}


def test_smtlib_script_shape(example):
    tp = example("mult").program()
    th = emit_theory(tp)
    vc = generate_vcs(tp, th, units=["MultRel"])[0]
    text = emit_smtlib(vc, th)
    assert text.startswith(f"; {vc.label} [{vc.kind}]\n")
    assert "(set-logic ALL)" in text
    assert text.rstrip().endswith("(check-sat)")
    assert emit_smtlib(vc, th) == text
    assert not emit_smtlib(vc, th, comments=False).startswith(";")


def test_trusted_well_formedness_is_not_checked(example):
    tp = example("stack").program()
    checked = generate_vcs(tp, units=["Client"])
    trusted = generate_vcs(tp, units=["Client"], trust_wf=True)
    assert any(vc.kind == KIND_WF for vc in checked)
    assert any(vc.message == "well-formedness" for vc in checked)
    assert not any(vc.kind == KIND_WF or vc.message == "well-formedness" for vc in trusted)
    assert len(trusted) < len(checked)
