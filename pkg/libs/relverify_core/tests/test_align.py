from __future__ import annotations

import random

import pytest

from relverify.align import LEFT, RIGHT, build_product, check_adequacy, check_guard_fragment, default_biprogram, project
from relverify.diagnostics import AdequacyError, AlignmentError
from relverify.frontend import parse_biprogram, parse_command, parse_rel
from relverify.lang import ast as A
from relverify.pipeline import check_alignment
from relverify.testing import ProgramGen, adequacy_case


def test_mult_biprogram_is_adequate(example):
    tp = example("mult").program()
    bm = tp.unit("MultRel").bimethods[0]
    lw, rw = tp.sides("MultRel")
    rep = check_adequacy(bm.body, lw.method("mult").body, rw.method("mult").body)
    assert rep.ok, rep.format()


def test_mismatch_is_reported_on_its_side(example):
    tp = example("bad_adequacy").program()
    with pytest.raises(AdequacyError) as ei:
        check_alignment(tp)
    [(name, rep)] = ei.value.report
    assert name == "MultRel.mult"
    assert rep.mismatches and all(m.side == RIGHT for m in rep.mismatches)
    assert ei.value.span is not None


def test_default_alignment_projects_to_the_sources():
    l = parse_command("x := 1; y := x")
    r = parse_command("y := 2")
    bi = default_biprogram(l, r)
    assert project(bi, LEFT) == l
    assert project(bi, RIGHT) == r
    assert check_adequacy(bi, l, r).ok


def test_relational_assertions_erase_to_skip():
    bi = A.BAssert(parse_rel("x =:= x"))
    assert project(bi, LEFT) == A.Skip()
    assert project(bi, RIGHT) == A.Skip()
    with pytest.raises(ValueError):
        project(bi, "middle")


def test_adequacy_agrees_with_structural_oracle():
    gen = ProgramGen(random.Random(1234))
    seen = {True: 0, False: 0}
    for _ in range(150):
        case = adequacy_case(gen)
        rep = check_adequacy(case.bi, case.left, case.right)
        assert rep.ok == case.expected, rep.format()
        seen[case.expected] += 1
    assert seen[True] and seen[False]


def test_guard_fragment():
    check_guard_fragment(parse_rel("*<| x < y *<] /\\ (x =:= x)"))
    with pytest.raises(AlignmentError, match="outside the supported fragment"):
        check_guard_fragment(parse_rel("*<| forall x: int. x = x *<]"))
    with pytest.raises(AlignmentError):
        check_guard_fragment(parse_rel("*<| old(x) = x *<]"))


def test_product_needs_a_body():
    m = A.BiMethodDecl("m", (), (), A.UNIT, A.UNIT, A.RelSpec(), None)
    with pytest.raises(AlignmentError, match="has no body"):
        build_product(m)


def test_aligned_call_projects_each_sides_call():
    bi = parse_biprogram("|_ x | y := m(a | b) _|")
    assert project(bi, LEFT) == parse_command("x := m(a)")
    assert project(bi, RIGHT) == parse_command("y := m(b)")
    bi = parse_biprogram("|_ m(a, 1 | b, 2) _|")
    assert project(bi, LEFT) == parse_command("m(a, 1)")
    assert project(bi, RIGHT) == parse_command("m(b, 2)")
    assert check_adequacy(bi, parse_command("m(a, 1)"), parse_command("m(b, 2)")).ok
    assert not check_adequacy(bi, parse_command("m(a, 1)"), parse_command("m(a, 1)")).ok


def test_source_assertions_are_not_erased():
    l = parse_command("x := 1; assert { x = 1 }")
    r = parse_command("x := 1")
    rep = check_adequacy(default_biprogram(parse_command("x := 1"), r), l, r)
    assert not rep.ok
    [mm] = rep.mismatches
    assert mm.side == LEFT
    assert check_adequacy(default_biprogram(l, r), l, r).ok
    # a relational assertion only contributes skips to the projections
    bi = A.bseq(A.BSync(parse_command("x := 1")), A.BAssert(parse_rel("x =:= x")))
    assert check_adequacy(bi, r, r).ok
