from __future__ import annotations

import pytest

from relverify.diagnostics import TypecheckError
from relverify.frontend import link, parse
from relverify.lang import ast as A
from relverify.typecheck import typecheck


def _typed(src: str):
    return typecheck(link([parse(src, "T.wrl")])).world("T")


def test_assignment_type_mismatch():
    with pytest.raises(TypecheckError, match="cannot assign bool to 'x' of type int"):
        _typed("module T =\n  meth m(x: int) = x := true\n")


def test_ghost_field_not_readable_by_code():
    src = "module T =\n  class C { ghost g: int; v: int }\n  meth m(c: C) = c.v := c.g\n"
    with pytest.raises(TypecheckError, match="ghost field 'g' read in non-ghost code"):
        _typed(src)


def test_ghost_field_may_be_written_from_code():
    w = _typed("module T =\n  class C { ghost g: int; v: int }\n  meth m(c: C) = c.g := c.v\n")
    assert isinstance(w.method("m").body, A.FieldAssign)


def test_old_only_in_postconditions():
    src = "module T =\n  g: int\n  meth m() requires { old(g) = 0 } = skip\n"
    with pytest.raises(TypecheckError, match=r"old\(\.\.\.\) is only allowed"):
        _typed(src)


def test_unbound_identifier():
    with pytest.raises(TypecheckError, match="unbound identifier 'y'"):
        _typed("module T =\n  meth m() = y := 1\n")


def test_unknown_type():
    with pytest.raises(TypecheckError, match="unknown type Nope"):
        _typed("module T =\n  meth m(x: Nope) = skip\n")


def test_expressions_are_annotated():
    w = _typed("module T =\n  meth m(x: int) : bool = result := x < 1\n")
    body = w.method("m").body
    assert isinstance(body, A.Assign)
    assert body.value.ty == A.BOOL
    assert body.value.left.ty == A.INT


def test_datagroups_expand_over_the_world(example):
    tp = example("stack").program()
    arr = tp.world("ArrayStack").method("push").spec.effects.written_fields()
    client = tp.world("Client").method("push").spec.effects.written_fields()
    assert "items" in arr and "abs" in arr
    assert "items" not in client and "abs" in client


def test_relational_agreement_needs_equal_types():
    src_l = "module L =\n  meth m(x: int) = skip\n"
    src_r = "module R =\n  meth m(x: bool) = skip\n"
    bi = "bimodule LR (L | R) =\n  meth m(x: int | x: bool)\n    requires { x =:= x }\n"
    units = [parse(src_l, "L.wrl"), parse(src_r, "R.wrl"), parse(bi, "LR.wrl")]
    with pytest.raises(TypecheckError, match="agreement between unequal types"):
        typecheck(link(units))
