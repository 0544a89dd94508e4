from __future__ import annotations

from relverify.constants import KIND_DISJOINT, KIND_FRAMES_LEMMA, KIND_STATIC
from relverify.encap import check_encapsulation, uncovered_reads
from relverify.frontend.parser import parse_expr
from relverify.lang import ast as A
from relverify.lang.desugar import Location, free_locations


def test_client_assigning_a_boundary_variable(example):
    tp = example("encap_pool").program()
    rep = check_encapsulation(tp, list(tp.inputs))
    bad = rep.static_violations()
    assert len(bad) == 1
    assert bad[0].kind == KIND_STATIC
    assert bad[0].unit == "BadPool" and bad[0].owner == "clobber"
    assert bad[0].label.startswith("encap:BadPool.clobber:")
    assert "pool" in bad[0].message


def test_client_field_write_gets_disjointness_obligation(example):
    tp = example("encap_cell").program()
    rep = check_encapsulation(tp, list(tp.inputs))
    assert rep.static_violations() == []
    obs = rep.of_kind(KIND_DISJOINT)
    assert obs and all(o.unit == "BadCell" for o in obs)
    assert rep.disjointness("BadCell", "poke")


def test_stack_is_encapsulated(example):
    tp = example("stack").program()
    rep = check_encapsulation(tp, list(tp.inputs))
    assert rep.static_violations() == []
    assert rep.of_kind(KIND_FRAMES_LEMMA)


def test_labels_are_unique(example):
    tp = example("stack").program()
    rep = check_encapsulation(tp)
    labels = [o.label for o in rep.obligations]
    assert len(labels) == len(set(labels))


def _classes(**fields):
    return A.ClassTable(
        tuple(
            A.ClassDecl(cls, tuple(A.FieldDecl(n, A.Type(t)) for n, t in fs.items()))
            for cls, fs in fields.items()
        )
    )


def test_invariant_reads_are_generalised_to_regions():
    ct = _classes(Stack={"size": "int", "rep": "rgn"})
    inv = parse_expr(
        "forall s: Stack iin pool. 0 <= s.size /\\ s.size <= capacity /\\ "
        "(forall t: Stack iin pool. s <> t -> s.rep ^^ t.rep << {null})"
    )
    pool = A.Var("pool")
    assert free_locations(inv, ct) == {
        Location.of_var("pool"),
        Location.of_var("capacity"),
        Location.of_image(pool, "size"),
        Location.of_image(pool, "rep"),
    }


def test_reads_along_reference_paths_use_field_images():
    ct = _classes(Stack={"top": "Node"}, Node={"nval": "int"})
    inv = parse_expr("forall s: Stack iin pool. s.top <> null -> 0 <= s.top.nval")
    tops = A.Image(A.Var("pool"), "top")
    assert free_locations(inv, ct) == {
        Location.of_var("pool"),
        Location.of_image(A.Var("pool"), "top"),
        Location.of_image(tops, "nval"),
    }
    assert str(Location.of_image(tops, "nval")) == "pool`top`nval"


def test_uncovered_reads_against_a_boundary():
    ct = _classes(Stack={"size": "int", "rep": "rgn"})
    inv = parse_expr("forall s: Stack iin pool. s.size <= capacity")
    b = A.Boundary("STACK", (A.Var("pool"), A.Image(A.Var("pool"), "size")))
    assert [str(x) for x in uncovered_reads(free_locations(inv, ct), b)] == ["capacity"]
    b2 = A.Boundary("STACK", b.atoms + (A.Var("capacity"),))
    assert uncovered_reads(free_locations(inv, ct), b2) == []
