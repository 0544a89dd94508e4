from __future__ import annotations

import pytest

from relverify.diagnostics import LinkError
from relverify.frontend import link, load_units, parse


def _units(*sources: str):
    return [parse(src, f"u{i}.wrl") for i, src in enumerate(sources)]


def test_duplicate_field_rejected():
    a = "module A =\n  class C { f: int }\n"
    b = "module B =\n  class D { f: int }\n"
    with pytest.raises(LinkError, match="duplicate field 'f'"):
        link(_units(a, b))


def test_module_must_implement_interface():
    iface = "interface I =\n  meth m(x: int)\n"
    mod = "module M : I =\n  meth other() = skip\n"
    with pytest.raises(LinkError, match="does not implement I.m"):
        link(_units(iface, mod))


def test_signature_mismatch():
    iface = "interface I =\n  meth m(x: int)\n"
    mod = "module M : I =\n  meth m(y: int) = skip\n"
    with pytest.raises(LinkError, match="signature mismatch"):
        link(_units(iface, mod))


def test_boundary_only_in_interfaces():
    mod = "module M =\n  pool: rgn\n  boundary { pool }\n"
    with pytest.raises(LinkError, match="boundary declared outside an interface"):
        link(_units(mod))


def test_unresolved_import():
    with pytest.raises(LinkError, match="unresolved"):
        link(_units("module M imports NOPE =\n  meth m() = skip\n"))


def test_search_path_resolves_imports(example):
    ex = example("encap_cell")
    units, inputs = load_units(ex.inputs, ex.search_path)
    assert inputs == ["BadCell"]
    assert {u.name for u in units} == {"BadCell", "STACK"}


def test_executable_world_needs_binding_with_two_implementations(example):
    tp = example("stack").program()
    assert tp.implementers("STACK") == ["ArrayStack", "ListStack"]
    with pytest.raises(LinkError, match="needs an explicit binding"):
        tp.executable_world("Client")
    w = tp.executable_world("Client", {"STACK": "ListStack"})
    assert w.classes.field("top") is not None
    assert w.classes.field("items") is None


def test_client_world_sees_only_the_interface(example):
    tp = example("stack").program()
    client = tp.world("Client")
    assert client.classes.field("abs") is not None
    assert client.classes.field("items") is None
    assert client.method("push") is not None


def test_relational_context_includes_imported_bimodules(example):
    tp = example("stack").program()
    specs = tp.relspecs("ClientRel")
    assert {"prog", "init", "push", "pop"} <= set(specs)
    lw, rw = tp.sides("StackRel")
    assert (lw.name, rw.name) == ("ArrayStack", "ListStack")
