from __future__ import annotations

import random

from relverify.frontend import link, parse
from relverify.interp import ConcreteState, Loc, check_effects, check_spec, eval_method, eval_product, eval_relformula
from relverify.interp.evaluator import FAULT_NULL, FAULT_PARTIAL, Fault, MethodRun, OutOfFuel
from relverify.interp.product import ProductRun
from relverify.lang.regions import NULL, RefPerm
from relverify.pipeline import products, run_method
from relverify.testing import MethodGen, ProgramGen, check_coherence
from relverify.typecheck import typecheck


def _world(src: str, name: str = "T"):
    return typecheck(link([parse(src, f"{name}.wrl")])).world(name)


def _run(w, name: str, args, st=None, **kw):
    return eval_method(w, name, args, st or ConcreteState.empty(w.globals), **kw)


def test_both_multiplications_agree_on_an_input(example):
    tp = example("mult").program()
    for side in ("MultL", "MultR"):
        run = _run(tp.world(side), "mult", [3, 4])
        assert isinstance(run, MethodRun)
        assert run.result == 12


def test_null_dereference_faults():
    w = _world("module T =\n  class C { v: int }\n  meth m(c: C) : int = result := c.v\n")
    res = _run(w, "m", [NULL])
    assert isinstance(res, Fault) and res.kind == FAULT_NULL
    assert res.span is not None and res.span.line == 3


def test_head_of_nil_faults():
    w = _world("module T =\n  meth m() : int = result := hd(nil)\n")
    res = _run(w, "m", [])
    assert isinstance(res, Fault) and res.kind == FAULT_PARTIAL


def test_fuel_runs_out():
    w = _world("module T =\n  meth m() = while true do skip done\n")
    res = _run(w, "m", [], fuel=50)
    assert isinstance(res, OutOfFuel)
    assert res.steps == 50


def test_effects_checked_against_footprint():
    src = "module T =\n  g: int\n  meth ok() effects { rw g } = g := 1\n  meth bad() effects { rd g } = g := 1\n"
    w = _world(src)
    for name, expected in (("ok", []), ("bad", ["write to g without rw g"])):
        run = _run(w, name, [])
        eff = check_effects(run.trace, w.method(name).spec.effects, run.pre, world=w, env=run.entry)
        assert [v.message for v in eff.violations] == expected


def test_field_writes_are_recorded_and_framed():
    src = (
        "module T =\n  class C { v: int }\n"
        "  meth set(c: C, d: C) effects { rw {c}`v } = c.v := 3\n"
        "  meth leak(c: C, d: C) effects { rw {c}`v } = d.v := 3\n"
    )
    w = _world(src)
    st = ConcreteState.empty(w.globals)
    c, d = st.allocate("C", w.classes), st.allocate("C", w.classes)
    run = _run(w, "set", [c, d], st)
    assert Loc("field", "v", c) in run.trace.writes
    assert run.post.read(c, "v") == 3 and st.read(c, "v") == 0
    assert check_effects(run.trace, w.method("set").spec.effects, run.pre, world=w, env=run.entry).ok
    run = _run(w, "leak", [c, d], st)
    assert not check_effects(run.trace, w.method("leak").spec.effects, run.pre, world=w, env=run.entry).ok


def _mult_product(ex, largs, rargs):
    tp = ex.program()
    ir = products(tp)["MultRel.mult"]
    lw, rw = tp.world("MultL"), tp.world("MultR")
    res = eval_product(
        ir, ConcreteState.empty(), ConcreteState.empty(), RefPerm(), left=lw, right=rw, largs=largs, rargs=rargs
    )
    return tp, lw, rw, res


def test_mult_product_run(example):
    _, _, _, res = _mult_product(example("mult"), [3, 4], [3, 4])
    assert isinstance(res, ProductRun)
    assert res.lenv["result"] == 12 and res.renv["result"] == 12


def test_diverging_guards_fault_in_a_lockstep_loop(example):
    _, _, _, res = _mult_product(example("mult"), [3, 4], [2, 4])
    assert isinstance(res, Fault)
    assert res.kind == "guard-agreement"


def test_mutated_product_breaks_the_relational_post(example):
    tp, lw, rw, res = _mult_product(example("mult_mutated"), [3, 4], [3, 4])
    assert isinstance(res, ProductRun)
    assert res.renv["result"] == 15
    post = tp.unit("MultRel").bimethods[0].spec.ensures[0]
    assert not eval_relformula(post, res.left, res.right, res.pi, left=lw, right=rw, lenv=res.lenv, renv=res.renv)


def test_conditionally_aligned_run(example):
    ex = example("sumpub")
    out = run_method(ex.config("run", method="SumPubRel.sumpub", state=str(ex.root / "state.json")))
    assert out["outcome"] == "ok"
    assert out["left"]["locals"]["result"] == 12
    assert out["right"]["locals"]["result"] == 12
    assert out["pi"] == [[1, 1]]


def test_product_runs_cohere_with_projections():
    gen = ProgramGen(random.Random(2024))
    for _ in range(60):
        assert check_coherence(gen, gen.biprogram()) is None


def test_generated_methods_meet_their_postconditions():
    rng = random.Random(99)
    gen = MethodGen(rng)
    for _ in range(20):
        case = gen.method()
        w = typecheck(link([parse(case.source, "Gen.wrl")])).world("Gen")
        m = w.method("m")
        for _ in range(10):
            st = ConcreteState.empty(w.globals)
            st.globals["g"] = rng.randint(-5, 5)
            c = st.allocate("Cell", w.classes)
            st.write(c, "val", rng.randint(-5, 5))
            run = eval_method(w, "m", [c, rng.randint(0, 5), rng.randint(-5, 5)], st)
            assert isinstance(run, MethodRun), case.source
            assert check_spec(w, m, run, m.spec.ensures) == [], case.source
