from __future__ import annotations

import functools
import random

import z3

from relverify.frontend import link, parse
from relverify.interp import ConcreteState
from relverify.interp.evaluator import Evaluator
from relverify.lang.regions import NULL, Region
from relverify.typecheck import typecheck
from relverify.vcgen import emit_theory
from relverify.vcgen.theory import ref_sort

SRC = "module T =\n  class A { nxt: B; grp: rgn }\n  class B { back: A }\n"


def _set(elems):
    return functools.reduce(lambda acc, e: z3.Store(acc, e, True), elems, z3.K(ref_sort(), z3.BoolVal(False)))


def _state(rng: random.Random, w):
    st = ConcreteState.empty(w.globals)
    for _ in range(rng.randint(0, 4)):
        st.allocate(rng.choice(("A", "B")), w.classes)
    refs = sorted(st.alloc)
    of = {c: [r for r in refs if st.alloc[r] == c] for c in ("A", "B")}
    for q in of["A"]:
        st.write(q, "nxt", rng.choice([NULL] + of["B"]))
        st.write(q, "grp", Region(frozenset(r for r in [NULL] + refs if rng.random() < 0.4)))
    for q in of["B"]:
        st.write(q, "back", rng.choice([NULL] + of["A"]))
    return st


def test_image_axioms_agree_with_interpreter():
    tp = typecheck(link([parse(SRC, "T.wrl")]))
    w = tp.world("T")
    th = emit_theory(tp)
    ev = Evaluator(w)
    axioms = dict(th.axioms)
    rng = random.Random(5)
    for _ in range(25):
        st = _state(rng, w)
        universe = [NULL] + sorted(st.alloc)
        const = {r: th.null if r == NULL else z3.Const(f"o{r.id}", ref_sort()) for r in universe}
        x = z3.Const("x", ref_sort())
        al = functools.reduce(
            lambda acc, r: z3.Store(acc, const[r], th.code(st.alloc[r])), st.alloc, z3.K(ref_sort(), z3.IntVal(0))
        )
        region = Region(frozenset(r for r in universe if rng.random() < 0.6))
        for f in ("nxt", "back", "grp"):
            if f == "grp":
                h = functools.reduce(
                    lambda acc, q: z3.Store(acc, const[q], _set([const[e] for e in st.read(q, f)])),
                    [q for q in st.alloc if st.alloc[q] == "A"],
                    z3.K(ref_sort(), _set([])),
                )
            else:
                owner = "A" if f == "nxt" else "B"
                h = functools.reduce(
                    lambda acc, q: z3.Store(acc, const[q], const[st.read(q, f)]),
                    [q for q in st.alloc if st.alloc[q] == owner],
                    z3.K(ref_sort(), th.null),
                )
            img = th.img[f](al, h, _set([const[r] for r in region.elems]))
            expected = ev.image(region, f, st)
            s = z3.Solver()
            s.set("timeout", 20000)
            s.add(axioms[f"img.{f}"])
            s.add(z3.Distinct(*const.values()) if len(const) > 1 else z3.BoolVal(True))
            s.add(z3.ForAll([x], z3.Or([x == c for c in const.values()])))
            for r in universe:
                s.push()
                member = z3.Select(img, const[r])
                s.add(member != z3.BoolVal(r in expected))
                assert s.check() == z3.unsat, (f, r, expected)
                s.pop()
