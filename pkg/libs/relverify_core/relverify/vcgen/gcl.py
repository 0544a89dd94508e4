"""Guarded commands over solver terms and their weakest preconditions.

Program variables are solver constants. ``wp`` pushes a dictionary of
independent goals backwards through a command: every ``assert`` opens a new
goal, assumptions become hypotheses of the goals after them, and a loop is cut
at its invariants into initiation, preservation and exit goals.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import z3

from ..diagnostics import Span

log = logging.getLogger("relverify.vcgen")


@dataclass(frozen=True)
class VCMeta:
    kind: str
    seq: int
    span: Optional[Span] = None
    message: str = ""
    label: Optional[str] = None  # preset labels (encapsulation obligations)


@dataclass(frozen=True)
class VC:
    label: str
    kind: str
    unit: str
    method: str
    goal: z3.BoolRef = field(compare=False)
    span: Optional[Span] = None
    message: str = ""

    @property
    def source_span(self) -> Optional[str]:
        return str(self.span) if self.span is not None else None


# ========== commands ==========


@dataclass(frozen=True, eq=False)
class GCmd:
    pass


@dataclass(frozen=True, eq=False)
class GAssign(GCmd):
    target: z3.ExprRef
    value: z3.ExprRef


@dataclass(frozen=True, eq=False)
class GHavoc(GCmd):
    targets: Tuple[z3.ExprRef, ...]


@dataclass(frozen=True, eq=False)
class GAssume(GCmd):
    formula: z3.BoolRef


@dataclass(frozen=True, eq=False)
class GAssert(GCmd):
    formula: z3.BoolRef
    meta: VCMeta


@dataclass(frozen=True, eq=False)
class GSeq(GCmd):
    items: Tuple[GCmd, ...]


@dataclass(frozen=True, eq=False)
class GChoice(GCmd):
    left: GCmd
    right: GCmd


@dataclass(frozen=True, eq=False)
class LoopInvariant:
    formula: z3.BoolRef
    init: Optional[VCMeta] = None  # None: assumed, not checked
    preserve: Optional[VCMeta] = None


@dataclass(frozen=True, eq=False)
class GLoop(GCmd):
    """``head`` runs at every guard evaluation, after the invariants are assumed."""

    guard: z3.BoolRef
    invariants: Tuple[LoopInvariant, ...]
    body: GCmd
    head: GCmd = field(default_factory=lambda: GSeq(()))


def gseq(items: Iterable[GCmd]) -> GCmd:
    flat: List[GCmd] = []
    for it in items:
        if isinstance(it, GSeq):
            flat.extend(it.items)
        else:
            flat.append(it)
    if len(flat) == 1:
        return flat[0]
    return GSeq(tuple(flat))


def assigned(c: GCmd) -> List[z3.ExprRef]:
    """Constants a command may change, in first-assignment order."""
    out: List[z3.ExprRef] = []
    seen: Set[int] = set()

    def add(t: z3.ExprRef) -> None:
        if t.get_id() not in seen:
            seen.add(t.get_id())
            out.append(t)

    def go(x: GCmd) -> None:
        if isinstance(x, GAssign):
            add(x.target)
        elif isinstance(x, GHavoc):
            for t in x.targets:
                add(t)
        elif isinstance(x, GSeq):
            for it in x.items:
                go(it)
        elif isinstance(x, GChoice):
            go(x.left)
            go(x.right)
        elif isinstance(x, GLoop):
            go(x.head)
            go(x.body)

    go(c)
    return out


# ========== weakest preconditions ==========

Goals = Dict[int, Tuple[VCMeta, z3.BoolRef]]


class WP:
    """Weakest-precondition calculator; owns the fresh-name counter."""

    def __init__(self) -> None:
        self._fresh = 0

    def fresh(self, c: z3.ExprRef) -> z3.ExprRef:
        self._fresh += 1
        return z3.Const(f"{c.decl().name()}!{self._fresh}", c.sort())

    def run(self, c: GCmd, goals: Optional[Goals] = None) -> Goals:
        return self._wp(c, dict(goals or {}))

    def _wp(self, c: GCmd, goals: Goals) -> Goals:
        if isinstance(c, GSeq):
            for it in reversed(c.items):
                goals = self._wp(it, goals)
            return goals
        if isinstance(c, GAssign):
            return _subst(goals, [(c.target, c.value)])
        if isinstance(c, GHavoc):
            return _subst(goals, [(t, self.fresh(t)) for t in c.targets])
        if isinstance(c, GAssume):
            if z3.is_false(c.formula):
                return {}
            if z3.is_true(c.formula):
                return goals
            return {k: (m, z3.Implies(c.formula, f)) for k, (m, f) in goals.items()}
        if isinstance(c, GAssert):
            out = {k: (m, z3.Implies(c.formula, f)) for k, (m, f) in goals.items()}
            out[c.meta.seq] = (c.meta, c.formula)
            return out
        if isinstance(c, GChoice):
            left = self._wp(c.left, goals)
            right = self._wp(c.right, goals)
            merged: Goals = {}
            for k in sorted(set(left) | set(right)):
                if k in left and k in right:
                    merged[k] = (left[k][0], z3.And(left[k][1], right[k][1]))
                else:
                    merged[k] = left[k] if k in left else right[k]
            return merged
        if isinstance(c, GLoop):
            return self._loop(c, goals)
        raise TypeError(f"not a guarded command: {c!r}")

    def _loop(self, c: GLoop, goals: Goals) -> Goals:
        targets = assigned(GSeq((c.head, c.body)))
        pairs = [(t, self.fresh(t)) for t in targets]
        invs = z3.And([i.formula for i in c.invariants]) if c.invariants else z3.BoolVal(True)
        preserve: Goals = {i.preserve.seq: (i.preserve, i.formula) for i in c.invariants if i.preserve is not None}
        body = self._wp(c.body, preserve)
        body = {k: (m, z3.Implies(c.guard, f)) for k, (m, f) in body.items()}
        exits = {k: (m, z3.Implies(z3.Not(c.guard), f)) for k, (m, f) in goals.items()}
        at_head = self._wp(c.head, {**exits, **body})
        out: Goals = {}
        for i in c.invariants:
            if i.init is not None:
                out[i.init.seq] = (i.init, i.formula)
        for k, (m, f) in at_head.items():
            out[k] = (m, z3.Implies(z3.substitute(invs, *pairs) if pairs else invs, _sub(f, pairs)))
        return out


def _sub(f: z3.BoolRef, pairs: Sequence[Tuple[z3.ExprRef, z3.ExprRef]]) -> z3.BoolRef:
    return z3.substitute(f, *pairs) if pairs else f


def _subst(goals: Goals, pairs: Sequence[Tuple[z3.ExprRef, z3.ExprRef]]) -> Goals:
    return {k: (m, _sub(f, pairs)) for k, (m, f) in goals.items()}


def wp(c: GCmd, post: Optional[Goals] = None) -> Goals:
    return WP().run(c, post)


# ========== dump ==========


def pretty_gcl(c: GCmd, depth: int = 0) -> str:
    pad = "  " * depth
    if isinstance(c, GSeq):
        return "\n".join(pretty_gcl(x, depth) for x in c.items) if c.items else f"{pad}skip"
    if isinstance(c, GAssign):
        return f"{pad}{c.target} := {c.value}"
    if isinstance(c, GHavoc):
        return f"{pad}havoc " + ", ".join(str(t) for t in c.targets)
    if isinstance(c, GAssume):
        return f"{pad}assume {c.formula}"
    if isinstance(c, GAssert):
        return f"{pad}assert[{c.meta.kind}] {c.formula}"
    if isinstance(c, GChoice):
        return f"{pad}choice\n{pretty_gcl(c.left, depth + 1)}\n{pad}or\n{pretty_gcl(c.right, depth + 1)}"
    if isinstance(c, GLoop):
        invs = "\n".join(f"{pad}  invariant {i.formula}" for i in c.invariants)
        head = pretty_gcl(c.head, depth + 1)
        return f"{pad}loop {c.guard}\n{invs}\n{pad}head\n{head}\n{pad}do\n{pretty_gcl(c.body, depth + 1)}"
    raise TypeError(f"not a guarded command: {c!r}")


__all__ = [
    "VCMeta",
    "VC",
    "GCmd",
    "GAssign",
    "GHavoc",
    "GAssume",
    "GAssert",
    "GSeq",
    "GChoice",
    "GLoop",
    "LoopInvariant",
    "gseq",
    "assigned",
    "Goals",
    "WP",
    "wp",
    "pretty_gcl",
]
