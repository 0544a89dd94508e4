"""Runtime check of recorded footprints against effect clauses."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set

from ..frontend.linker import World
from ..lang import ast as A
from ..lang.regions import Reference, Region
from .evaluator import Env, Evaluator, Trace
from .state import ConcreteState, Loc

log = logging.getLogger("relverify.interp")


@dataclass(frozen=True)
class Violation:
    loc: Loc
    message: str


@dataclass
class EffectCheck:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def format(self) -> str:
        if self.ok:
            return "ok"
        return "; ".join(v.message for v in self.violations)


def _written_regions(ev: Evaluator, eff: A.Effect, s_pre: ConcreteState, env: Env) -> Dict[str, Set[Reference]]:
    """Per field, the references ``eff`` lets the code write, denoted in the pre-state."""
    out: Dict[str, Set[Reference]] = {}
    for a in eff.writes():
        if not a.is_image:
            continue
        img: A.Image = a.target  # type: ignore[assignment]
        region = ev.expr(img.region, s_pre, env)
        if isinstance(region, Reference):
            region = Region.of(region)
        out.setdefault(img.field, set()).update(region.elems)  # type: ignore[union-attr]
    return out


def check_effects(
    t: Trace,
    e: Optional[A.Effect],
    s_pre: ConcreteState,
    *,
    world: World,
    env: Optional[Env] = None,
) -> EffectCheck:
    """Every location written in ``t`` is covered by a write atom of ``e``.

    Image atoms are denoted in ``s_pre`` (with the method's entry ``env``);
    objects allocated during the run are covered by ``alloc``, which also
    covers the growth of the allocation table.
    """
    eff = e or A.Effect()
    ev = Evaluator(world)
    env = env or {}
    allowed_vars = set(eff.written_vars())
    regions = _written_regions(ev, eff, s_pre, env)
    out = EffectCheck()
    for loc in sorted(t.writes):
        if loc.kind == "global":
            if loc.name not in allowed_vars:
                out.violations.append(Violation(loc, f"write to {loc.name} without rw {loc.name}"))
        elif loc.kind == "alloc":
            if not eff.allows_alloc:
                out.violations.append(Violation(loc, f"allocation of {loc.ref} without rw alloc"))
        elif loc.kind == "field":
            fresh = loc.ref not in s_pre.alloc
            if fresh and eff.allows_alloc:
                continue
            if loc.ref in regions.get(loc.name, ()):
                continue
            out.violations.append(Violation(loc, f"write to {loc} outside the declared effects"))
    if out.violations:
        log.debug("effect check: %d violations", len(out.violations))
    return out


__all__ = ["Violation", "EffectCheck", "check_effects"]
