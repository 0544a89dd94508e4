"""Verification-condition generation."""
from __future__ import annotations

import logging
from typing import List, Optional, Sequence

from ..encap import EncapReport, check_encapsulation, own_methods
from ..typecheck import TypedProgram
from .gcl import VC, pretty_gcl, wp
from .relational import gen_relational_vcs, translate_product
from .theory import Theory, emit_theory
from .unary import frame_posts, frames_lemma_vcs, translate_unary, unary_vcs

log = logging.getLogger("relverify.vcgen")


def generate_vcs(
    tp: TypedProgram,
    th: Optional[Theory] = None,
    report: Optional[EncapReport] = None,
    *,
    units: Optional[Sequence[str]] = None,
    trust_wf: bool = False,
) -> List[VC]:
    """All VCs of the program (or of ``units``): unary procedures, bimethod
    products and frames lemmas, in a stable order."""
    th = th or emit_theory(tp)
    report = report if report is not None else check_encapsulation(tp, units)
    out: List[VC] = []
    for name in sorted(tp.worlds):
        if units is not None and name not in units:
            continue
        if tp.unit(name).kind != "module":
            continue
        w = tp.world(name)
        for m in own_methods(w):
            out.extend(unary_vcs(th, w, m, report=report, trust_wf=trust_wf))
    for bm in sorted(tp.bimodules(), key=lambda u: u.name):
        if units is not None and bm.name not in units:
            continue
        for m in bm.bimethods:
            out.extend(gen_relational_vcs(th, tp, bm.name, m, trust_wf=trust_wf))
    out.extend(frames_lemma_vcs(th, tp, report, units))
    log.info("vcgen: %d VCs", len(out))
    return out


__all__ = [
    "VC",
    "Theory",
    "emit_theory",
    "generate_vcs",
    "translate_unary",
    "translate_product",
    "frame_posts",
    "unary_vcs",
    "gen_relational_vcs",
    "frames_lemma_vcs",
    "wp",
    "pretty_gcl",
]
