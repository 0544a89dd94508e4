"""Syntactic adequacy: a biprogram's projections are the programs it relates."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..diagnostics import Span
from ..lang import ast as A
from ..lang.pretty import pretty_command
from .projection import LEFT, RIGHT, project

log = logging.getLogger("relverify.align")


def normalize(c: A.Command) -> A.Command:
    """Flatten sequences, drop ``skip``, erase loop invariants.

    Source assertions are kept; a relational assertion projects to ``skip``
    and disappears with the rest.

    Source locations are already ignored by node equality.
    """
    items = [x for x in _flat(c)]
    if not items:
        return A.Skip()
    if len(items) == 1:
        return items[0]
    return A.Seq(tuple(items))


def _flat(c: A.Command) -> List[A.Command]:
    if isinstance(c, A.Seq):
        out: List[A.Command] = []
        for it in c.items:
            out.extend(_flat(it))
        return out
    if isinstance(c, A.Skip):
        return []
    if isinstance(c, A.VarBlock):
        return [A.VarBlock(c.name, c.vtype, normalize(c.body))]
    if isinstance(c, A.If):
        return [A.If(c.cond, normalize(c.then), normalize(c.orelse))]
    if isinstance(c, A.While):
        return [A.While(c.cond, (), normalize(c.body))]
    return [c]


@dataclass(frozen=True)
class Mismatch:
    side: str
    path: str
    expected: str
    found: str
    span: Optional[Span] = None

    def format(self) -> str:
        where = f"{self.span}: " if self.span is not None else ""
        return (
            f"{where}{self.side} projection differs at {self.path}\n"
            f"  source:     {self.expected}\n  projection: {self.found}"
        )


@dataclass
class AdequacyReport:
    mismatches: List[Mismatch] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def format(self) -> str:
        return "\n".join(m.format() for m in self.mismatches) or "adequate"


def _brief(c: Optional[A.Command]) -> str:
    if c is None:
        return "<nothing>"
    text = pretty_command(c)
    first = text.splitlines()[0] if text else ""
    return first + (" ..." if "\n" in text else "")


def _span_of(*cs: Optional[A.Command]) -> Optional[Span]:
    for c in cs:
        if c is not None and c.span is not None:
            return c.span
    return None


def first_difference(
    expected: A.Command, found: A.Command, path: str = "body"
) -> Optional[Tuple[str, Optional[A.Command], Optional[A.Command]]]:
    """Path to the first differing node of two normalized commands."""
    if expected == found:
        return None
    if isinstance(expected, A.Seq) and isinstance(found, A.Seq):
        for i, (e, f) in enumerate(zip(expected.items, found.items)):
            d = first_difference(e, f, f"{path}[{i}]")
            if d is not None:
                return d
        n = min(len(expected.items), len(found.items))
        e = expected.items[n] if n < len(expected.items) else None
        f = found.items[n] if n < len(found.items) else None
        return (f"{path}[{n}]", e, f)
    if type(expected) is type(found):
        if isinstance(expected, A.VarBlock) and (expected.name, expected.vtype) == (found.name, found.vtype):  # type: ignore[attr-defined]
            return first_difference(expected.body, found.body, f"{path}.var {expected.name}")  # type: ignore[attr-defined]
        if isinstance(expected, A.If) and expected.cond == found.cond:  # type: ignore[attr-defined]
            d = first_difference(expected.then, found.then, f"{path}.then")  # type: ignore[attr-defined]
            return d or first_difference(expected.orelse, found.orelse, f"{path}.else")  # type: ignore[attr-defined]
        if isinstance(expected, A.While) and expected.cond == found.cond:  # type: ignore[attr-defined]
            return first_difference(expected.body, found.body, f"{path}.do")  # type: ignore[attr-defined]
    return (path, expected, found)


def check_adequacy(bi: A.Biprogram, c_left: A.Command, c_right: A.Command) -> AdequacyReport:
    rep = AdequacyReport()
    for side, source in ((LEFT, c_left), (RIGHT, c_right)):
        want = normalize(source)
        got = normalize(project(bi, side))
        d = first_difference(want, got)
        if d is not None:
            path, e, f = d
            rep.mismatches.append(Mismatch(side, path, _brief(e), _brief(f), _span_of(f, e) or bi.span))
    if not rep.ok:
        log.debug("adequacy mismatch: %s", rep.format())
    return rep


__all__ = ["normalize", "check_adequacy", "first_difference", "AdequacyReport", "Mismatch"]
