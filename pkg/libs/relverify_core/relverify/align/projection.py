"""Erasure of biprograms to their left and right programs."""
from __future__ import annotations

from ..lang import ast as A

LEFT = "left"
RIGHT = "right"
SIDES = (LEFT, RIGHT)


def project(bi: A.Biprogram, side: str) -> A.Command:
    """Left or right projection of ``bi``. Alignment guards, relational
    invariants and relational assertions are erased."""
    if side not in SIDES:
        raise ValueError(f"unknown side {side!r}")
    left = side == LEFT
    if isinstance(bi, A.BSplit):
        return bi.left if left else bi.right
    if isinstance(bi, A.BSync):
        return bi.cmd
    if isinstance(bi, A.BSeq):
        return A.Seq(tuple(project(x, side) for x in bi.items), span=bi.span)
    if isinstance(bi, A.BVar):
        name, vtype = (bi.lname, bi.ltype) if left else (bi.rname, bi.rtype)
        return A.VarBlock(name, vtype, project(bi.body, side), span=bi.span)
    if isinstance(bi, A.BIf):
        return A.If(
            bi.lcond if left else bi.rcond, project(bi.then, side), project(bi.orelse, side), span=bi.span
        )
    if isinstance(bi, A.BWhile):
        return A.While(bi.lcond if left else bi.rcond, (), project(bi.body, side), span=bi.span)
    if isinstance(bi, A.BAssert):
        return A.Skip(span=bi.span)
    if isinstance(bi, A.BCall):
        return bi.side_command(left)
    raise TypeError(f"not a biprogram: {bi!r}")


def default_biprogram(left: A.Command, right: A.Command) -> A.Biprogram:
    """Alignment used when a bimethod has no body: run the sides one after the other."""
    return A.BSplit(left, right)


__all__ = ["LEFT", "RIGHT", "SIDES", "project", "default_biprogram"]
