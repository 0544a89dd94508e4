"""SMT-LIB2 serialization of verification conditions.

A script declares what the goal mentions, asserts the theory axioms the goal
reaches and then the negated goal. ``unsat`` means the VC is valid.
"""
from __future__ import annotations

from typing import Final, List, Optional, Tuple

import z3

from ..constants import DEFAULT_LOGIC
from ..vcgen.gcl import VC
from ..vcgen.theory import Theory

GET_MODEL: Final[str] = "(get-model)\n"
PRODUCE_MODELS: Final[str] = "(set-option :produce-models true)"


def script_parts(vc: VC, th: Theory) -> Tuple[List[Tuple[str, z3.BoolRef]], z3.BoolRef]:
    return th.axioms_for(vc.goal), z3.Not(vc.goal)


def emit_smtlib(vc: VC, th: Theory, logic: str = DEFAULT_LOGIC, *, comments: bool = True) -> str:
    """Deterministic script for ``vc``: same program and options, same bytes."""
    axioms, negated = script_parts(vc, th)
    s = z3.Solver()
    for _, ax in axioms:
        s.add(ax)
    s.add(negated)
    body = s.to_smt2()
    if not body.rstrip().endswith("(check-sat)"):
        body = body.rstrip("\n") + "\n(check-sat)\n"
    head: List[str] = []
    if comments:
        head.append(f"; {vc.label} [{vc.kind}]")
        if vc.span is not None:
            head.append(f"; at {vc.span}")
        if axioms:
            head.append("; axioms: " + ", ".join(name for name, _ in axioms))
    head.append(f"(set-logic {logic})")
    return "\n".join(head) + "\n" + body


def with_get_model(script: str) -> str:
    """``script`` followed by a model query, for a single solver session.

    Models are switched on ahead of ``set-logic`` where a script declares one.
    """
    if script.endswith(GET_MODEL):
        return script
    if PRODUCE_MODELS not in script and "(set-logic" in script:
        script = script.replace("(set-logic", PRODUCE_MODELS + "\n(set-logic", 1)
    return script + GET_MODEL


def first_status(output: str) -> Optional[str]:
    """First ``sat``/``unsat``/``unknown`` token of solver output."""
    for line in output.splitlines():
        tok = line.strip()
        if tok in ("sat", "unsat", "unknown"):
            return tok
    return None


def status_prefix(output: str) -> str:
    """What the solver printed before its status line; all of it when there is none."""
    lines = output.splitlines()
    for i, line in enumerate(lines):
        if line.strip() in ("sat", "unsat", "unknown"):
            return "\n".join(lines[:i]).strip()
    return output.strip()


def model_text(output: str) -> str:
    """Everything the solver printed after its status line."""
    lines = output.splitlines()
    for i, line in enumerate(lines):
        if line.strip() in ("sat", "unsat", "unknown"):
            return "\n".join(lines[i + 1 :]).strip()
    return output.strip()


__all__ = [
    "emit_smtlib",
    "script_parts",
    "with_get_model",
    "first_status",
    "status_prefix",
    "model_text",
    "GET_MODEL",
    "PRODUCE_MODELS",
]
