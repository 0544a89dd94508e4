"""Reference interpreter: commands, formulas, relational formulas and products."""
from __future__ import annotations

from .effects import EffectCheck, Violation, check_effects
from .evaluator import (
    Evaluator,
    Fault,
    MethodRun,
    OutOfFuel,
    Trace,
    check_spec,
    eval_command,
    eval_method,
)
from .product import ProductRun, agree_values, eval_product, eval_relformula, pair_allocations
from .state import ConcreteState, Loc, default_value

__all__ = [
    "ConcreteState",
    "Loc",
    "default_value",
    "Trace",
    "Fault",
    "OutOfFuel",
    "Evaluator",
    "MethodRun",
    "eval_command",
    "eval_method",
    "check_spec",
    "check_effects",
    "EffectCheck",
    "Violation",
    "eval_relformula",
    "eval_product",
    "ProductRun",
    "agree_values",
    "pair_allocations",
]
