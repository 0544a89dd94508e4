"""Shared syntax, values and formula utilities."""
from __future__ import annotations

from . import ast
from .desugar import Location, desugar_both, free_locations
from .pretty import pretty_biprogram, pretty_command, pretty_expr, pretty_rel, pretty_unit
from .regions import NULL, RefPerm, Reference, Region

__all__ = [
    "ast",
    "Location",
    "desugar_both",
    "free_locations",
    "pretty_biprogram",
    "pretty_command",
    "pretty_expr",
    "pretty_rel",
    "pretty_unit",
    "NULL",
    "RefPerm",
    "Reference",
    "Region",
]
