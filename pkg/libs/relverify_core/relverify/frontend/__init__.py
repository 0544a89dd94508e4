from __future__ import annotations

from .lexer import tokenize
from .linker import LinkedProgram, World, link, load_units
from .parser import parse, parse_biprogram, parse_command, parse_expr, parse_rel

__all__ = [
    "tokenize",
    "parse",
    "parse_expr",
    "parse_rel",
    "parse_command",
    "parse_biprogram",
    "link",
    "load_units",
    "LinkedProgram",
    "World",
]
