from __future__ import annotations

from .adequacy import AdequacyReport, Mismatch, check_adequacy, normalize
from .product import ProductIR, build_product, check_guard_fragment, pretty_product
from .projection import LEFT, RIGHT, default_biprogram, project

__all__ = [
    "LEFT",
    "RIGHT",
    "project",
    "default_biprogram",
    "normalize",
    "check_adequacy",
    "AdequacyReport",
    "Mismatch",
    "ProductIR",
    "build_product",
    "check_guard_fragment",
    "pretty_product",
]
