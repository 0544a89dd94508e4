"""SMT-LIB emission, solver drivers and reports."""
from __future__ import annotations

from .driver import Invalid, SolvedVC, Unknown, Valid, Verdict, backend_for, prepare, run
from .report import Report, static_record, vc_record
from .smtlib import emit_smtlib, first_status, model_text, with_get_model

__all__ = [
    "Verdict",
    "Valid",
    "Invalid",
    "Unknown",
    "SolvedVC",
    "backend_for",
    "prepare",
    "run",
    "Report",
    "vc_record",
    "static_record",
    "emit_smtlib",
    "first_status",
    "model_text",
    "with_get_model",
]
