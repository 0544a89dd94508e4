"""
relverify: batch relational verifier for pointer programs.

Exports the front end, the verification pipeline, the solver driver and the
reference interpreter.
"""
from .diagnostics import (
    AdequacyError,
    AlignmentError,
    Diagnostic,
    InterpError,
    LinkError,
    ParseError,
    RelverifyError,
    SolverError,
    Span,
    TypecheckError,
    VcgenError,
)
from .config import RunConfig, SolverConfig
from .frontend import link, load_units
from .typecheck import TypedProgram, typecheck
from .encap import check_encapsulation
from .align import build_product, check_adequacy, project
from .vcgen import VC, emit_theory, generate_vcs
from .smt import Invalid, Report, Unknown, Valid, emit_smtlib
from .interp import eval_command, eval_method, eval_product
from .pipeline import load_program, prepare_session, verify

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Span",
    "Diagnostic",
    "RelverifyError",
    "ParseError",
    "LinkError",
    "TypecheckError",
    "AlignmentError",
    "AdequacyError",
    "VcgenError",
    "SolverError",
    "InterpError",
    "RunConfig",
    "SolverConfig",
    "load_units",
    "link",
    "typecheck",
    "TypedProgram",
    "check_encapsulation",
    "project",
    "check_adequacy",
    "build_product",
    "VC",
    "emit_theory",
    "generate_vcs",
    "emit_smtlib",
    "Valid",
    "Invalid",
    "Unknown",
    "Report",
    "eval_command",
    "eval_method",
    "eval_product",
    "load_program",
    "prepare_session",
    "verify",
]
