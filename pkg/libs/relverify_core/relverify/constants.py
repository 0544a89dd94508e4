from __future__ import annotations

from typing import Final

# Source files
SOURCE_SUFFIX: Final[str] = ".wrl"
MANIFEST_NAME: Final[str] = "expected.json"

# Environment variables
ENV_SOLVER: Final[str] = "RELVERIFY_SOLVER"            # solver executable (path or name)
ENV_SOLVER_ARGS: Final[str] = "RELVERIFY_SOLVER_ARGS"  # argument template, space separated
ENV_TIMEOUT: Final[str] = "RELVERIFY_TIMEOUT"          # seconds per VC
ENV_JOBS: Final[str] = "RELVERIFY_JOBS"                # parallel solver processes
ENV_BACKEND: Final[str] = "RELVERIFY_BACKEND"          # process | z3-api
ENV_LOG_LEVEL: Final[str] = "RELVERIFY_LOG_LEVEL"

# Solver defaults
DEFAULT_SOLVER: Final[str] = "z3"
DEFAULT_TIMEOUT_S: Final[float] = 10.0
DEFAULT_JOBS: Final[int] = 1
DEFAULT_LOGIC: Final[str] = "ALL"
DEFAULT_BACKEND: Final[str] = "process"

# Argument templates for the solvers we know; {file}, {timeout}, {timeout_ms}
SOLVER_ARG_TEMPLATES: Final[dict] = {
    "z3": ("-smt2", "-t:{timeout_ms}", "{file}"),
    "cvc5": ("--lang=smt2", "--tlimit-per={timeout_ms}", "{file}"),
    "cvc4": ("--lang=smt2", "--tlimit-per={timeout_ms}", "{file}"),
}

# Interpreter
DEFAULT_FUEL: Final[int] = 1_000_000

# VC kinds
KIND_PRE: Final[str] = "pre"
KIND_POST: Final[str] = "post"
KIND_FRAME: Final[str] = "frame"
KIND_WF: Final[str] = "wf"
KIND_NULL: Final[str] = "null"
KIND_ASSERT: Final[str] = "assert"
KIND_CALL_PRE: Final[str] = "call-pre"
KIND_LOOP_INIT: Final[str] = "loop-init"
KIND_LOOP_PRESERVE: Final[str] = "loop-preserve"
KIND_EFFECT: Final[str] = "effect-violation"
KIND_GUARD_AGREE: Final[str] = "guard-agreement"
KIND_ADEQUACY_INV: Final[str] = "adequacy-invariant"
KIND_STATIC: Final[str] = "static-violation"
KIND_DISJOINT: Final[str] = "disjointness-assertion"
KIND_FRAMES_LEMMA: Final[str] = "frames-lemma"
KIND_MONOTONICITY: Final[str] = "monotonicity-post"

__all__ = [
    "SOURCE_SUFFIX",
    "MANIFEST_NAME",
    "ENV_SOLVER",
    "ENV_SOLVER_ARGS",
    "ENV_TIMEOUT",
    "ENV_JOBS",
    "ENV_BACKEND",
    "ENV_LOG_LEVEL",
    "DEFAULT_SOLVER",
    "DEFAULT_TIMEOUT_S",
    "DEFAULT_JOBS",
    "DEFAULT_LOGIC",
    "DEFAULT_BACKEND",
    "SOLVER_ARG_TEMPLATES",
    "DEFAULT_FUEL",
    "KIND_PRE",
    "KIND_POST",
    "KIND_FRAME",
    "KIND_WF",
    "KIND_NULL",
    "KIND_ASSERT",
    "KIND_CALL_PRE",
    "KIND_LOOP_INIT",
    "KIND_LOOP_PRESERVE",
    "KIND_EFFECT",
    "KIND_GUARD_AGREE",
    "KIND_ADEQUACY_INV",
    "KIND_STATIC",
    "KIND_DISJOINT",
    "KIND_FRAMES_LEMMA",
    "KIND_MONOTONICITY",
]
