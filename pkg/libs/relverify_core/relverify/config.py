"""Run and solver configuration.

Values come from the command line first, then the ``RELVERIFY_*`` environment
variables, then the defaults in :mod:`relverify.constants`.
"""
from __future__ import annotations

import math
import os
import shlex
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from .constants import (
    DEFAULT_BACKEND,
    DEFAULT_FUEL,
    DEFAULT_JOBS,
    DEFAULT_LOGIC,
    DEFAULT_SOLVER,
    DEFAULT_TIMEOUT_S,
    ENV_BACKEND,
    ENV_JOBS,
    ENV_SOLVER,
    ENV_SOLVER_ARGS,
    ENV_TIMEOUT,
    SOLVER_ARG_TEMPLATES,
)

BACKENDS: Tuple[str, ...] = ("process", "z3-api")
MODES: Tuple[str, ...] = ("verify", "check", "dump-smt", "run")


def _env_int(name: str, default: int) -> int:
    try:
        return int(os.getenv(name, str(default)))
    except Exception:
        return default


def _env_float(name: str, default: float) -> float:
    try:
        return float(os.getenv(name, str(default)))
    except Exception:
        return default


def default_args(executable: str) -> Tuple[str, ...]:
    base = os.path.basename(executable).lower()
    for name, template in SOLVER_ARG_TEMPLATES.items():
        if base == name or base.startswith(name + "-") or base.startswith(name + "."):
            return tuple(template)
    return ("{file}",)


class SolverConfig(BaseModel):
    executable: str = DEFAULT_SOLVER
    args_template: Tuple[str, ...] = ()
    timeout: float = Field(default=DEFAULT_TIMEOUT_S, description="seconds per VC")
    jobs: int = DEFAULT_JOBS
    logic: str = DEFAULT_LOGIC
    backend: str = DEFAULT_BACKEND

    @field_validator("timeout")
    @classmethod
    def _positive_timeout(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("timeout must be > 0")
        return v

    @field_validator("jobs")
    @classmethod
    def _positive_jobs(cls, v: int) -> int:
        if v < 1:
            raise ValueError("jobs must be >= 1")
        return v

    @field_validator("executable")
    @classmethod
    def _named_solver(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("a solver executable is required")
        return v

    @field_validator("backend")
    @classmethod
    def _known_backend(cls, v: str) -> str:
        if v not in BACKENDS:
            raise ValueError(f"backend must be one of: {list(BACKENDS)}")
        return v

    @model_validator(mode="after")
    def _fill_args(self) -> "SolverConfig":
        if not self.args_template:
            self.args_template = default_args(self.executable)
        return self

    @classmethod
    def from_env(cls, **overrides: object) -> "SolverConfig":
        env_args = os.getenv(ENV_SOLVER_ARGS)
        values = {
            "executable": os.getenv(ENV_SOLVER, DEFAULT_SOLVER),
            "args_template": tuple(shlex.split(env_args)) if env_args else (),
            "timeout": _env_float(ENV_TIMEOUT, DEFAULT_TIMEOUT_S),
            "jobs": _env_int(ENV_JOBS, DEFAULT_JOBS),
            "backend": os.getenv(ENV_BACKEND, DEFAULT_BACKEND),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def argv(self, path: str) -> List[str]:
        """Solver command line for the script at ``path``."""
        subst = {
            "file": path,
            "timeout": str(max(1, math.ceil(self.timeout))),
            "timeout_ms": str(max(1, int(self.timeout * 1000))),
        }
        return [self.executable] + [a.format(**subst) for a in self.args_template]


class RunConfig(BaseModel):
    inputs: List[str] = Field(default_factory=list)
    mode: str = "verify"
    solver: SolverConfig = Field(default_factory=SolverConfig)
    trust_wf: bool = False
    only: Optional[str] = None
    out: Optional[str] = None
    dump_smt: Optional[str] = None
    dump_gcl: bool = False
    dump_product: bool = False
    search_path: List[str] = Field(default_factory=list)
    metrics_out: Optional[str] = None
    # run mode
    method: Optional[str] = None
    state: Optional[str] = None
    fuel: int = DEFAULT_FUEL
    bind: List[str] = Field(default_factory=list)

    @field_validator("mode")
    @classmethod
    def _known_mode(cls, v: str) -> str:
        if v not in MODES:
            raise ValueError(f"mode must be one of: {list(MODES)}")
        return v

    @field_validator("fuel")
    @classmethod
    def _positive_fuel(cls, v: int) -> int:
        if v < 1:
            raise ValueError("fuel must be >= 1")
        return v

    @model_validator(mode="after")
    def _need_inputs(self) -> "RunConfig":
        if self.mode in ("verify", "check", "dump-smt") and not self.inputs:
            raise ValueError(f"{self.mode} requires at least one input file")
        if self.mode == "run" and not self.method:
            raise ValueError("run requires --method Unit.meth")
        return self


__all__ = ["SolverConfig", "RunConfig", "BACKENDS", "MODES", "default_args"]
