"""Solver drivers.

``process`` runs the configured executable on a script file, one subprocess
per VC answering both the check and, on ``sat``, the model query; ``z3-api``
parses the same script into a private z3 context in this process. Both
return one :class:`Verdict` per VC, in input order.
"""
from __future__ import annotations

import logging
import os
import shutil
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import z3

from ..config import SolverConfig
from ..diagnostics import SolverError
from ..fingerprint import script_cid
from ..metrics import record_verdict
from ..vcgen.gcl import VC
from ..vcgen.theory import Theory
from .smtlib import emit_smtlib, first_status, model_text, status_prefix, with_get_model

log = logging.getLogger("relverify.smt")

# Extra wall time granted to a solver process beyond its own timeout
PROCESS_GRACE_S = 2.0

REASON_TIMEOUT = "timeout"
REASON_INCOMPLETE = "incompleteness"


# ========== verdicts ==========


@dataclass(frozen=True)
class Verdict:
    time_s: float

    status = "unknown"

    @property
    def ok(self) -> bool:
        return False

    @property
    def time_ms(self) -> int:
        return int(round(self.time_s * 1000))


@dataclass(frozen=True)
class Valid(Verdict):
    status = "valid"

    @property
    def ok(self) -> bool:
        return True


@dataclass(frozen=True)
class Invalid(Verdict):
    model: str = ""
    status = "invalid"


@dataclass(frozen=True)
class Unknown(Verdict):
    reason: str = REASON_INCOMPLETE
    status = "unknown"


@dataclass(frozen=True)
class SolvedVC:
    vc: VC
    verdict: Verdict
    script: str
    script_cid: str


# ========== backends ==========


def _unknown_reason(text: str, elapsed: float, cfg: SolverConfig) -> str:
    low = text.lower()
    if "timeout" in low or "canceled" in low or elapsed >= cfg.timeout:
        return REASON_TIMEOUT
    return f"{REASON_INCOMPLETE}: {text.strip()}" if text.strip() else REASON_INCOMPLETE


def _run_process(script: str, cfg: SolverConfig) -> subprocess.CompletedProcess:
    fd, path = tempfile.mkstemp(suffix=".smt2", prefix="relverify-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(script)
        return subprocess.run(
            cfg.argv(path),
            capture_output=True,
            text=True,
            timeout=cfg.timeout + PROCESS_GRACE_S,
        )
    finally:
        try:
            os.unlink(path)
        except OSError:  # pragma: no cover
            pass


def solve_process(script: str, cfg: SolverConfig) -> Verdict:
    """One solver session per VC; the model query rides along with the check."""
    start = time.perf_counter()
    try:
        proc = _run_process(with_get_model(script), cfg)
    except FileNotFoundError:
        raise SolverError(f"solver not found: {cfg.executable}") from None
    except subprocess.TimeoutExpired:
        return Unknown(time.perf_counter() - start, REASON_TIMEOUT)
    elapsed = time.perf_counter() - start
    status = first_status(proc.stdout)
    if status == "unsat":
        return Valid(elapsed)
    if status == "sat":
        return Invalid(elapsed, model_text(proc.stdout))
    if status == "unknown" or "timeout" in proc.stdout:
        return Unknown(elapsed, _unknown_reason(status_prefix(proc.stdout), elapsed, cfg))
    detail = (proc.stderr or proc.stdout).strip().splitlines()
    log.warning("solver exited %s without a verdict", proc.returncode)
    return Unknown(elapsed, f"crash: exit {proc.returncode}" + (f": {detail[0]}" if detail else ""))


def solve_api(script: str, cfg: SolverConfig) -> Verdict:
    """In-process z3; a fresh context per call keeps jobs independent."""
    ctx = z3.Context()
    s = z3.Solver(ctx=ctx)
    s.set("timeout", max(1, int(cfg.timeout * 1000)))
    start = time.perf_counter()
    try:
        s.from_string(script)
        r = s.check()
    except z3.Z3Exception as e:
        return Unknown(time.perf_counter() - start, f"crash: {e}")
    elapsed = time.perf_counter() - start
    if r == z3.unsat:
        return Valid(elapsed)
    if r == z3.sat:
        return Invalid(elapsed, s.model().sexpr())
    return Unknown(elapsed, _unknown_reason(s.reason_unknown(), elapsed, cfg))


def backend_for(cfg: SolverConfig) -> Callable[[str, SolverConfig], Verdict]:
    if cfg.backend == "z3-api":
        return solve_api
    if shutil.which(cfg.executable) is None:
        raise SolverError(f"solver not found: {cfg.executable}")
    return solve_process


# ========== runs ==========


def prepare(vcs: Sequence[VC], th: Theory, cfg: SolverConfig) -> List[str]:
    """Scripts for ``vcs``; built on the calling thread, which owns the term context."""
    return [emit_smtlib(vc, th, cfg.logic) for vc in vcs]


def run(
    vcs: Sequence[VC],
    th: Theory,
    cfg: SolverConfig,
    *,
    scripts: Optional[Sequence[str]] = None,
) -> List[SolvedVC]:
    """Discharge ``vcs`` with ``cfg.jobs`` solver calls in flight."""
    solve = backend_for(cfg)
    texts = list(scripts) if scripts is not None else prepare(vcs, th, cfg)

    def one(i: int) -> Verdict:
        v = solve(texts[i], cfg)
        log.debug("%s: %s (%.3fs)", vcs[i].label, v.status, v.time_s)
        return v

    if cfg.jobs > 1 and len(vcs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            verdicts = list(pool.map(one, range(len(vcs))))
    else:
        verdicts = [one(i) for i in range(len(vcs))]
    out: List[SolvedVC] = []
    for vc, text, v in zip(vcs, texts, verdicts):
        record_verdict(vc.kind, v.status, cfg.backend, v.time_s)
        out.append(SolvedVC(vc, v, text, script_cid(text)))
    log.info(
        "solved %d VCs: %d valid, %d invalid, %d unknown",
        len(out),
        sum(1 for r in out if r.verdict.status == "valid"),
        sum(1 for r in out if r.verdict.status == "invalid"),
        sum(1 for r in out if r.verdict.status == "unknown"),
    )
    return out


__all__ = [
    "Verdict",
    "Valid",
    "Invalid",
    "Unknown",
    "SolvedVC",
    "solve_process",
    "solve_api",
    "backend_for",
    "prepare",
    "run",
    "REASON_TIMEOUT",
    "REASON_INCOMPLETE",
]
