from __future__ import annotations

from prometheus_client import (
    CollectorRegistry,
    Counter,
    Histogram,
    generate_latest,
    write_to_textfile,
)

# Single registry for a verifier process; written out with --metrics-out
REG = CollectorRegistry(auto_describe=True)

# Solver verdicts per VC kind
MET_VERDICTS = Counter(
    "relverify_vc_verdicts_total",
    "VC verdicts",
    ["kind", "verdict"],
    registry=REG,
)
MET_SOLVER_SECONDS = Histogram(
    "relverify_solver_seconds",
    "wall time per solver call",
    ["backend"],
    registry=REG,
)

# Pipeline phases (parse, link, typecheck, encap, adequacy, vcgen, solve)
MET_PHASE_SECONDS = Histogram(
    "relverify_phase_seconds",
    "wall time per pipeline phase",
    ["phase"],
    registry=REG,
)
MET_STATIC_VIOLATIONS = Counter(
    "relverify_static_violations_total",
    "encapsulation violations rejected before solving",
    ["rule"],
    registry=REG,
)
MET_INTERP_OUTCOMES = Counter(
    "relverify_interp_outcomes_total",
    "interpreter run outcomes",
    ["outcome"],
    registry=REG,
)


def record_verdict(kind: str, verdict: str, backend: str, seconds: float) -> None:
    MET_VERDICTS.labels(kind=kind, verdict=verdict).inc()
    MET_SOLVER_SECONDS.labels(backend=backend).observe(seconds)


def write_metrics(path: str) -> None:
    write_to_textfile(path, REG)


__all__ = [
    "REG",
    "MET_VERDICTS",
    "MET_SOLVER_SECONDS",
    "MET_PHASE_SECONDS",
    "MET_STATIC_VIOLATIONS",
    "MET_INTERP_OUTCOMES",
    "generate_latest",
    "record_verdict",
    "write_metrics",
]
