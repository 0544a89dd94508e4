"""The verification pipeline, phase by phase.

parse -> link -> typecheck -> encap -> adequacy -> product -> VCs -> solve.
Every phase runs inside :func:`relverify.tracing.trace_operation`, which
spans it when OpenTelemetry is installed and always records its duration.
"""
from __future__ import annotations

import fnmatch
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .align import AdequacyReport, ProductIR, build_product, check_adequacy, default_biprogram, pretty_product
from .config import RunConfig
from .diagnostics import AdequacyError, InterpError
from .encap import EncapReport, Obligation, check_encapsulation, own_methods
from .frontend import link, load_units
from .interp import check_effects, eval_method, eval_product
from .interp.evaluator import Fault, MethodRun, OutOfFuel
from .interp.product import ProductRun
from .interp.statefile import (
    decode_args,
    decode_pi,
    decode_state,
    encode_env,
    encode_pi,
    encode_state,
    encode_value,
    load_state_file,
)
from .lang import ast as A
from .metrics import MET_INTERP_OUTCOMES, MET_STATIC_VIOLATIONS
from .smt import Report, emit_smtlib, prepare, run as solve
from .tracing import trace_operation
from .typecheck import TypedProgram, typecheck, typecheck_world
from .vcgen import VC, Theory, emit_theory, generate_vcs, pretty_gcl, translate_product, translate_unary

log = logging.getLogger("relverify.pipeline")


# ========== front end ==========


def load_program(paths: Sequence[str], search_path: Sequence[str] = ()) -> TypedProgram:
    with trace_operation("parse", {"inputs": len(paths)}):
        units, inputs = load_units(paths, search_path)
    with trace_operation("link"):
        lp = link(units)
    with trace_operation("typecheck"):
        return typecheck(lp, tuple(inputs))


def scope(tp: TypedProgram) -> Optional[List[str]]:
    """Units to verify: the ones given on the command line."""
    return list(tp.inputs) if tp.inputs else None


def check_alignment(tp: TypedProgram, units: Optional[Sequence[str]] = None) -> List[Tuple[str, AdequacyReport]]:
    """Adequacy of every written biprogram; raises with all mismatches."""
    out: List[Tuple[str, AdequacyReport]] = []
    with trace_operation("adequacy"):
        for bm in sorted(tp.bimodules(), key=lambda u: u.name):
            if units is not None and bm.name not in units:
                continue
            lw, rw = tp.sides(bm.name)
            for m in bm.bimethods:
                lm, rm = lw.method(m.name), rw.method(m.name)
                if m.body is None or lm is None or rm is None or lm.body is None or rm.body is None:
                    continue
                rep = check_adequacy(m.body, lm.body, rm.body)
                out.append((f"{bm.name}.{m.name}", rep))
    bad = [(name, r) for name, r in out if not r.ok]
    if bad:
        text = "\n".join(f"{name}: {r.format()}" for name, r in bad)
        first = bad[0][1].mismatches[0]
        raise AdequacyError(f"biprogram is not adequate\n{text}", first.span, report=bad)
    return out


def products(tp: TypedProgram, units: Optional[Sequence[str]] = None) -> Dict[str, ProductIR]:
    out: Dict[str, ProductIR] = {}
    for bm in sorted(tp.bimodules(), key=lambda u: u.name):
        if units is not None and bm.name not in units:
            continue
        lw, rw = tp.sides(bm.name)
        for m in bm.bimethods:
            if m.body is None:
                lm, rm = lw.method(m.name), rw.method(m.name)
                if lm is None or rm is None or lm.body is None or rm.body is None:
                    continue
                m = replace(m, body=default_biprogram(lm.body, rm.body))
            out[f"{bm.name}.{m.name}"] = build_product(m, is_method=lambda n, w=lw: w.method(n) is not None)
    return out


# ========== verification ==========


@dataclass
class Session:
    """State of one ``verify``/``check``/``dump-smt`` run."""

    cfg: RunConfig
    tp: TypedProgram
    encap: EncapReport
    theory: Theory
    vcs: List[VC] = field(default_factory=list)

    @property
    def static(self) -> List[Obligation]:
        return [o for o in self.encap.static_violations() if selected(o.label, self.cfg.only)]


def selected(label: str, only: Optional[str]) -> bool:
    return only is None or fnmatch.fnmatchcase(label, only)


def prepare_session(cfg: RunConfig) -> Session:
    tp = load_program(cfg.inputs, cfg.search_path)
    units = scope(tp)
    with trace_operation("encap"):
        rep = check_encapsulation(tp, units)
    for o in rep.static_violations():
        MET_STATIC_VIOLATIONS.labels(rule="boundary-variable").inc()
    check_alignment(tp, units)
    with trace_operation("vcgen"):
        th = emit_theory(tp)
        vcs = generate_vcs(tp, th, rep, units=units, trust_wf=cfg.trust_wf)
    s = Session(cfg, tp, rep, th, [vc for vc in vcs if selected(vc.label, cfg.only)])
    log.info("session: %d VCs selected of %d, %d static violations", len(s.vcs), len(vcs), len(s.static))
    return s


def dumps(s: Session) -> str:
    """Product and guarded-command dumps requested by the configuration."""
    parts: List[str] = []
    units = scope(s.tp)
    if s.cfg.dump_product:
        for name, ir in products(s.tp, units).items():
            parts.append(f"# product {name}\n{pretty_product(ir)}")
    if s.cfg.dump_gcl:
        for name in sorted(s.tp.worlds):
            if (units is not None and name not in units) or s.tp.unit(name).kind != "module":
                continue
            w = s.tp.world(name)
            for m in own_methods(w):
                proc = translate_unary(s.theory, w, m, report=s.encap, trust_wf=s.cfg.trust_wf)
                parts.append(f"# procedure {name}.{m.name}\n{pretty_gcl(proc)}")
        for bm in sorted(s.tp.bimodules(), key=lambda u: u.name):
            if units is not None and bm.name not in units:
                continue
            for m in bm.bimethods:
                proc, _ = translate_product(s.theory, s.tp, bm.name, m, trust_wf=s.cfg.trust_wf)
                parts.append(f"# product procedure {bm.name}.{m.name}\n{pretty_gcl(proc)}")
    return "\n\n".join(parts)


def smt_path(root: str, vc: VC) -> str:
    safe = vc.label.replace(":", "_").replace("/", "_")
    return os.path.join(root, vc.unit or "_", safe + ".smt2")


def write_scripts(s: Session, root: str, scripts: Optional[Sequence[str]] = None) -> List[str]:
    texts = list(scripts) if scripts is not None else [emit_smtlib(vc, s.theory, s.cfg.solver.logic) for vc in s.vcs]
    paths: List[str] = []
    for vc, text in zip(s.vcs, texts):
        path = smt_path(root, vc)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        paths.append(path)
    log.info("wrote %d SMT-LIB scripts under %s", len(paths), root)
    return paths


def verify(s: Session) -> Report:
    scripts = prepare(s.vcs, s.theory, s.cfg.solver)
    if s.cfg.dump_smt:
        write_scripts(s, s.cfg.dump_smt, scripts)
    with trace_operation("solve", {"vcs": len(s.vcs), "backend": s.cfg.solver.backend}):
        solved = solve(s.vcs, s.theory, s.cfg.solver, scripts=scripts)
    return Report.build(solved, s.static)


def unsolved_records(s: Session) -> List[Dict[str, Any]]:
    """Report lines for ``check``: the VCs that would be solved."""
    return [
        {
            "label": vc.label,
            "kind": vc.kind,
            "verdict": "unsolved",
            "time_ms": 0,
            "source_span": vc.source_span,
            "unit": vc.unit,
            "method": vc.method,
        }
        for vc in s.vcs
    ]


# ========== execution ==========


def _split_method(spec: str) -> Tuple[str, str]:
    if "." not in spec:
        raise InterpError(f"--method expects Unit.meth, got {spec!r}")
    unit, _, meth = spec.rpartition(".")
    return unit, meth


def _bindings(pairs: Sequence[str]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for p in pairs:
        iface, sep, mod = p.partition("=")
        if not sep or not iface or not mod:
            raise InterpError(f"--bind expects IFACE=Module, got {p!r}")
        out[iface.strip()] = mod.strip()
    return out


def _outcome(res: Any) -> Dict[str, Any]:
    if isinstance(res, Fault):
        MET_INTERP_OUTCOMES.labels(outcome="fault").inc()
        return {
            "outcome": "fault",
            "fault": {"kind": res.kind, "message": res.message, "source_span": str(res.span) if res.span else None},
        }
    if isinstance(res, OutOfFuel):
        MET_INTERP_OUTCOMES.labels(outcome="out-of-fuel").inc()
        return {"outcome": "out-of-fuel", "steps": res.steps}
    MET_INTERP_OUTCOMES.labels(outcome="ok").inc()
    return {"outcome": "ok"}


def run_method(cfg: RunConfig) -> Dict[str, Any]:
    """Execute ``cfg.method`` on the state file; the JSON object printed by ``run``."""
    tp = load_program(cfg.inputs, cfg.search_path)
    unit, meth = _split_method(cfg.method or "")
    bind = _bindings(cfg.bind)
    u = tp.unit(unit)
    with trace_operation("run", {"method": cfg.method}):
        if u.kind == "bimodule":
            return _run_bimethod(tp, u, meth, cfg, bind)
        world = typecheck_world(tp.executable_world(unit, bind), tp.units)
        m = world.method(meth)
        if m is None:
            raise InterpError(f"unit {unit!r} has no method {meth!r}")
        sf = load_state_file(cfg.state)
        st = decode_state(sf, world)
        args = decode_args(sf, m.params)
        res = eval_method(world, meth, args, st, cfg.fuel, units=tp.units)
        out = _outcome(res)
        out["method"] = cfg.method
        if isinstance(res, MethodRun):
            eff = check_effects(res.trace, m.spec.effects, res.pre, world=world, env=res.entry)
            out.update(
                state=encode_state(res.post),
                result=encode_value(res.result) if res.result is not None else None,
                footprint=res.trace.footprint(),
                steps=res.trace.steps,
                effects="ok" if eff.ok else [v.message for v in eff.violations],
            )
            if not eff.ok:
                out["outcome"] = "effect-violation"
        return out


def _run_bimethod(tp: TypedProgram, bm: A.CompilationUnit, meth: str, cfg: RunConfig, bind: Dict[str, str]) -> Dict[str, Any]:
    irs = products(tp, [bm.name])
    ir = irs.get(f"{bm.name}.{meth}")
    if ir is None:
        raise InterpError(f"bimodule {bm.name!r} has no runnable bimethod {meth!r}")
    lw = typecheck_world(tp.executable_world(bm.left, bind), tp.units)  # type: ignore[arg-type]
    rw = typecheck_world(tp.executable_world(bm.right, bind), tp.units)  # type: ignore[arg-type]
    bsf = load_state_file(cfg.state, bimethod=True)
    sl, sr = decode_state(bsf.left, lw), decode_state(bsf.right, rw)
    res = eval_product(
        ir, sl, sr, decode_pi(bsf.pi), cfg.fuel, left=lw, right=rw,
        largs=decode_args(bsf.left, ir.lparams), rargs=decode_args(bsf.right, ir.rparams), units=tp.units,
    )
    out = _outcome(res)
    out["method"] = cfg.method
    if isinstance(res, ProductRun):
        out.update(
            left={"state": encode_state(res.left), "locals": encode_env(res.lenv), "footprint": res.ltrace.footprint()},
            right={"state": encode_state(res.right), "locals": encode_env(res.renv), "footprint": res.rtrace.footprint()},
            pi=encode_pi(res.pi),
        )
    return out


__all__ = [
    "Session",
    "load_program",
    "scope",
    "check_alignment",
    "products",
    "prepare_session",
    "selected",
    "dumps",
    "smt_path",
    "write_scripts",
    "verify",
    "unsolved_records",
    "run_method",
]
