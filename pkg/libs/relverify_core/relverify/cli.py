from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Any, Dict, Iterable, List, Optional, Sequence

from pydantic import ValidationError

from .config import BACKENDS, RunConfig, SolverConfig
from .constants import ENV_LOG_LEVEL
from .diagnostics import AdequacyError, RelverifyError
from .fingerprint import script_cid
from .jsonutil import canonical_json_bytes
from .metrics import write_metrics
from .smt import emit_smtlib, static_record
from . import pipeline

log = logging.getLogger("relverify.cli")

_HANDLER_TAG = "_relverify_cli"


def _setup_logging(verbosity: int) -> None:
    level = os.getenv(ENV_LOG_LEVEL) or ("DEBUG" if verbosity > 1 else "INFO" if verbosity == 1 else "WARNING")
    logger = logging.getLogger("relverify")
    try:
        logger.setLevel(level.upper())
    except ValueError:
        logger.setLevel(logging.WARNING)
    for h in [h for h in logger.handlers if getattr(h, _HANDLER_TAG, False)]:
        logger.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    setattr(handler, _HANDLER_TAG, True)
    logger.addHandler(handler)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("inputs", nargs="+", help="Source files (.wrl), one compilation unit each")
    common.add_argument("--path", action="append", default=[], help="Directory searched for imported units")
    common.add_argument("--trust-wf", action="store_true", help="Assume state well-formedness instead of proving it")
    common.add_argument("--jobs", type=int, help="Parallel solver jobs")
    common.add_argument("--timeout", type=float, help="Seconds per VC")
    common.add_argument("--only", help="Glob over VC labels, e.g. 'encap:*'")
    common.add_argument("--out", help="Write the JSON-lines report here instead of stdout")
    common.add_argument("--dump-smt", metavar="DIR", help="Write each VC as DIR/<unit>/<label>.smt2")
    common.add_argument("--dump-gcl", action="store_true", help="Print guarded-command procedures to stderr")
    common.add_argument("--dump-product", action="store_true", help="Print product programs to stderr")
    common.add_argument("--metrics-out", metavar="FILE", help="Write Prometheus textfile metrics")
    common.add_argument("--backend", choices=BACKENDS, help="Solve in a subprocess or in-process via the z3 API")
    common.add_argument("--solver", help="Solver executable (overrides RELVERIFY_SOLVER)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="relverify", description="Relational verifier for pointer programs")
    sub = p.add_subparsers(dest="mode", required=True)
    sub.add_parser("verify", parents=[common], help="Generate and solve all VCs")
    sub.add_parser("check", parents=[common], help="Run every phase up to solving")
    sub.add_parser("dump-smt", parents=[common], help="Write SMT-LIB scripts without solving")
    run = sub.add_parser("run", parents=[common], help="Execute a method or bimethod in the interpreter")
    run.add_argument("--method", required=True, help="Unit.meth")
    run.add_argument("--state", help="JSON state file")
    run.add_argument("--fuel", type=int, help="Step budget")
    run.add_argument("--bind", action="append", default=[], help="IFACE=Module")
    return p


def _config(args: argparse.Namespace) -> RunConfig:
    solver = SolverConfig.from_env(executable=args.solver, timeout=args.timeout, jobs=args.jobs, backend=args.backend)
    values: Dict[str, Any] = dict(
        inputs=args.inputs,
        mode=args.mode,
        solver=solver,
        trust_wf=args.trust_wf,
        only=args.only,
        out=args.out,
        dump_smt=args.dump_smt,
        dump_gcl=args.dump_gcl,
        dump_product=args.dump_product,
        search_path=args.path,
        metrics_out=args.metrics_out,
    )
    if args.mode == "run":
        values.update(method=args.method, state=args.state, bind=args.bind)
        if args.fuel is not None:
            values["fuel"] = args.fuel
    return RunConfig(**values)


# --------- output ---------


def _emit(records: Iterable[Dict[str, Any]], out: Optional[str]) -> None:
    data = b"".join(canonical_json_bytes(r) for r in records)
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
        sys.stdout.flush()


def _error_record(e: RelverifyError) -> Dict[str, Any]:
    rec: Dict[str, Any] = {
        "label": f"error:{e.code}",
        "kind": "error",
        "verdict": "error",
        "message": e.message,
        "source_span": str(e.span) if e.span is not None else None,
    }
    if isinstance(e, AdequacyError) and e.report:
        rec["mismatches"] = {name: r.format() for name, r in e.report}
    return rec


def _internal_record(e: Exception) -> Dict[str, Any]:
    return {
        "label": "error:internal",
        "kind": "error",
        "verdict": "error",
        "message": f"{type(e).__name__}: {e}",
        "source_span": None,
    }


def _summary(text: str, cfg: RunConfig) -> None:
    print(text, end="", file=sys.stdout if cfg.out else sys.stderr)


# --------- modes ---------


def _verify(cfg: RunConfig) -> int:
    s = pipeline.prepare_session(cfg)
    if cfg.dump_product or cfg.dump_gcl:
        print(pipeline.dumps(s), file=sys.stderr)
    if cfg.mode == "check":
        records: List[Dict[str, Any]] = [static_record(o) for o in s.static] + pipeline.unsolved_records(s)
        _emit(records, cfg.out)
        return 0 if not s.static else 1
    if cfg.mode == "dump-smt":
        root = cfg.dump_smt or "smt"
        scripts = [emit_smtlib(vc, s.theory, cfg.solver.logic) for vc in s.vcs]
        paths = pipeline.write_scripts(s, root, scripts)
        _emit(
            ({"label": vc.label, "path": path, "script_cid": script_cid(text)} for vc, path, text in zip(s.vcs, paths, scripts)),
            cfg.out,
        )
        return 0
    rep = pipeline.verify(s)
    _emit(rep.records, cfg.out)
    _summary(rep.summary(), cfg)
    return 0 if rep.ok else 1


def _run(cfg: RunConfig) -> int:
    res = pipeline.run_method(cfg)
    _emit([res], cfg.out)
    return 0 if res["outcome"] in ("ok", "out-of-fuel") else 1


def _cli(argv: Optional[Sequence[str]] = None) -> int:
    p = _parser()
    args = p.parse_args(list(argv) if argv is not None else None)
    _setup_logging(args.verbose)

    try:
        cfg = _config(args)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    log.info("%s: %d input(s)", cfg.mode, len(cfg.inputs))
    try:
        if cfg.mode == "run":
            return _run(cfg)
        return _verify(cfg)
    except RelverifyError as e:
        print(e.diagnostic().format(), file=sys.stderr)
        _emit([_error_record(e)], cfg.out)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        _emit([_internal_record(e)], cfg.out)
        return 1
    finally:
        if cfg.metrics_out:
            write_metrics(cfg.metrics_out)


__all__ = ["_cli"]
