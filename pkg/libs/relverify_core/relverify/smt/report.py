"""Run reports: JSON lines for machines, a summary table for people."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

from ..encap import Obligation
from ..jsonutil import canonical_json_bytes
from .driver import Invalid, SolvedVC, Unknown


def vc_record(r: SolvedVC) -> Dict[str, Any]:
    rec: Dict[str, Any] = {
        "label": r.vc.label,
        "kind": r.vc.kind,
        "verdict": r.verdict.status,
        "time_ms": r.verdict.time_ms,
        "source_span": r.vc.source_span,
        "script_cid": r.script_cid,
        "unit": r.vc.unit,
        "method": r.vc.method,
    }
    if r.vc.message:
        rec["message"] = r.vc.message
    if isinstance(r.verdict, Invalid):
        rec["model"] = r.verdict.model
    if isinstance(r.verdict, Unknown):
        rec["reason"] = r.verdict.reason
    return rec


def static_record(ob: Obligation) -> Dict[str, Any]:
    return {
        "label": ob.label,
        "kind": ob.kind,
        "verdict": "invalid",
        "time_ms": 0,
        "source_span": str(ob.span) if ob.span is not None else None,
        "unit": ob.unit,
        "method": ob.owner,
        "message": ob.message,
    }


@dataclass
class Report:
    records: List[Dict[str, Any]] = field(default_factory=list)

    @classmethod
    def build(cls, solved: Iterable[SolvedVC], static: Iterable[Obligation] = ()) -> "Report":
        rep = cls([static_record(o) for o in static])
        rep.records.extend(vc_record(r) for r in solved)
        return rep

    @property
    def ok(self) -> bool:
        return all(r["verdict"] == "valid" for r in self.records)

    def counts(self) -> Dict[str, int]:
        c = Counter(r["verdict"] for r in self.records)
        return {k: c.get(k, 0) for k in ("valid", "invalid", "unknown")}

    def jsonl(self) -> bytes:
        return b"".join(canonical_json_bytes(r) for r in self.records)

    def summary(self, width: Optional[int] = None) -> str:
        """Fixed-width table: one row per VC, then totals."""
        w = width or max([len(r["label"]) for r in self.records] + [5])
        lines = [f"{'label':<{w}}  {'kind':<22}  {'verdict':<8}  {'ms':>7}"]
        lines.append("-" * len(lines[0]))
        for r in self.records:
            lines.append(f"{r['label']:<{w}}  {r['kind']:<22}  {r['verdict']:<8}  {r['time_ms']:>7}")
        c = self.counts()
        total_ms = sum(int(r["time_ms"]) for r in self.records)
        lines.append("-" * len(lines[0]))
        lines.append(
            f"{len(self.records)} VCs: {c['valid']} valid, {c['invalid']} invalid, "
            f"{c['unknown']} unknown ({total_ms} ms)"
        )
        return "\n".join(lines) + "\n"


__all__ = ["Report", "vc_record", "static_record"]
