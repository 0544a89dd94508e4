from __future__ import annotations

import json
import subprocess

import pytest
import z3

from relverify.config import SolverConfig
from relverify.diagnostics import SolverError
from relverify.jsonutil import read_jsonl
from relverify.smt import Report, SolvedVC, first_status, model_text, with_get_model
from relverify.smt import driver
from relverify.smt.driver import Invalid, Unknown, Valid, backend_for, solve_api
from relverify.vcgen import VC


def _vc(label: str, kind: str = "post") -> VC:
    return VC(label, kind, "M", "m", z3.BoolVal(True))


def test_backend_selection(monkeypatch):
    assert backend_for(SolverConfig(backend="z3-api")) is solve_api
    monkeypatch.setattr("shutil.which", lambda name: None)
    with pytest.raises(SolverError, match="solver not found: no-such-solver"):
        backend_for(SolverConfig(executable="no-such-solver"))


def test_solver_output_parsing():
    out = "success\nsat\n(model\n  (define-fun x () Int 3)\n)\n"
    assert first_status(out) == "sat"
    assert model_text(out).startswith("(model")
    assert first_status("(error \"x\")\n") is None
    assert first_status("unsat\n") == "unsat"
    assert with_get_model("(check-sat)\n").endswith("(get-model)\n")
    assert with_get_model(with_get_model("(check-sat)\n")).count("(get-model)") == 1


def test_process_backend_reads_the_model_from_the_same_session(monkeypatch):
    sent = []

    def fake_run(script, cfg):
        sent.append(script)
        if "(= x 3)" in script:
            out = "sat\n(model\n  (define-fun x () Int 3)\n)\n"
        else:
            out = "unsat\n(error \"model is not available\")\n"
        return subprocess.CompletedProcess(["z3"], 0, stdout=out, stderr="")

    monkeypatch.setattr(driver, "_run_process", fake_run)
    cfg = SolverConfig(backend="process", timeout=30)
    v = driver.solve_process("(set-logic ALL)\n(declare-const x Int)\n(assert (= x 3))\n(check-sat)\n", cfg)
    assert isinstance(v, Invalid) and "Int 3" in v.model
    assert len(sent) == 1
    assert sent[0].endswith("(check-sat)\n(get-model)\n")
    assert sent[0].index("(set-option :produce-models true)") < sent[0].index("(set-logic")
    assert isinstance(driver.solve_process("(check-sat)\n", cfg), Valid)
    assert len(sent) == 2


def test_api_backend_verdicts():
    cfg = SolverConfig(backend="z3-api", timeout=30)
    assert isinstance(solve_api("(declare-const x Int)\n(assert (< x x))\n(check-sat)\n", cfg), Valid)
    v = solve_api("(declare-const x Int)\n(assert (= x 3))\n(check-sat)\n", cfg)
    assert isinstance(v, Invalid) and "3" in v.model
    assert isinstance(solve_api("(assert (", cfg), Unknown)


def test_report_counts_and_lines():
    solved = [
        SolvedVC(_vc("M:m:post:0"), Valid(0.002), "s0", "cid0"),
        SolvedVC(_vc("M:m:pre:1", "pre"), Invalid(0.001, "(model)"), "s1", "cid1"),
        SolvedVC(_vc("M:m:frame:2", "frame"), Unknown(0.5, "timeout"), "s2", "cid2"),
    ]
    rep = Report.build(solved)
    assert rep.counts() == {"valid": 1, "invalid": 1, "unknown": 1}
    assert not rep.ok
    assert rep.summary().endswith("3 VCs: 1 valid, 1 invalid, 1 unknown (503 ms)\n")
    recs = read_jsonl(rep.jsonl().decode())
    assert [r["label"] for r in recs] == ["M:m:post:0", "M:m:pre:1", "M:m:frame:2"]
    assert recs[1]["model"] == "(model)"
    assert recs[2]["reason"] == "timeout"
    assert json.loads(rep.jsonl().splitlines()[0])["script_cid"] == "cid0"


def test_report_ok_only_when_all_valid():
    rep = Report.build([SolvedVC(_vc("M:m:post:0"), Valid(0.0), "s", "c")])
    assert rep.ok
    assert Report().ok
