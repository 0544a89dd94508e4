from __future__ import annotations

import pytest

from relverify import pipeline
from relverify.cli import _cli
from relverify.jsonutil import read_jsonl


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("RELVERIFY_SOLVER", "RELVERIFY_SOLVER_ARGS", "RELVERIFY_TIMEOUT", "RELVERIFY_JOBS", "RELVERIFY_BACKEND"):
        monkeypatch.delenv(name, raising=False)


def test_check_clean_program(example, capsys):
    ex = example("mult")
    assert _cli(ex.argv("check")) == ex.manifest["check"]["exit"]
    recs = read_jsonl(capsys.readouterr().out)
    assert recs and all(r["verdict"] == "unsolved" for r in recs)
    assert len({r["label"] for r in recs}) == len(recs)


def test_check_generates_vcs_for_aligned_calls(example, capsys):
    ex = example("stack")
    assert _cli(ex.argv("check")) == ex.manifest["check"]["exit"]
    recs = read_jsonl(capsys.readouterr().out)
    labels = {r["label"] for r in recs}
    assert any(lab.startswith("ClientRel:prog:call-pre:") for lab in labels)
    assert not any(lab.startswith("error:") for lab in labels)


def test_unexpected_failure_is_reported_not_raised(example, monkeypatch, capsys):
    def boom(cfg):
        raise AttributeError("'BiMethodDecl' object has no attribute 'requires'")

    monkeypatch.setattr(pipeline, "prepare_session", boom)
    assert _cli(example("mult").argv("check")) == 1
    captured = capsys.readouterr()
    [rec] = read_jsonl(captured.out)
    assert rec["label"] == "error:internal"
    assert rec["verdict"] == "error"
    assert rec["message"].startswith("AttributeError:")
    assert "internal error: AttributeError" in captured.err


def test_check_reports_inadequate_alignment(example, capsys):
    ex = example("bad_adequacy")
    assert _cli(ex.argv("check")) == 1
    captured = capsys.readouterr()
    [rec] = read_jsonl(captured.out)
    assert rec["label"] == "error:" + ex.manifest["check"]["error"]
    assert ex.manifest["check"]["side"] in rec["mismatches"]["MultRel.mult"]
    assert "[adequacy]" in captured.err


def test_check_reports_static_violation(example, capsys):
    ex = example("encap_pool")
    assert _cli(ex.argv("check")) == ex.manifest["check"]["exit"]
    recs = read_jsonl(capsys.readouterr().out)
    static = [r for r in recs if r["kind"] == "static-violation"]
    assert len(static) == ex.manifest["check"]["static_violations"]
    assert static[0]["verdict"] == "invalid"


def test_verify_writes_report_and_summary(example, tmp_path, capsys):
    ex = example("mult")
    out = tmp_path / "report.jsonl"
    code = _cli(ex.argv("verify") + ["--backend", "z3-api", "--timeout", "60", "--out", str(out)])
    assert code == ex.manifest["verify"]["exit"]
    recs = read_jsonl(out.read_text(encoding="utf-8"))
    assert recs and all(r["verdict"] == "valid" for r in recs)
    assert "0 invalid, 0 unknown" in capsys.readouterr().out


def test_dump_smt_writes_scripts(example, tmp_path, capsys):
    ex = example("mult")
    root = tmp_path / "smt"
    assert _cli(ex.argv("dump-smt") + ["--dump-smt", str(root), "--only", "MultRel:*"]) == 0
    recs = read_jsonl(capsys.readouterr().out)
    assert recs
    for r in recs:
        text = (root / "MultRel" / (r["label"].replace(":", "_") + ".smt2")).read_text(encoding="utf-8")
        assert text.startswith(f"; {r['label']} [")


def test_run_bimethod(example, capsys):
    ex = example("sumpub")
    want = ex.manifest["run"]
    argv = ex.argv("run") + ["--method", want["method"], "--state", str(ex.root / want["state"])]
    assert _cli(argv) == 0
    [rec] = read_jsonl(capsys.readouterr().out)
    assert rec["outcome"] == want["outcome"]
    assert rec["left"]["locals"]["result"] == want["result"]
    assert rec["right"]["locals"]["result"] == want["result"]


def test_run_reports_bad_method_spec(example, capsys):
    ex = example("sumpub")
    assert _cli(ex.argv("run") + ["--method", "sumpub"]) == 1
    [rec] = read_jsonl(capsys.readouterr().out)
    assert rec["label"] == "error:interp"


def test_invalid_options_exit_2(example, capsys):
    ex = example("mult")
    assert _cli(ex.argv("check") + ["--jobs", "0"]) == 2
    assert "jobs must be >= 1" in capsys.readouterr().err


def test_missing_input_file_exits_2(tmp_path):
    assert _cli(["check", str(tmp_path / "nope.wrl")]) == 2


def test_usage_errors_raise_system_exit():
    with pytest.raises(SystemExit) as ei:
        _cli([])
    assert ei.value.code == 2


def test_trust_wf_flag(example, capsys):
    ex = example("stack")
    assert _cli(ex.argv("check") + ["--trust-wf", "--only", "Client:*"]) == 0
    recs = read_jsonl(capsys.readouterr().out)
    assert recs and not any(r["kind"] == "wf" for r in recs)
