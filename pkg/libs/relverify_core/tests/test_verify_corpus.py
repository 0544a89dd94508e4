from __future__ import annotations

from relverify.constants import KIND_DISJOINT, KIND_EFFECT
from relverify.pipeline import prepare_session, verify


def _report(ex):
    return verify(prepare_session(ex.config("verify")))


def test_mult_equivalence_verifies(example):
    ex = example("mult")
    rep = _report(ex)
    want = ex.manifest["verify"]
    assert rep.counts()["invalid"] == want["invalid"]
    assert rep.counts()["unknown"] == want["unknown"]
    assert rep.ok


def test_mutated_mult_is_refuted(example):
    ex = example("mult_mutated")
    rep = _report(ex)
    assert rep.counts()["invalid"] >= ex.manifest["verify"]["min_invalid"]
    bad = [r for r in rep.records if r["verdict"] == "invalid"]
    assert any(r["label"].startswith("MultRel:mult:") for r in bad)


def test_client_write_inside_boundary_is_refuted(example):
    ex = example("encap_cell")
    rep = _report(ex)
    bad = [r for r in rep.records if r["verdict"] == "invalid"]
    assert len(bad) >= ex.manifest["verify"]["min_invalid"]
    assert any(r["kind"] == KIND_DISJOINT == ex.manifest["verify"]["invalid_kind"] for r in bad)


def test_only_filters_by_label(example):
    ex = example("mult")
    s = prepare_session(ex.config("check", only="MultR:*"))
    assert s.vcs and all(vc.label.startswith("MultR:") for vc in s.vcs)


def _verdicts(rep):
    return {r["label"]: r for r in rep.records}


def test_stack_representation_independence_verifies(example):
    ex = example("stack")
    rep = _report(ex)
    want = ex.manifest["verify"]
    bad = [(r["label"], r.get("message")) for r in rep.records if r["verdict"] != "valid"]
    assert rep.counts()["invalid"] == want["invalid"], bad
    assert rep.counts()["unknown"] == want["unknown"], bad
    kinds = {r["kind"] for r in rep.records}
    assert {"frames-lemma", "monotonicity-post", "post"} <= kinds
    assert any(r["unit"] == "ClientRel" for r in rep.records)


def test_conditionally_aligned_sumpub_verifies(example):
    ex = example("sumpub")
    rep = _report(ex)
    assert rep.counts()["invalid"] == ex.manifest["verify"]["invalid"]
    assert rep.counts()["unknown"] == ex.manifest["verify"]["unknown"]
    assert rep.ok


def test_lockstep_sumpub_is_not_proved(example):
    ex = example("sumpub_lockstep")
    rep = _report(ex)
    want = ex.manifest["verify"]
    assert not rep.ok
    failed = [r for r in rep.records if r["verdict"] != "valid"]
    assert len(failed) >= want["min_not_valid"]
    assert all(r["label"].startswith(want["not_valid_label"]) for r in failed)


def test_coupling_reading_a_hidden_global_is_not_framed(example):
    ex = example("coupling_leak")
    rep = _report(ex)
    want = ex.manifest["verify"]
    by_label = _verdicts(rep)
    for label in want["invalid"]:
        rec = by_label[label]
        assert rec["verdict"] == "invalid"
        assert rec["kind"] == want["invalid_kind"]
        assert "seen" in rec["message"]
    assert not rep.ok


def test_frames_lemmas_and_monotonicity(example):
    ex = example("encap_lemmas")
    rep = _report(ex)
    want = ex.manifest["verify"]
    by_label = _verdicts(rep)
    for label in want["valid"]:
        assert by_label[label]["verdict"] == "valid", label
    for label in want["invalid"]:
        assert by_label[label]["verdict"] == "invalid", label
    assert by_label["encap:Impl.gpos:0"]["kind"] == "frames-lemma"
    assert "reads not named by the boundary: g" in by_label["encap:Impl.gpos:0"]["message"]
    assert by_label["encap:Impl.drop:0"]["kind"] == "monotonicity-post"


def test_uncovered_field_write_is_an_effect_violation(example):
    ex = example("encap_lemmas")
    rep = _report(ex)
    hits = [
        r for r in rep.records
        if r["kind"] == KIND_EFFECT and r["label"].startswith(ex.manifest["verify"]["effect_violation"])
    ]
    assert hits and all(r["verdict"] == "invalid" for r in hits)
    assert any("'f'" in r["message"] for r in hits)
    assert not any(r["kind"] == KIND_EFFECT for r in rep.records if r["method"] != "poke")
