from __future__ import annotations

import pytest
from pydantic import ValidationError

from relverify.config import RunConfig, SolverConfig, default_args


def test_argument_templates_follow_the_solver():
    z3cfg = SolverConfig(executable="z3", timeout=2.5)
    assert z3cfg.argv("vc.smt2") == ["z3", "-smt2", "-t:2500", "vc.smt2"]
    cvc = SolverConfig(executable="/opt/bin/cvc5", timeout=1)
    assert cvc.argv("vc.smt2") == ["/opt/bin/cvc5", "--lang=smt2", "--tlimit-per=1000", "vc.smt2"]
    assert default_args("mysolver") == ("{file}",)


def test_explicit_template_wins():
    cfg = SolverConfig(executable="z3", args_template=("-in", "-T:{timeout}", "{file}"), timeout=0.2)
    assert cfg.argv("a.smt2") == ["z3", "-in", "-T:1", "a.smt2"]


@pytest.mark.parametrize(
    "values",
    [{"jobs": 0}, {"timeout": 0}, {"timeout": -1.0}, {"backend": "bogus"}, {"executable": "  "}],
)
def test_solver_config_rejects_bad_values(values):
    with pytest.raises(ValidationError):
        SolverConfig(**values)


def test_from_env(monkeypatch):
    monkeypatch.setenv("RELVERIFY_SOLVER", "cvc5")
    monkeypatch.setenv("RELVERIFY_TIMEOUT", "3")
    monkeypatch.setenv("RELVERIFY_JOBS", "4")
    monkeypatch.setenv("RELVERIFY_BACKEND", "process")
    monkeypatch.delenv("RELVERIFY_SOLVER_ARGS", raising=False)
    cfg = SolverConfig.from_env()
    assert (cfg.executable, cfg.timeout, cfg.jobs) == ("cvc5", 3.0, 4)
    assert cfg.args_template[0] == "--lang=smt2"

    cfg = SolverConfig.from_env(jobs=2, timeout=None)
    assert cfg.jobs == 2 and cfg.timeout == 3.0


def test_from_env_bad_numbers_fall_back(monkeypatch):
    monkeypatch.setenv("RELVERIFY_JOBS", "many")
    monkeypatch.setenv("RELVERIFY_TIMEOUT", "soon")
    cfg = SolverConfig.from_env()
    assert cfg.jobs == 1
    assert cfg.timeout == 10.0


def test_from_env_argument_template(monkeypatch):
    monkeypatch.setenv("RELVERIFY_SOLVER_ARGS", "-smt2 {file}")
    cfg = SolverConfig.from_env(executable="z3")
    assert cfg.argv("x.smt2") == ["z3", "-smt2", "x.smt2"]


def test_run_config_validation():
    with pytest.raises(ValidationError, match="requires at least one input"):
        RunConfig(mode="verify")
    with pytest.raises(ValidationError, match="requires --method"):
        RunConfig(mode="run")
    with pytest.raises(ValidationError):
        RunConfig(mode="prove", inputs=["a.wrl"])
    with pytest.raises(ValidationError):
        RunConfig(mode="run", method="M.m", fuel=0)
    cfg = RunConfig(mode="check", inputs=["a.wrl"])
    assert cfg.solver.backend == "process"
