from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List

import pytest

from relverify.config import RunConfig, SolverConfig
from relverify.constants import MANIFEST_NAME
from relverify.pipeline import load_program
from relverify.typecheck import TypedProgram

CORPUS = Path(__file__).resolve().parents[3] / "corpus"


@dataclass
class Example:
    """One corpus directory and its expected.json manifest."""

    name: str
    root: Path
    manifest: Dict[str, Any]

    @property
    def inputs(self) -> List[str]:
        return [str(self.root / p) for p in self.manifest["inputs"]]

    @property
    def search_path(self) -> List[str]:
        return [str(self.root / p) for p in self.manifest.get("path", [])]

    def program(self) -> TypedProgram:
        return load_program(self.inputs, self.search_path)

    def config(self, mode: str = "check", **values: Any) -> RunConfig:
        values.setdefault("solver", SolverConfig(backend="z3-api", timeout=60))
        return RunConfig(inputs=self.inputs, search_path=self.search_path, mode=mode, **values)

    def argv(self, mode: str) -> List[str]:
        out = [mode, *self.inputs]
        for p in self.search_path:
            out += ["--path", p]
        return out


@pytest.fixture
def example() -> Callable[[str], Example]:
    def load(name: str) -> Example:
        root = CORPUS / name
        manifest = json.loads((root / MANIFEST_NAME).read_text(encoding="utf-8"))
        return Example(name, root, manifest)

    return load
