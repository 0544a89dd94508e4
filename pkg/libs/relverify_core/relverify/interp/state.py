"""Concrete states: allocation table, per-field heaps, globals."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple, Union

from ..lang import ast as A
from ..lang.regions import EMPTY, NULL, Reference, Region, region_of

IntList = Tuple[int, ...]
Value = Union[int, bool, Reference, Region, IntList]


def default_value(t: A.Type) -> Value:
    if t == A.INT:
        return 0
    if t == A.BOOL:
        return False
    if t == A.RGN:
        return EMPTY
    if t == A.INTLIST:
        return ()
    return NULL


def has_type(v: Value, t: A.Type, alloc: Dict[Reference, str]) -> bool:
    """``v`` is a well-typed value of ``t`` with no dangling references."""
    if t == A.INT:
        return isinstance(v, int) and not isinstance(v, bool)
    if t == A.BOOL:
        return isinstance(v, bool)
    if t == A.INTLIST:
        return isinstance(v, tuple)
    if t == A.RGN:
        return isinstance(v, Region) and all(r.is_null or r in alloc for r in v.elems)
    if t.is_class:
        return isinstance(v, Reference) and (v.is_null or alloc.get(v) == t.name)
    return True


@dataclass(frozen=True, order=True)
class Loc:
    """A heap or global location: ``global g``, ``field r.f`` or ``alloc r``."""

    kind: str
    name: str = ""
    ref: Optional[Reference] = None

    def __str__(self) -> str:
        if self.kind == "field":
            return f"{self.ref}.{self.name}"
        if self.kind == "alloc":
            return f"alloc {self.ref}"
        return self.name


@dataclass
class ConcreteState:
    alloc: Dict[Reference, str] = field(default_factory=dict)
    heap: Dict[str, Dict[Reference, Value]] = field(default_factory=dict)
    globals: Dict[str, Value] = field(default_factory=dict)
    next_id: int = 1

    @classmethod
    def empty(cls, world_globals: Iterable[A.GlobalDecl] = ()) -> "ConcreteState":
        return cls(globals={g.name: default_value(g.gtype) for g in world_globals})

    def copy(self) -> "ConcreteState":
        return ConcreteState(
            dict(self.alloc),
            {f: dict(m) for f, m in self.heap.items()},
            dict(self.globals),
            self.next_id,
        )

    # --------- heap ---------

    def allocate(self, cls: str, ct: A.ClassTable) -> Reference:
        while Reference(self.next_id) in self.alloc:
            self.next_id += 1
        ref = Reference(self.next_id)
        self.next_id += 1
        self.alloc[ref] = cls
        for fd in ct.fields_of(cls):
            self.heap.setdefault(fd.name, {})[ref] = default_value(fd.ftype)
        return ref

    def read(self, ref: Reference, f: str, ftype: Optional[A.Type] = None) -> Value:
        m = self.heap.get(f, {})
        if ref in m:
            return m[ref]
        return default_value(ftype) if ftype is not None else 0

    def write(self, ref: Reference, f: str, v: Value) -> None:
        self.heap.setdefault(f, {})[ref] = v

    def allocated(self) -> Region:
        return region_of(self.alloc)

    def of_class(self, cls: str) -> List[Reference]:
        return sorted(r for r, c in self.alloc.items() if c == cls)

    # --------- well-formedness ---------

    def wf_errors(self, ct: A.ClassTable, globals: Iterable[A.GlobalDecl] = ()) -> List[str]:
        out: List[str] = []
        if NULL in self.alloc:
            out.append("null is allocated")
        for r, cls in sorted(self.alloc.items()):
            if not ct.has_class(cls):
                out.append(f"{r} has unknown class {cls}")
                continue
            for fd in ct.fields_of(cls):
                v = self.read(r, fd.name, fd.ftype)
                if not has_type(v, fd.ftype, self.alloc):
                    out.append(f"{r}.{fd.name} = {v} is not a {fd.ftype}")
        for g in globals:
            v = self.globals.get(g.name, default_value(g.gtype))
            if not has_type(v, g.gtype, self.alloc):
                out.append(f"global {g.name} = {v} is not a {g.gtype}")
        return out

    def well_formed(self, ct: A.ClassTable, globals: Iterable[A.GlobalDecl] = ()) -> bool:
        return not self.wf_errors(ct, globals)


__all__ = ["Value", "IntList", "Loc", "ConcreteState", "default_value", "has_type"]
