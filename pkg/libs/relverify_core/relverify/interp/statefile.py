"""JSON state files for the ``run`` subcommand.

A unary state::

    {"alloc": {"1": "Node"}, "heap": {"val": {"1": 5}},
     "globals": {"pool": [1]}, "args": {"n": 3}}

A bimethod state wraps two of those with the initial permutation::

    {"left": {...}, "right": {...}, "pi": [[1, 1]]}

References are integer ids (0 is null), regions are lists of ids and
intlists are lists of ints; the declared types decide the decoding.
"""
from __future__ import annotations

from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, field_validator

from ..diagnostics import InterpError
from ..frontend.linker import World
from ..jsonutil import try_parse_json
from ..lang import ast as A
from ..lang.regions import RefPerm, Reference, Region
from .state import ConcreteState, Value, default_value


class StateFile(BaseModel):
    alloc: Dict[str, str] = Field(default_factory=dict)
    heap: Dict[str, Dict[str, Any]] = Field(default_factory=dict)
    globals: Dict[str, Any] = Field(default_factory=dict)
    args: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("alloc")
    @classmethod
    def _positive_ids(cls, v: Dict[str, str]) -> Dict[str, str]:
        for k in v:
            if not k.lstrip("-").isdigit() or int(k) <= 0:
                raise ValueError(f"allocated ids must be positive integers, got {k!r}")
        return v


class BiStateFile(BaseModel):
    left: StateFile = Field(default_factory=StateFile)
    right: StateFile = Field(default_factory=StateFile)
    pi: List[Tuple[int, int]] = Field(default_factory=list)


# --------- values ---------


def decode_value(raw: Any, t: A.Type) -> Value:
    if t == A.INT:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise InterpError(f"expected an int, got {raw!r}")
        return raw
    if t == A.BOOL:
        if not isinstance(raw, bool):
            raise InterpError(f"expected a bool, got {raw!r}")
        return raw
    if t == A.RGN:
        return Region(frozenset(Reference(int(x)) for x in raw))
    if t == A.INTLIST:
        return tuple(int(x) for x in raw)
    if raw is None:
        return Reference(0)
    return Reference(int(raw))


def encode_value(v: Value) -> Any:
    if isinstance(v, Reference):
        return v.id
    if isinstance(v, Region):
        return sorted(r.id for r in v.elems)
    if isinstance(v, tuple):
        return list(v)
    return v


# --------- states ---------


def decode_state(sf: StateFile, world: World) -> ConcreteState:
    st = ConcreteState.empty(world.globals)
    for k, cls in sf.alloc.items():
        if not world.classes.has_class(cls):
            raise InterpError(f"state allocates unknown class {cls!r}")
        ref = Reference(int(k))
        st.alloc[ref] = cls
        for fd in world.classes.fields_of(cls):
            st.write(ref, fd.name, default_value(fd.ftype))
    st.next_id = max([r.id for r in st.alloc] + [0]) + 1
    for fname, cells in sf.heap.items():
        fd = world.classes.field(fname)
        if fd is None:
            raise InterpError(f"state mentions unknown field {fname!r}")
        for k, raw in cells.items():
            st.write(Reference(int(k)), fname, decode_value(raw, fd.ftype))
    for gname, raw in sf.globals.items():
        g = world.global_decl(gname)
        if g is None:
            raise InterpError(f"state mentions unknown global {gname!r}")
        st.globals[gname] = decode_value(raw, g.gtype)
    errs = st.wf_errors(world.classes, world.globals)
    if errs:
        raise InterpError("ill-formed state: " + "; ".join(errs))
    return st


def decode_args(sf: StateFile, params: Sequence[A.Param]) -> List[Value]:
    out: List[Value] = []
    for p in params:
        out.append(decode_value(sf.args[p.name], p.ptype) if p.name in sf.args else default_value(p.ptype))
    return out


def encode_state(st: ConcreteState) -> Dict[str, Any]:
    return {
        "alloc": {str(r.id): c for r, c in sorted(st.alloc.items())},
        "heap": {
            f: {str(r.id): encode_value(v) for r, v in sorted(cells.items())}
            for f, cells in sorted(st.heap.items())
        },
        "globals": {k: encode_value(v) for k, v in sorted(st.globals.items())},
    }


def encode_env(env: Dict[str, Value]) -> Dict[str, Any]:
    return {k: encode_value(v) for k, v in sorted(env.items())}


def decode_pi(pairs: Sequence[Tuple[int, int]]) -> RefPerm:
    return RefPerm(tuple((Reference(l), Reference(r)) for l, r in pairs))


def encode_pi(pi: RefPerm) -> List[List[int]]:
    return [[l.id, r.id] for l, r in sorted(pi.pairs)]


def load_state_text(text: str, bimethod: bool = False) -> Any:
    obj, err = try_parse_json(text)
    if err is not None:
        raise InterpError(f"state file is not JSON: {err}")
    try:
        return BiStateFile.model_validate(obj) if bimethod else StateFile.model_validate(obj)
    except Exception as e:
        raise InterpError(f"bad state file: {e}") from None


def load_state_file(path: Optional[str], bimethod: bool = False) -> Any:
    if path is None:
        return BiStateFile() if bimethod else StateFile()
    with open(path, "r", encoding="utf-8") as fh:
        return load_state_text(fh.read(), bimethod)


__all__ = [
    "StateFile",
    "BiStateFile",
    "decode_value",
    "encode_value",
    "decode_state",
    "decode_args",
    "encode_state",
    "encode_env",
    "decode_pi",
    "encode_pi",
    "load_state_text",
    "load_state_file",
]
