"""Reference interpreter for commands and unary formulas.

Execution is fuel bounded. Every primitive command and every loop-guard test
costs one step. Faults and fuel exhaustion are returned as values; the
interpreter raises only for programs it cannot run at all (a call to a
method without a body, a malformed state).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple, Union

from ..constants import DEFAULT_FUEL, KIND_ASSERT, KIND_DISJOINT
from ..diagnostics import InterpError, Span
from ..encap import Obligation, commands, gen_disjointness_obligations
from ..frontend.linker import World
from ..lang import ast as A
from ..lang.desugar import walk
from ..lang.pretty import pretty_expr
from ..lang.regions import NULL, Reference, Region, region_of
from .state import ConcreteState, Loc, Value, default_value

log = logging.getLogger("relverify.interp")

FAULT_NULL = "null-deref"
FAULT_ASSERT = KIND_ASSERT
FAULT_ASSUME = "assume"
FAULT_DISJOINT = KIND_DISJOINT
FAULT_DIVISION = "division-by-zero"
FAULT_PARTIAL = "partial-function"
FAULT_WF = "wf"

Env = Dict[str, Value]
OldFrame = Optional[Tuple[ConcreteState, Env]]


# ========== outcomes ==========


@dataclass
class Trace:
    """Steps taken and the locations read and written along the way."""

    fuel: int = DEFAULT_FUEL
    steps: int = 0
    writes: Set[Loc] = field(default_factory=set)
    reads: Set[Loc] = field(default_factory=set)
    allocated: List[Reference] = field(default_factory=list)
    events: Optional[List[str]] = None
    budget: Optional["Trace"] = field(default=None, repr=False)  # fuel shared with another trace

    def tick(self, what: str, span: Optional[Span]) -> None:
        owner = self.budget or self
        if owner.fuel <= 0:
            raise _NoFuel()
        owner.fuel -= 1
        self.steps += 1
        if self.events is not None:
            self.events.append(f"{what}@{span}" if span is not None else what)

    def footprint(self) -> Dict[str, List[str]]:
        return {
            "reads": sorted(str(x) for x in self.reads),
            "writes": sorted(str(x) for x in self.writes),
            "allocated": [str(r) for r in self.allocated],
        }


@dataclass(frozen=True)
class Fault:
    kind: str
    message: str = ""
    span: Optional[Span] = None
    trace: Optional[Trace] = field(default=None, compare=False, repr=False)

    def format(self) -> str:
        where = f" at {self.span}" if self.span is not None else ""
        return f"fault[{self.kind}]{where}: {self.message}"


@dataclass(frozen=True)
class OutOfFuel:
    steps: int
    trace: Optional[Trace] = field(default=None, compare=False, repr=False)


Outcome = Union[Tuple[ConcreteState, Trace], Fault, OutOfFuel]


class _Abort(Exception):
    def __init__(self, fault: Fault):
        super().__init__(fault.message)
        self.fault = fault


class _NoFuel(Exception):
    pass


class Unevaluable(Exception):
    """A quantifier over an infinite domain."""


# ========== evaluator ==========


class Evaluator:
    """Runs the code of one typed world against concrete states.

    ``units`` (the linked units) lets client methods of any bound module pick
    up the boundaries of the interfaces they import; without it only the
    world's root is treated as a client.
    """

    def __init__(
        self,
        world: World,
        *,
        units: Optional[Mapping[str, A.CompilationUnit]] = None,
        trace: Optional[Trace] = None,
        check_disjointness: bool = True,
        debug: bool = False,
    ):
        self.world = world
        self.ct = world.classes
        self.units = units
        self.trace = trace or Trace()
        self.check_disjointness = check_disjointness
        self.debug = debug
        self._active: Set[Tuple[str, Tuple]] = set()
        self._guards: Dict[int, Dict[int, List[Obligation]]] = {}
        self._old_users: Dict[int, bool] = {}

    # --------- errors ---------

    def fault(self, kind: str, message: str, span: Optional[Span]) -> _Abort:
        return _Abort(Fault(kind, message, span, self.trace))

    # --------- expressions ---------

    def lookup(self, name: str, st: ConcreteState, env: Env, track: bool = False) -> Value:
        if name in env:
            return env[name]
        if name == "alloc":
            return st.allocated()
        if name in st.globals:
            if track:
                self.trace.reads.add(Loc("global", name))
            return st.globals[name]
        g = self.world.global_decl(name)
        if g is not None:
            return default_value(g.gtype)
        raise InterpError(f"unbound variable {name!r}")

    def expr(self, e: A.Expr, st: ConcreteState, env: Env, old: OldFrame = None, track: bool = False) -> Value:
        if isinstance(e, A.IntLit):
            return e.value
        if isinstance(e, A.BoolLit):
            return e.value
        if isinstance(e, A.NullLit):
            return NULL
        if isinstance(e, A.NilLit):
            return ()
        if isinstance(e, A.Var):
            return self.lookup(e.name, st, env, track)
        if isinstance(e, A.FieldRead):
            obj = self.expr(e.obj, st, env, old, track)
            if not isinstance(obj, Reference) or obj.is_null:
                raise self.fault(FAULT_NULL, f"read of .{e.field} from null", e.span)
            if track:
                self.trace.reads.add(Loc("field", e.field, obj))
            fd = self.ct.field(e.field)
            return st.read(obj, e.field, fd.ftype if fd else None)
        if isinstance(e, A.Image):
            return self.image(self.expr(e.region, st, env, old, track), e.field, st)  # type: ignore[arg-type]
        if isinstance(e, A.RegionLit):
            return region_of(self.expr(x, st, env, old, track) for x in e.elems)  # type: ignore[misc]
        if isinstance(e, A.Unary):
            v = self.expr(e.operand, st, env, old, track)
            return (not v) if e.op == "not" else -v  # type: ignore[operator]
        if isinstance(e, A.Binary):
            return self._binary(e, st, env, old, track)
        if isinstance(e, A.Old):
            if old is None:
                raise InterpError("old(...) without a pre-state", e.span)
            ost, oenv = old
            merged = dict(oenv)
            merged.update({k: v for k, v in env.items() if k not in oenv})
            return self.expr(e.expr, ost, merged, old)
        if isinstance(e, A.Call):
            return self._call(e, st, env, old, track)
        if isinstance(e, A.Quant):
            return self._quant(e, st, env, old)
        raise InterpError(f"cannot evaluate {type(e).__name__}", e.span)

    def image(self, region: Region, f: str, st: ConcreteState) -> Region:
        fd = self.ct.field(f)
        owner = self.ct.owner(f)
        if fd is None or not (fd.ftype.is_class or fd.ftype == A.RGN):
            return Region()
        out: Set[Reference] = set()
        for q in region.elems:
            if st.alloc.get(q) != owner:
                continue
            v = st.read(q, f, fd.ftype)
            if isinstance(v, Region):
                out.update(v.elems)
            else:
                out.add(v)  # type: ignore[arg-type]
        return Region(frozenset(out))

    def _binary(self, e: A.Binary, st: ConcreteState, env: Env, old: OldFrame, track: bool) -> Value:
        op = e.op
        a = self.expr(e.left, st, env, old, track)
        # connectives short-circuit like the null checks of the VC generator
        if op == "/\\":
            return bool(a) and bool(self.expr(e.right, st, env, old, track))
        if op == "\\/":
            return bool(a) or bool(self.expr(e.right, st, env, old, track))
        if op == "->":
            return (not a) or bool(self.expr(e.right, st, env, old, track))
        b = self.expr(e.right, st, env, old, track)
        if op == "+":
            return a + b  # type: ignore[operator]
        if op == "-":
            return a - b  # type: ignore[operator]
        if op == "*":
            return a * b  # type: ignore[operator]
        if op in ("/", "%"):
            if b == 0:
                raise self.fault(FAULT_DIVISION, f"division by zero in {pretty_expr(e)}", e.span)
            # SMT-LIB integer division: remainder in [0, |b|)
            r = a % abs(b)  # type: ignore[operator]
            return (a - r) // b if op == "/" else r  # type: ignore[operator]
        if op == "=":
            return a == b
        if op == "<>":
            return a != b
        if op == "<":
            return a < b  # type: ignore[operator]
        if op == "<=":
            return a <= b  # type: ignore[operator]
        if op == ">":
            return a > b  # type: ignore[operator]
        if op == ">=":
            return a >= b  # type: ignore[operator]
        if op == "<->":
            return bool(a) == bool(b)
        if op == "++":
            return a.union(b)  # type: ignore[union-attr]
        if op == "--":
            return a.diff(b)  # type: ignore[union-attr]
        if op == "^^":
            return a.inter(b)  # type: ignore[union-attr]
        if op == "iin":
            return a in b  # type: ignore[operator]
        if op == "<<":
            return a.subset(b)  # type: ignore[union-attr]
        raise InterpError(f"unknown operator {op!r}", e.span)

    def _call(self, e: A.Call, st: ConcreteState, env: Env, old: OldFrame, track: bool) -> Value:
        args = [self.expr(a, st, env, old, track) for a in e.args]
        if e.name == "cons":
            return (args[0],) + tuple(args[1])  # type: ignore[arg-type, operator]
        if e.name in ("hd", "tl"):
            lst = args[0]
            if not lst:
                raise self.fault(FAULT_PARTIAL, f"{e.name} of nil", e.span)
            return lst[0] if e.name == "hd" else tuple(lst[1:])  # type: ignore[index]
        if e.name == "len":
            return len(args[0])  # type: ignore[arg-type]
        p = self.world.predicate(e.name)
        if p is not None:
            return self.predicate(p, args, st, old)
        raise InterpError(f"method call {e.name}(...) inside a formula", e.span)

    def predicate(self, p: A.PredicateDecl, args: Sequence[Value], st: ConcreteState, old: OldFrame = None) -> bool:
        """Least fixpoint: an application met again while it is being unfolded is false."""
        key = (p.name, tuple(args))
        if key in self._active:
            return False
        self._active.add(key)
        try:
            return bool(self.expr(p.body, st, {q.name: a for q, a in zip(p.params, args)}, old))
        finally:
            self._active.discard(key)

    def domain(self, t: A.Type, dom: Optional[A.Expr], st: ConcreteState, env: Env, old: OldFrame) -> List[Value]:
        if t.is_class:
            refs = st.of_class(t.name)
            if dom is not None:
                region = self.expr(dom, st, env, old)
                refs = [r for r in refs if r in region]  # type: ignore[operator]
            return list(refs)
        if t == A.BOOL:
            return [False, True]
        raise Unevaluable(f"quantifier over {t}")

    def _quant(self, e: A.Quant, st: ConcreteState, env: Env, old: OldFrame) -> bool:
        values = self.domain(e.vtype, e.domain, st, env, old)
        test = (lambda v: bool(self.expr(e.body, st, {**env, e.var: v}, _bind(old, e.var, v))))
        if e.kind == "forall":
            return all(test(v) for v in values)
        return any(test(v) for v in values)

    def holds(self, f: A.Expr, st: ConcreteState, env: Env, old: OldFrame = None) -> bool:
        """Truth of a formula; a quantifier the interpreter cannot range over counts as true."""
        try:
            return bool(self.expr(f, st, env, old))
        except Unevaluable as ex:
            log.warning("skipping unevaluable formula %s: %s", pretty_expr(f), ex)
            return True

    # --------- commands ---------

    def assign(self, name: str, v: Value, st: ConcreteState, env: Env) -> None:
        if name in env:
            env[name] = v
            return
        st.globals[name] = v
        self.trace.writes.add(Loc("global", name))

    def cmd(self, c: A.Command, st: ConcreteState, env: Env, old: OldFrame = None, guards=None) -> None:
        if guards:
            for ob in guards.get(id(c), ()):
                if not self.holds(ob.formula, st, env, old):  # type: ignore[arg-type]
                    raise self.fault(FAULT_DISJOINT, ob.message, ob.span)
        if isinstance(c, A.Seq):
            for it in c.items:
                self.cmd(it, st, env, old, guards)
            return
        if isinstance(c, A.Skip):
            return
        if isinstance(c, A.VarBlock):
            self._block(c, st, env, old, guards)
            return
        self.trace.tick(type(c).__name__, c.span)
        if isinstance(c, A.Assign):
            call = self._method_call(c.value)
            if call is not None:
                args = [self.expr(a, st, env, old, track=True) for a in call.args]
                v = self.call(call.name, args, st, c.span)
            else:
                v = self.expr(c.value, st, env, old, track=True)
            self.assign(c.target, v, st, env)
        elif isinstance(c, A.FieldAssign):
            obj = self.lookup(c.obj, st, env, track=True)
            if not isinstance(obj, Reference) or obj.is_null:
                raise self.fault(FAULT_NULL, f"write of {c.obj}.{c.field} with {c.obj} = null", c.span)
            v = self.expr(c.value, st, env, old, track=True)
            st.write(obj, c.field, v)
            self.trace.writes.add(Loc("field", c.field, obj))
        elif isinstance(c, A.New):
            ref = st.allocate(c.cls, self.ct)
            self.trace.allocated.append(ref)
            self.trace.writes.add(Loc("alloc", ref=ref))
            self.assign(c.target, ref, st, env)
        elif isinstance(c, A.If):
            branch = c.then if self.expr(c.cond, st, env, old, track=True) else c.orelse
            self.cmd(branch, st, env, old, guards)
        elif isinstance(c, A.While):
            self._loop(c, st, env, old, guards)
        elif isinstance(c, A.CallCmd):
            args = [self.expr(a, st, env, old, track=True) for a in c.args]
            self.call(c.method, args, st, c.span)
        elif isinstance(c, A.Assert):
            if not self.holds(c.formula, st, env, old):
                raise self.fault(FAULT_ASSERT, f"assertion {pretty_expr(c.formula)} failed", c.span)
        elif isinstance(c, A.Assume):
            if not self.holds(c.formula, st, env, old):
                raise self.fault(FAULT_ASSUME, f"assumption {pretty_expr(c.formula)} is false", c.span)
        else:
            raise InterpError(f"cannot execute {type(c).__name__}", c.span)
        if self.debug:
            errs = st.wf_errors(self.ct, self.world.globals)
            if errs:
                raise self.fault(FAULT_WF, "; ".join(errs), c.span)

    def _block(self, c: A.VarBlock, st: ConcreteState, env: Env, old: OldFrame, guards) -> None:
        missing = object()
        saved = env.get(c.name, missing)
        env[c.name] = default_value(c.vtype)
        try:
            self.cmd(c.body, st, env, old, guards)
        finally:
            if saved is missing:
                env.pop(c.name, None)
            else:
                env[c.name] = saved  # type: ignore[assignment]

    def _loop(self, c: A.While, st: ConcreteState, env: Env, old: OldFrame, guards) -> None:
        snapshots = self.uses_old(c.body)
        while True:
            self.trace.tick("guard", c.span)
            if not self.expr(c.cond, st, env, old, track=True):
                return
            it_old = (st.copy(), dict(env)) if snapshots else old
            self.cmd(c.body, st, env, it_old, guards)

    def uses_old(self, c: A.Command) -> bool:
        key = id(c)
        if key not in self._old_users:
            found = False
            for x in commands(c):
                if isinstance(x, (A.Assert, A.Assume)) and any(isinstance(s, A.Old) for s in walk(x.formula)):
                    found = True
                    break
            self._old_users[key] = found
        return self._old_users[key]

    def _method_call(self, value: A.Expr) -> Optional[A.Call]:
        if isinstance(value, A.Call) and self.world.method(value.name) is not None and self.world.predicate(value.name) is None:
            return value
        return None

    # --------- methods ---------

    def client_guards(self, m: A.MethodDecl) -> Dict[int, List[Obligation]]:
        """Disjointness checks of ``m``, keyed by the command they precede."""
        key = id(m)
        if key in self._guards:
            return self._guards[key]
        out: Dict[int, List[Obligation]] = {}
        if self.check_disjointness and m.body is not None:
            for b in self.foreign_boundaries(self.world.method_units.get(m.name, self.world.name)):
                for ob in gen_disjointness_obligations(m, b):
                    out.setdefault(ob.node, []).append(ob)  # type: ignore[arg-type]
        self._guards[key] = out
        return out

    def foreign_boundaries(self, unit: str) -> List[A.Boundary]:
        if self.units is not None and unit in self.units:
            own = self.units[unit].iface
        elif unit == self.world.name:
            own = self.world.iface
        else:
            return []
        return [b for b in self.world.boundaries if b.owner not in (own, unit)]

    def enter(self, m: A.MethodDecl, args: Sequence[Value]) -> Env:
        if len(args) != len(m.params):
            raise InterpError(f"{m.name} expects {len(m.params)} arguments, got {len(args)}", m.span)
        env: Env = {p.name: a for p, a in zip(m.params, args)}
        if m.ret != A.UNIT:
            env["result"] = default_value(m.ret)
        return env

    def run_body(self, m: A.MethodDecl, st: ConcreteState, env: Env) -> None:
        if m.body is None:
            raise InterpError(f"method {m.name!r} has no implementation in world {self.world.name}", m.span)
        old = (st.copy(), dict(env)) if self.uses_old(m.body) else None
        self.cmd(m.body, st, env, old, self.client_guards(m))

    def call(self, name: str, args: Sequence[Value], st: ConcreteState, span: Optional[Span] = None) -> Value:
        m = self.world.method(name)
        if m is None:
            raise InterpError(f"unknown method {name!r}", span)
        env = self.enter(m, args)
        self.run_body(m, st, env)
        return env.get("result", 0)


def _bind(old: OldFrame, name: str, v: Value) -> OldFrame:
    if old is None:
        return None
    return old[0], {**old[1], name: v}


# ========== entry points ==========


def capture(fn, trace: Trace):
    """Run ``fn()`` and turn aborts into outcome values."""
    try:
        return fn()
    except _Abort as ex:
        return ex.fault
    except _NoFuel:
        return OutOfFuel(trace.steps, trace)


def eval_command(
    c: A.Command,
    s: ConcreteState,
    fuel: int = DEFAULT_FUEL,
    *,
    world: World,
    env: Optional[Env] = None,
    old: OldFrame = None,
    units: Optional[Mapping[str, A.CompilationUnit]] = None,
    debug: bool = False,
) -> Outcome:
    """Execute ``c`` from a copy of ``s``. Locals live in ``env``, updated in place."""
    trace = Trace(fuel=fuel)
    ev = Evaluator(world, units=units, trace=trace, debug=debug)
    st = s.copy()
    env = env if env is not None else {}

    def go():
        ev.cmd(c, st, env, old)
        return st, trace

    return capture(go, trace)


@dataclass
class MethodRun:
    pre: ConcreteState
    post: ConcreteState
    env: Env
    entry: Env
    trace: Trace

    @property
    def result(self) -> Optional[Value]:
        return self.env.get("result")


def eval_method(
    world: World,
    name: str,
    args: Sequence[Value],
    s: ConcreteState,
    fuel: int = DEFAULT_FUEL,
    *,
    units: Optional[Mapping[str, A.CompilationUnit]] = None,
    debug: bool = False,
) -> Union[MethodRun, Fault, OutOfFuel]:
    trace = Trace(fuel=fuel)
    ev = Evaluator(world, units=units, trace=trace, debug=debug)
    m = world.method(name)
    if m is None:
        raise InterpError(f"unknown method {name!r}")
    st = s.copy()
    env = ev.enter(m, args)
    entry = dict(env)

    def go():
        ev.run_body(m, st, env)
        return MethodRun(s.copy(), st, env, entry, trace)

    return capture(go, trace)


def check_spec(world: World, m: A.MethodDecl, run: MethodRun, formulas: Sequence[A.Expr]) -> List[A.Expr]:
    """Postconditions of ``formulas`` that fail on ``run``.

    A parameter in a postcondition denotes its entry value.
    """
    ev = Evaluator(world)
    env = dict(run.env)
    env.update({p.name: run.entry[p.name] for p in m.params})
    old = (run.pre, dict(run.entry))
    return [f for f in formulas if not ev.holds(f, run.post, env, old)]


__all__ = [
    "Trace",
    "Fault",
    "OutOfFuel",
    "Outcome",
    "Unevaluable",
    "Evaluator",
    "MethodRun",
    "eval_command",
    "eval_method",
    "check_spec",
    "capture",
    "FAULT_NULL",
    "FAULT_ASSERT",
    "FAULT_ASSUME",
    "FAULT_DISJOINT",
    "FAULT_DIVISION",
    "FAULT_PARTIAL",
    "FAULT_WF",
]
