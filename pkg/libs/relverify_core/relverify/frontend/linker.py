"""Resolution of interfaces, modules and bimodules into whole-program worlds.

A *world* is one program view rooted at a unit: the interfaces it sees, the
module implementing them when one is bound, and the root itself. Classes are
merged by refinement, so a module's private fields only exist in worlds that
contain that module. Module verification uses the world of the module;
clients see interfaces only; execution binds interfaces to modules.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from ..constants import SOURCE_SUFFIX
from ..diagnostics import LinkError
from ..lang import ast as A
from .parser import parse

log = logging.getLogger("relverify.frontend")

_BUILTIN_TYPES = frozenset(A.PRIMITIVE_TYPES)


@dataclass(frozen=True)
class World:
    """Whole-program view rooted at ``name``."""

    name: str
    iface: Optional[str]
    units: Tuple[str, ...]
    classes: A.ClassTable
    globals: Tuple[A.GlobalDecl, ...]
    methods: Tuple[A.MethodDecl, ...]
    method_units: Dict[str, str] = field(default_factory=dict, compare=False)
    hidden: Tuple[str, ...] = ()  # root-module methods carrying the hidden invariants
    predicates: Tuple[A.PredicateDecl, ...] = ()
    invariants: Tuple[A.InvariantDecl, ...] = ()
    boundaries: Tuple[A.Boundary, ...] = ()
    bound: Dict[str, str] = field(default_factory=dict, compare=False)

    def global_decl(self, name: str) -> Optional[A.GlobalDecl]:
        for g in self.globals:
            if g.name == name:
                return g
        return None

    def method(self, name: str) -> Optional[A.MethodDecl]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def predicate(self, name: str) -> Optional[A.PredicateDecl]:
        for p in self.predicates:
            if p.name == name:
                return p
        return None

    def boundary(self, iface: str) -> Optional[A.Boundary]:
        for b in self.boundaries:
            if b.owner == iface:
                return b
        return None

    def foreign_boundaries(self) -> Tuple[A.Boundary, ...]:
        """Boundaries of interfaces this world's root is a client of."""
        return tuple(b for b in self.boundaries if b.owner != self.iface and b.owner != self.name)

    def is_module_method(self, name: str) -> bool:
        return name in self.hidden


@dataclass(frozen=True)
class LinkedProgram:
    units: Dict[str, A.CompilationUnit]
    worlds: Dict[str, World]
    main: Optional[Tuple[str, str]] = None

    def unit(self, name: str) -> A.CompilationUnit:
        try:
            return self.units[name]
        except KeyError:
            raise LinkError(f"unresolved unit {name!r}") from None

    def world(self, name: str) -> World:
        try:
            return self.worlds[name]
        except KeyError:
            raise LinkError(f"no world for unit {name!r}") from None

    def implementers(self, iface: str) -> List[str]:
        return sorted(u.name for u in self.units.values() if u.kind == "module" and u.iface == iface)

    def bimodules(self) -> List[A.CompilationUnit]:
        return [u for u in self.units.values() if u.kind == "bimodule"]

    def sides(self, bimodule: str) -> Tuple[World, World]:
        u = self.unit(bimodule)
        return self.world(u.left), self.world(u.right)  # type: ignore[arg-type]

    def relspecs(self, bimodule: str) -> Dict[str, A.BiMethodDecl]:
        """Relational method context for aligned calls inside ``bimodule``.

        The bimodule's own methods, plus those of every bimodule relating two
        implementations of an interface imported by the sides.
        """
        u = self.unit(bimodule)
        out: Dict[str, A.BiMethodDecl] = {m.name: m for m in u.bimethods}
        sides = {u.left, u.right}
        imported = set()
        for s in sides:
            imported.update(self.unit(s).imports)  # type: ignore[arg-type]
        origin: Dict[str, str] = {}
        for other in self.bimodules():
            if other.name == bimodule:
                continue
            li = self.unit(other.left).iface  # type: ignore[arg-type]
            ri = self.unit(other.right).iface  # type: ignore[arg-type]
            if li is None or li != ri or li not in imported:
                continue
            for m in other.bimethods:
                if m.name in out and m.name in origin:
                    raise LinkError(
                        f"relational spec for {m.name!r} provided by both {origin[m.name]} and {other.name}", m.span
                    )
                if m.name not in out:
                    out[m.name] = m
                    origin[m.name] = other.name
        return out

    def executable_world(self, root: str, bind: Optional[Mapping[str, str]] = None) -> World:
        """World of ``root`` with every imported interface bound to a module.

        Unbound interfaces default to their unique implementer.
        """
        chosen: Dict[str, str] = dict(bind or {})
        pending = list(self.unit(root).imports)
        seen = set()
        while pending:
            iface = pending.pop()
            if iface in seen:
                continue
            seen.add(iface)
            if iface not in chosen:
                impls = self.implementers(iface)
                if len(impls) != 1:
                    raise LinkError(
                        f"interface {iface!r} needs an explicit binding (implementers: {', '.join(impls) or 'none'})"
                    )
                chosen[iface] = impls[0]
            mod = self.unit(chosen[iface])
            if mod.iface != iface:
                raise LinkError(f"module {mod.name!r} does not implement {iface!r}")
            pending.extend(mod.imports)
        return build_world(self.units, root, chosen)


# --------- unit loading ---------


def load_units(
    paths: Sequence[Path | str], search_path: Sequence[Path | str] = ()
) -> Tuple[List[A.CompilationUnit], List[str]]:
    """Parse the given files (directories expand to their ``.wrl`` files).

    Units referenced but not given are resolved from ``search_path`` as
    ``DIR/<Unit>.wrl``; the default search path is the directories of the
    inputs. Returns all units and the names of the ones given explicitly.
    """
    files: List[Path] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(p.glob("*" + SOURCE_SUFFIX)))
        else:
            files.append(p)
    dirs = [Path(d) for d in search_path] or []
    for f in files:
        if f.parent not in dirs:
            dirs.append(f.parent)
    units: Dict[str, A.CompilationUnit] = {}
    inputs: List[str] = []
    for f in files:
        u = _parse_file(f)
        if u.name in units:
            raise LinkError(f"duplicate unit name {u.name!r} ({units[u.name].path} and {u.path})", u.span)
        units[u.name] = u
        inputs.append(u.name)
    missing = _referenced(units.values()) - set(units)
    while missing:
        name = missing.pop()
        for d in dirs:
            cand = d / (name + SOURCE_SUFFIX)
            if cand.is_file():
                u = _parse_file(cand)
                if u.name != name:
                    raise LinkError(f"{cand} declares {u.name!r}, expected {name!r}", u.span)
                units[name] = u
                log.debug("resolved unit %s from %s", name, cand)
                break
        else:
            # left for link() to report with context
            continue
        missing = _referenced(units.values()) - set(units)
    return list(units.values()), inputs


def _parse_file(path: Path) -> A.CompilationUnit:
    return parse(path.read_text(encoding="utf-8"), str(path))


def _referenced(units: Iterable[A.CompilationUnit]) -> set:
    out = set()
    for u in units:
        if u.iface:
            out.add(u.iface)
        out.update(u.imports)
        if u.left:
            out.add(u.left)
        if u.right:
            out.add(u.right)
    return out


# --------- linking ---------


def link(units: Sequence[A.CompilationUnit]) -> LinkedProgram:
    by_name: Dict[str, A.CompilationUnit] = {}
    for u in units:
        if u.name in by_name:
            raise LinkError(f"duplicate unit name {u.name!r}", u.span)
        by_name[u.name] = u

    for u in by_name.values():
        if u.kind != "interface" and u.boundary is not None:
            raise LinkError(f"boundary declared outside an interface (in {u.name!r})", u.boundary.span)
        if u.kind == "module":
            if u.iface is not None:
                _expect_kind(by_name, u.iface, "interface", u)
            for imp in u.imports:
                _expect_kind(by_name, imp, "interface", u)
        elif u.kind == "bimodule":
            _expect_kind(by_name, u.left, "module", u)  # type: ignore[arg-type]
            _expect_kind(by_name, u.right, "module", u)  # type: ignore[arg-type]

    _check_fields(by_name)
    for u in by_name.values():
        if u.kind == "module" and u.iface is not None:
            _check_implements(by_name[u.iface], u)
    for u in by_name.values():
        if u.kind == "bimodule":
            _check_bimodule(by_name, u)

    worlds: Dict[str, World] = {}
    for u in sorted(by_name.values(), key=lambda x: x.name):
        if u.kind != "bimodule":
            worlds[u.name] = build_world(by_name, u.name, {})

    main = None
    for u in sorted(by_name.values(), key=lambda x: x.name):
        if u.kind == "module" and u.iface is None and u.method("main") is not None:
            main = (u.name, "main")
            break
    log.info("linked %d units (%d worlds)", len(by_name), len(worlds))
    return LinkedProgram(by_name, worlds, main)


def _expect_kind(units: Mapping[str, A.CompilationUnit], name: str, kind: str, user: A.CompilationUnit) -> None:
    u = units.get(name)
    if u is None:
        raise LinkError(f"unresolved {kind} {name!r} referenced by {user.name!r}", user.span)
    if u.kind != kind:
        raise LinkError(f"{name!r} is a {u.kind}, expected a {kind} (referenced by {user.name!r})", user.span)


def _check_fields(units: Mapping[str, A.CompilationUnit]) -> None:
    """Field names are unique program-wide; interface classes are refined append-only."""
    owner: Dict[str, Tuple[str, str]] = {}
    iface_classes: Dict[str, Dict[str, A.ClassDecl]] = {
        u.name: {c.name: c for c in u.classes} for u in units.values() if u.kind == "interface"
    }
    for u in sorted(units.values(), key=lambda x: (x.kind != "interface", x.name)):
        seen_classes = set()
        for c in u.classes:
            if c.name in _BUILTIN_TYPES:
                raise LinkError(f"class name {c.name!r} is reserved", c.span)
            if c.name in seen_classes:
                raise LinkError(f"duplicate class {c.name!r} in {u.name!r}", c.span)
            seen_classes.add(c.name)
            refined = None
            if u.kind == "module" and u.iface is not None:
                refined = iface_classes.get(u.iface, {}).get(c.name)
            for f in c.fields:
                if refined is not None and any(rf.name == f.name for rf in refined.fields):
                    raise LinkError(
                        f"module {u.name!r} redeclares interface field {c.name}.{f.name} (refinement is append-only)",
                        f.span,
                    )
                prev = owner.get(f.name)
                if prev is not None:
                    raise LinkError(
                        f"duplicate field {f.name!r}: declared in {prev[0]}.{prev[1]} and {u.name}.{c.name}", f.span
                    )
                owner[f.name] = (u.name, c.name)


def _same_sig(a: Sequence[A.Param], b: Sequence[A.Param]) -> bool:
    return len(a) == len(b) and all(x.name == y.name and x.ptype == y.ptype for x, y in zip(a, b))


def _check_implements(iface: A.CompilationUnit, mod: A.CompilationUnit) -> None:
    for g in mod.globals:
        ig = next((x for x in iface.globals if x.name == g.name), None)
        if ig is not None and ig.gtype != g.gtype:
            raise LinkError(
                f"module {mod.name!r} redeclares global {g.name!r} as {g.gtype} (interface {iface.name!r} says {ig.gtype})",
                g.span,
            )
    for im in iface.methods:
        m = mod.method(im.name)
        if m is None or m.body is None:
            raise LinkError(f"module {mod.name!r} does not implement {iface.name}.{im.name}", mod.span)
        if not _same_sig(im.params, m.params) or im.ret != m.ret:
            raise LinkError(f"signature mismatch for {mod.name}.{m.name} against {iface.name}", m.span)


def _check_bimodule(units: Mapping[str, A.CompilationUnit], bm: A.CompilationUnit) -> None:
    left = units[bm.left]  # type: ignore[index]
    right = units[bm.right]  # type: ignore[index]
    if (left.iface or right.iface) and left.iface != right.iface:
        raise LinkError(
            f"bimodule {bm.name!r} relates {left.name!r} and {right.name!r}, which implement different interfaces",
            bm.span,
        )
    for m in bm.bimethods:
        for unit, params, ret in ((left, m.lparams, m.lret), (right, m.rparams, m.rret)):
            um = unit.method(m.name)
            if um is None:
                raise LinkError(f"signature mismatch: {unit.name!r} has no method {m.name!r}", m.span)
            if not _same_sig(um.params, params) or um.ret != ret:
                raise LinkError(f"signature mismatch between {bm.name}.{m.name} and {unit.name}.{m.name}", m.span)


# --------- worlds ---------


def _merge_spec(im: A.MethodDecl, m: A.MethodDecl) -> A.MethodDecl:
    spec = A.Spec(
        im.spec.requires + m.spec.requires,
        im.spec.ensures + m.spec.ensures,
        m.spec.effects if m.spec.effects is not None else im.spec.effects,
        span=im.spec.span,
    )
    return replace(m, spec=spec)


def build_world(units: Mapping[str, A.CompilationUnit], root: str, bind: Mapping[str, str]) -> World:
    r = units[root]
    ifaces: List[str] = []
    modules: List[str] = []  # bound modules, in discovery order

    def visit_imports(u: A.CompilationUnit) -> None:
        for imp in u.imports:
            if imp in ifaces:
                continue
            ifaces.append(imp)
            mod = bind.get(imp)
            if mod is not None and mod not in modules:
                modules.append(mod)
                visit_imports(units[mod])

    if r.kind == "interface":
        ifaces.append(r.name)
    else:
        if r.iface is not None:
            ifaces.append(r.iface)
        visit_imports(r)
    order = ifaces + modules + ([root] if r.kind != "interface" else [])

    # classes: interface classes first, then refinements and module classes
    cls_fields: Dict[str, List[A.FieldDecl]] = {}
    cls_span: Dict[str, object] = {}
    for name in order:
        for c in units[name].classes:
            cls_fields.setdefault(c.name, []).extend(c.fields)
            cls_span.setdefault(c.name, c.span)
    classes = A.ClassTable(
        tuple(A.ClassDecl(n, tuple(fs), span=cls_span[n]) for n, fs in cls_fields.items())  # type: ignore[arg-type]
    )
    for c in classes.classes:
        for f in c.fields:
            if f.ftype.is_class and not classes.has_class(f.ftype.name):
                raise LinkError(f"field {c.name}.{f.name} has undeclared class type {f.ftype}", f.span)

    globs: Dict[str, A.GlobalDecl] = {}
    for name in order:
        for g in units[name].globals:
            prev = globs.get(g.name)
            if prev is not None and prev.gtype != g.gtype:
                raise LinkError(f"global {g.name!r} declared with types {prev.gtype} and {g.gtype}", g.span)
            if prev is None:
                globs[g.name] = g

    implementations: Dict[str, str] = {i: m for i, m in bind.items() if i in ifaces}
    if r.kind == "module" and r.iface is not None:
        implementations[r.iface] = root
    methods: Dict[str, A.MethodDecl] = {}
    method_units: Dict[str, str] = {}

    def add_method(m: A.MethodDecl, unit: str) -> None:
        if m.name in methods and method_units[m.name] != unit:
            raise LinkError(f"method {m.name!r} declared by both {method_units[m.name]!r} and {unit!r}", m.span)
        methods[m.name] = m
        method_units[m.name] = unit

    for i in ifaces:
        impl = implementations.get(i)
        for im in units[i].methods:
            if impl is None:
                add_method(im, i)
            else:
                add_method(_merge_spec(im, units[impl].method(im.name)), impl)  # type: ignore[arg-type]
    for name in modules + ([root] if r.kind == "module" else []):
        u = units[name]
        iface_names = {m.name for m in units[u.iface].methods} if u.iface else set()
        for m in u.methods:
            if m.name not in iface_names:
                add_method(m, name)

    preds: Dict[str, A.PredicateDecl] = {}
    for name in order:
        for p in units[name].predicates:
            if p.name in preds:
                raise LinkError(f"duplicate predicate {p.name!r}", p.span)
            preds[p.name] = p

    invariants: Tuple[A.InvariantDecl, ...] = ()
    hidden: Tuple[str, ...] = ()
    if r.kind == "interface":
        invariants = r.invariants
    elif r.kind == "module":
        iface_invs = units[r.iface].invariants if r.iface else ()
        invariants = iface_invs + r.invariants
        if r.iface:
            hidden = tuple(m.name for m in units[r.iface].methods)

    boundaries = tuple(units[i].boundary for i in ifaces if units[i].boundary is not None)
    return World(
        root,
        r.iface if r.kind == "module" else (r.name if r.kind == "interface" else None),
        tuple(order),
        classes,
        tuple(globs.values()),
        tuple(methods.values()),
        method_units,
        hidden,
        tuple(preds.values()),
        invariants,
        boundaries,  # type: ignore[arg-type]
        dict(bind),
    )


__all__ = ["World", "LinkedProgram", "link", "load_units", "build_world"]
