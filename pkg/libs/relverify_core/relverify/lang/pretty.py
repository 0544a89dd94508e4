"""Pretty-printer producing parseable source text.

Expressions are fully parenthesised so that parse(pretty(t)) == t modulo spans.
"""
from __future__ import annotations

from typing import List

from . import ast as A

_INDENT = "  "


# ========== expressions ==========


def pretty_expr(e: A.Expr) -> str:
    if isinstance(e, A.IntLit):
        return str(e.value) if e.value >= 0 else f"(- {-e.value})"
    if isinstance(e, A.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, A.NullLit):
        return "null"
    if isinstance(e, A.NilLit):
        return "nil"
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.FieldRead):
        return f"{_postfix_operand(e.obj)}.{e.field}"
    if isinstance(e, A.Image):
        return f"{_postfix_operand(e.region)}`{e.field}"
    if isinstance(e, A.RegionLit):
        return "{" + ", ".join(pretty_expr(x) for x in e.elems) + "}"
    if isinstance(e, A.Unary):
        if e.op == "not":
            return f"(not {pretty_expr(e.operand)})"
        return f"(- {pretty_expr(e.operand)})"
    if isinstance(e, A.Binary):
        return f"({pretty_expr(e.left)} {e.op} {pretty_expr(e.right)})"
    if isinstance(e, A.Old):
        return f"old({pretty_expr(e.expr)})"
    if isinstance(e, A.Call):
        return f"{e.name}(" + ", ".join(pretty_expr(a) for a in e.args) + ")"
    if isinstance(e, A.Quant):
        dom = f" iin {pretty_expr(e.domain)}" if e.domain is not None else ""
        return f"({e.kind} {e.var}: {e.vtype}{dom}. {pretty_expr(e.body)})"
    raise TypeError(f"not an expression: {e!r}")


def _postfix_operand(e: A.Expr) -> str:
    s = pretty_expr(e)
    if isinstance(e, (A.Var, A.FieldRead, A.Image, A.RegionLit, A.Call, A.Old)) or s.startswith("("):
        return s
    return f"({s})"


# ========== relational formulas ==========


def pretty_rel(rf: A.RelFormula) -> str:
    if isinstance(rf, A.Agree):
        return f"({pretty_expr(rf.left)} =:= {pretty_expr(rf.right)})"
    if isinstance(rf, A.LeftF):
        return f"*<| {pretty_expr(rf.formula)} *<]"
    if isinstance(rf, A.RightF):
        return f"[> {pretty_expr(rf.formula)} |>"
    if isinstance(rf, A.BothF):
        return f"Both({pretty_expr(rf.formula)})"
    if isinstance(rf, A.RBool):
        return "true" if rf.value else "false"
    if isinstance(rf, A.RNot):
        return f"(not {pretty_rel(rf.operand)})"
    if isinstance(rf, A.RBin):
        return f"({pretty_rel(rf.left)} {rf.op} {pretty_rel(rf.right)})"
    if isinstance(rf, A.RQuant):
        ldom = f" iin {pretty_expr(rf.ldomain)}" if rf.ldomain is not None else ""
        rdom = f" iin {pretty_expr(rf.rdomain)}" if rf.rdomain is not None else ""
        return (
            f"({rf.kind} {rf.lvar}: {rf.ltype}{ldom} | {rf.rvar}: {rf.rtype}{rdom}. {pretty_rel(rf.body)})"
        )
    raise TypeError(f"not a relational formula: {rf!r}")


# ========== commands ==========


def pretty_command(c: A.Command, depth: int = 0) -> str:
    return "\n".join(_cmd_lines(c, depth))


def _cmd_lines(c: A.Command, d: int) -> List[str]:
    pad = _INDENT * d
    if isinstance(c, A.Seq):
        out: List[str] = []
        for i, it in enumerate(c.items):
            lines = _cmd_lines(it, d)
            if i < len(c.items) - 1:
                lines[-1] += ";"
            out.extend(lines)
        return out
    if isinstance(c, A.Skip):
        return [pad + "skip"]
    if isinstance(c, A.VarBlock):
        ghost = "ghost " if c.ghost else ""
        return [f"{pad}var {ghost}{c.name}: {c.vtype} in"] + _cmd_lines(c.body, d + 1)
    if isinstance(c, A.Assign):
        return [f"{pad}{c.target} := {pretty_expr(c.value)}"]
    if isinstance(c, A.FieldAssign):
        return [f"{pad}{c.obj}.{c.field} := {pretty_expr(c.value)}"]
    if isinstance(c, A.New):
        return [f"{pad}{c.target} := new {c.cls}"]
    if isinstance(c, A.If):
        return (
            [f"{pad}if {pretty_expr(c.cond)} then"]
            + _cmd_lines(c.then, d + 1)
            + [f"{pad}else"]
            + _cmd_lines(c.orelse, d + 1)
            + [f"{pad}end"]
        )
    if isinstance(c, A.While):
        head = [f"{pad}while {pretty_expr(c.cond)} do"]
        invs = [f"{pad}{_INDENT}invariant {{ {pretty_expr(i)} }}" for i in c.invariants]
        return head + invs + _cmd_lines(c.body, d + 1) + [f"{pad}done"]
    if isinstance(c, A.CallCmd):
        return [f"{pad}{c.method}(" + ", ".join(pretty_expr(a) for a in c.args) + ")"]
    if isinstance(c, A.Assert):
        return [f"{pad}assert {{ {pretty_expr(c.formula)} }}"]
    if isinstance(c, A.Assume):
        return [f"{pad}assume {{ {pretty_expr(c.formula)} }}"]
    raise TypeError(f"not a command: {c!r}")


# ========== biprograms ==========


def pretty_biprogram(b: A.Biprogram, depth: int = 0) -> str:
    return "\n".join(_bi_lines(b, depth))


def _bi_lines(b: A.Biprogram, d: int) -> List[str]:
    pad = _INDENT * d
    if isinstance(b, A.BSeq):
        out: List[str] = []
        for i, it in enumerate(b.items):
            lines = _bi_lines(it, d)
            if i < len(b.items) - 1:
                lines[-1] += ";"
            out.extend(lines)
        return out
    if isinstance(b, A.BSync):
        return [f"{pad}|_ {_inline(b.cmd)} _|"]
    if isinstance(b, A.BSplit):
        return [f"{pad}("] + _cmd_lines(b.left, d + 1) + [f"{pad}|"] + _cmd_lines(b.right, d + 1) + [f"{pad})"]
    if isinstance(b, A.BVar):
        return [f"{pad}var {b.lname}: {b.ltype} | {b.rname}: {b.rtype} in"] + _bi_lines(b.body, d + 1)
    if isinstance(b, A.BIf):
        return (
            [f"{pad}if {pretty_expr(b.lcond)} | {pretty_expr(b.rcond)} then"]
            + _bi_lines(b.then, d + 1)
            + [f"{pad}else"]
            + _bi_lines(b.orelse, d + 1)
            + [f"{pad}end"]
        )
    if isinstance(b, A.BWhile):
        head = f"{pad}while {pretty_expr(b.lcond)} | {pretty_expr(b.rcond)}"
        if b.guarded:
            lg = pretty_rel(b.lguard) if b.lguard is not None else "false"
            rg = pretty_rel(b.rguard) if b.rguard is not None else "false"
            head += f" . {lg} | {rg}"
        invs = [f"{pad}{_INDENT}invariant {{ {pretty_rel(i)} }}" for i in b.invariants]
        return [head + " do"] + invs + _bi_lines(b.body, d + 1) + [f"{pad}done"]
    if isinstance(b, A.BAssert):
        return [f"{pad}assert {{ {pretty_rel(b.formula)} }}"]
    if isinstance(b, A.BCall):
        la = ", ".join(pretty_expr(a) for a in b.largs)
        ra = ", ".join(pretty_expr(a) for a in b.rargs)
        tgt = f"{b.ltarget} | {b.rtarget} := " if b.ltarget is not None else ""
        return [f"{pad}|_ {tgt}{b.method}({la} | {ra}) _|"]
    raise TypeError(f"not a biprogram: {b!r}")


def _inline(c: A.Command) -> str:
    return " ".join(line.strip() for line in _cmd_lines(c, 0))


# ========== units ==========


def pretty_effect(eff: A.Effect) -> str:
    groups: List[str] = []
    mode = None
    current: List[str] = []
    for a in eff.atoms:
        if a.mode != mode:
            if current:
                groups.append(f"{mode} " + ", ".join(current))
            mode, current = a.mode, []
        current.append(pretty_expr(a.target))
    if current:
        groups.append(f"{mode} " + ", ".join(current))
    return "effects { " + "; ".join(groups) + " }"


def _params(ps) -> str:
    return ", ".join(f"{p.name}: {p.ptype}" for p in ps)


def pretty_unit(u: A.CompilationUnit) -> str:
    if u.kind == "interface":
        lines = [f"interface {u.name} ="]
    elif u.kind == "module":
        head = f"module {u.name}"
        if u.iface:
            head += f" : {u.iface}"
        if u.imports:
            head += " imports " + ", ".join(u.imports)
        lines = [head + " ="]
    else:
        lines = [f"bimodule {u.name} ({u.left} | {u.right}) ="]
    p = _INDENT
    for g in u.globals:
        ghost = "ghost " if g.ghost else ""
        lines.append(f"{p}{g.visibility} {ghost}{g.name}: {g.gtype}")
    for c in u.classes:
        fields = "; ".join(f"{'ghost ' if f.ghost else ''}{f.name}: {f.ftype}" for f in c.fields)
        lines.append(f"{p}class {c.name} {{ {fields} }}")
    if u.boundary is not None:
        lines.append(f"{p}boundary {{ " + ", ".join(pretty_expr(a) for a in u.boundary.atoms) + " }")
    for pr in u.predicates:
        lines.append(f"{p}predicate {pr.name}({_params(pr.params)}) = {pretty_expr(pr.body)}")
    for inv in u.invariants:
        lines.append(f"{p}{inv.visibility} invariant {inv.name} = {pretty_expr(inv.formula)}")
    for cp in u.couplings:
        lines.append(f"{p}coupling {cp.name} = {pretty_rel(cp.formula)}")
    for m in u.methods:
        lines.append(f"{p}meth {m.name}({_params(m.params)}) : {m.ret}")
        for r in m.spec.requires:
            lines.append(f"{p}{p}requires {{ {pretty_expr(r)} }}")
        for e in m.spec.ensures:
            lines.append(f"{p}{p}ensures {{ {pretty_expr(e)} }}")
        if m.spec.effects is not None:
            lines.append(f"{p}{p}{pretty_effect(m.spec.effects)}")
        if m.body is not None:
            lines.append(f"{p}=")
            lines.extend(_cmd_lines(m.body, 2))
    for bm in u.bimethods:
        lines.append(f"{p}meth {bm.name}({_params(bm.lparams)} | {_params(bm.rparams)}) : ({bm.lret} | {bm.rret})")
        for r in bm.spec.requires:
            lines.append(f"{p}{p}requires {{ {pretty_rel(r)} }}")
        for e in bm.spec.ensures:
            lines.append(f"{p}{p}ensures {{ {pretty_rel(e)} }}")
        if bm.body is not None:
            lines.append(f"{p}=")
            lines.extend(_bi_lines(bm.body, 2))
    return "\n".join(lines) + "\n"


__all__ = ["pretty_expr", "pretty_rel", "pretty_command", "pretty_biprogram", "pretty_effect", "pretty_unit"]
