"""Recursive-descent parser for ``.wrl`` compilation units."""
from __future__ import annotations

import logging
from typing import List, Optional, Set, Tuple

from ..diagnostics import ParseError, Span
from ..lang import ast as A
from .lexer import Token, tokenize

log = logging.getLogger("relverify.frontend")

_CMD_START = ("skip", "var", "if", "while", "assert", "assume")
_BICMD_START = ("|_", "(", "skip", "var", "if", "while", "assert")
_COMPARE = ("=", "<>", "<", "<=", ">", ">=", "iin", "<<")


class Parser:
    def __init__(self, tokens: List[Token], path: str):
        self.toks = tokens
        self.pos = 0
        self.path = path
        self._expected: Set[str] = set()

    # --------- token helpers ---------

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.pos += 1
        self._expected = set()
        return t

    def at(self, text: str, k: int = 0) -> bool:
        if k == 0:
            self._expected.add(repr(text))
        return self.peek(k).is_(text)

    def at_ident(self, k: int = 0) -> bool:
        if k == 0:
            self._expected.add("identifier")
        return self.peek(k).kind == "ident"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error("unexpected " + self._describe(self.peek()))
        return self.next()

    def ident(self) -> Token:
        if not self.at_ident():
            self.error("unexpected " + self._describe(self.peek()))
        return self.next()

    def error(self, message: str) -> None:
        raise ParseError(message, self.peek().span, frozenset(self._expected))

    @staticmethod
    def _describe(t: Token) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    @property
    def span(self) -> Span:
        return self.peek().span

    # --------- units ---------

    def parse_unit(self) -> A.CompilationUnit:
        sp = self.span
        if self.accept("interface"):
            name = self.ident().text
            self.expect("=")
            unit = A.CompilationUnit("interface", name, path=self.path, span=sp)
        elif self.accept("module"):
            name = self.ident().text
            iface = None
            if self.accept(":"):
                iface = self.ident().text
            imports: List[str] = []
            if self.accept("imports"):
                imports.append(self.ident().text)
                while self.accept(","):
                    imports.append(self.ident().text)
            self.expect("=")
            unit = A.CompilationUnit("module", name, path=self.path, iface=iface, imports=tuple(imports), span=sp)
        elif self.accept("bimodule"):
            name = self.ident().text
            self.expect("(")
            left = self.ident().text
            self.expect("|")
            right = self.ident().text
            self.expect(")")
            self.expect("=")
            unit = A.CompilationUnit("bimodule", name, path=self.path, left=left, right=right, span=sp)
        else:
            self.error("expected a compilation unit")
            raise AssertionError("unreachable")
        return self._decls(unit)

    def _decls(self, unit: A.CompilationUnit) -> A.CompilationUnit:
        parts = {k: [] for k in ("globals", "classes", "invariants", "couplings", "predicates", "methods", "bimethods")}
        boundary: Optional[A.Boundary] = None
        bi = unit.kind == "bimodule"
        while self.peek().kind != "eof":
            t = self.peek()
            if t.is_("interface") or t.is_("module") or t.is_("bimodule"):
                self.error("one compilation unit per file")
            if self.accept(";"):
                continue
            if t.is_("meth"):
                if bi:
                    parts["bimethods"].append(self.parse_bimethod())
                else:
                    m = self.parse_method()
                    if unit.kind == "interface" and m.body is not None:
                        raise ParseError(f"interface method {m.name!r} has a body", m.span)
                    parts["methods"].append(m)
            elif t.is_("coupling"):
                parts["couplings"].append(self.parse_coupling())
            elif bi:
                self.error("bimodules declare only couplings and methods")
            elif t.is_("class"):
                parts["classes"].append(self.parse_class())
            elif t.is_("boundary"):
                if boundary is not None:
                    raise ParseError("duplicate boundary", t.span)
                boundary = self.parse_boundary(unit.name)
            elif t.is_("predicate"):
                parts["predicates"].append(self.parse_predicate())
            elif (t.is_("public") or t.is_("private")) and self.at("invariant", 1):
                parts["invariants"].append(self.parse_invariant())
            elif t.is_("public") or t.is_("private") or t.is_("ghost") or self.at_ident():
                parts["globals"].append(self.parse_global(unit.kind))
            else:
                self.error("unexpected " + self._describe(t))
        return A.CompilationUnit(
            unit.kind, unit.name, path=unit.path, iface=unit.iface, imports=unit.imports,
            left=unit.left, right=unit.right, boundary=boundary, span=unit.span,
            **{k: tuple(v) for k, v in parts.items()},
        )

    def parse_global(self, kind: str) -> A.GlobalDecl:
        sp = self.span
        vis = "public" if kind == "interface" else "private"
        if self.at("public") or self.at("private"):
            vis = self.next().text
        ghost = self.accept("ghost")
        name = self.ident().text
        self.expect(":")
        gtype = self.parse_type()
        return A.GlobalDecl(name, gtype, vis, ghost, span=sp)

    def parse_class(self) -> A.ClassDecl:
        sp = self.expect("class").span
        name = self.ident().text
        self.expect("{")
        fields: List[A.FieldDecl] = []
        while not self.at("}"):
            fsp = self.span
            ghost = self.accept("ghost")
            fname = self.ident().text
            self.expect(":")
            fields.append(A.FieldDecl(fname, self.parse_type(), ghost, span=fsp))
            if not self.accept(";"):
                break
        self.expect("}")
        return A.ClassDecl(name, tuple(fields), span=sp)

    def parse_boundary(self, owner: str) -> A.Boundary:
        sp = self.expect("boundary").span
        self.expect("{")
        atoms: List[A.Expr] = []
        if not self.at("}"):
            atoms.append(self.parse_atom_target())
            while self.accept(","):
                atoms.append(self.parse_atom_target())
        self.expect("}")
        return A.Boundary(owner, tuple(atoms), span=sp)

    def parse_invariant(self) -> A.InvariantDecl:
        sp = self.span
        vis = self.next().text
        self.expect("invariant")
        name = self.ident().text
        self.expect("=")
        return A.InvariantDecl(name, vis, self.parse_expr(), span=sp)

    def parse_coupling(self) -> A.CouplingDecl:
        sp = self.expect("coupling").span
        name = self.ident().text
        self.expect("=")
        return A.CouplingDecl(name, self.parse_rel(), span=sp)

    def parse_predicate(self) -> A.PredicateDecl:
        sp = self.expect("predicate").span
        name = self.ident().text
        self.expect("(")
        params = self.parse_params(")")
        self.expect(")")
        self.expect("=")
        return A.PredicateDecl(name, params, self.parse_expr(), span=sp)

    def parse_params(self, stop: str) -> Tuple[A.Param, ...]:
        out: List[A.Param] = []
        if self.at(stop):
            return ()
        while True:
            sp = self.span
            name = self.ident().text
            self.expect(":")
            out.append(A.Param(name, self.parse_type(), span=sp))
            if not self.accept(","):
                return tuple(out)

    def parse_type(self) -> A.Type:
        return A.Type(self.ident().text)

    def parse_method(self) -> A.MethodDecl:
        sp = self.expect("meth").span
        name = self.ident().text
        self.expect("(")
        params = self.parse_params(")")
        self.expect(")")
        ret = A.UNIT
        if self.accept(":"):
            ret = self.parse_type()
        requires: List[A.Expr] = []
        ensures: List[A.Expr] = []
        effects: Optional[A.Effect] = None
        while True:
            if self.accept("requires"):
                requires.append(self._braced(self.parse_expr))
            elif self.accept("ensures"):
                ensures.append(self._braced(self.parse_expr))
            elif self.at("effects"):
                if effects is not None:
                    self.error("duplicate effects clause")
                effects = self.parse_effects()
            else:
                break
        body = None
        if self.accept("="):
            body = self.parse_cmdseq()
        spec = A.Spec(tuple(requires), tuple(ensures), effects, span=sp)
        return A.MethodDecl(name, params, ret, spec, body, span=sp)

    def parse_bimethod(self) -> A.BiMethodDecl:
        sp = self.expect("meth").span
        name = self.ident().text
        self.expect("(")
        lparams = self.parse_params("|")
        self.expect("|")
        rparams = self.parse_params(")")
        self.expect(")")
        lret = rret = A.UNIT
        if self.accept(":"):
            if self.accept("("):
                lret = self.parse_type()
                self.expect("|")
                rret = self.parse_type()
                self.expect(")")
            else:
                lret = rret = self.parse_type()
        requires: List[A.RelFormula] = []
        ensures: List[A.RelFormula] = []
        while True:
            if self.accept("requires"):
                requires.append(self._braced(self.parse_rel))
            elif self.accept("ensures"):
                ensures.append(self._braced(self.parse_rel))
            else:
                break
        body = None
        if self.accept("="):
            body = self.parse_biseq()
        return A.BiMethodDecl(
            name, lparams, rparams, lret, rret, A.RelSpec(tuple(requires), tuple(ensures), span=sp), body, span=sp
        )

    def _braced(self, fn):
        self.expect("{")
        out = fn()
        self.expect("}")
        return out

    def parse_effects(self) -> A.Effect:
        sp = self.expect("effects").span
        self.expect("{")
        atoms: List[A.EffectAtom] = []
        while not self.at("}"):
            if not (self.at("rd") or self.at("rw")):
                self.error("expected an effect group")
            mode = self.next().text
            while True:
                asp = self.span
                atoms.append(A.EffectAtom(mode, self.parse_atom_target(), span=asp))
                if not self.accept(","):
                    break
            if not self.accept(";"):
                break
        self.expect("}")
        return A.Effect(tuple(atoms), span=sp)

    def parse_atom_target(self) -> A.Expr:
        sp = self.span
        e = self.parse_postfix()
        if isinstance(e, (A.Var, A.Image)):
            return e
        raise ParseError("effect atom must be a variable, alloc, or an image G`f", sp)

    # --------- commands ---------

    def starts_cmd(self) -> bool:
        t = self.peek()
        if any(t.is_(k) for k in _CMD_START):
            return True
        # `name :` at unit level starts a declaration, not a command
        return t.kind == "ident" and not self.peek(1).is_(":")

    def parse_cmdseq(self) -> A.Command:
        items = [self.parse_cmd()]
        while self.accept(";"):
            if not self.starts_cmd():
                break
            items.append(self.parse_cmd())
        return items[0] if len(items) == 1 else A.Seq(tuple(items), span=items[0].span)

    def parse_cmd(self) -> A.Command:
        sp = self.span
        if self.accept("skip"):
            return A.Skip(span=sp)
        if self.accept("var"):
            ghost = self.accept("ghost")
            name = self.ident().text
            self.expect(":")
            vtype = self.parse_type()
            self.expect("in")
            return A.VarBlock(name, vtype, self.parse_cmdseq(), ghost, span=sp)
        if self.accept("if"):
            cond = self.parse_expr()
            self.expect("then")
            then = self.parse_cmdseq()
            orelse: A.Command = A.Skip(span=sp)
            if self.accept("else"):
                orelse = self.parse_cmdseq()
            self.expect("end")
            return A.If(cond, then, orelse, span=sp)
        if self.accept("while"):
            cond = self.parse_expr()
            self.expect("do")
            invs: List[A.Expr] = []
            while self.accept("invariant"):
                invs.append(self._braced(self.parse_expr))
            body = self.parse_cmdseq()
            self.expect("done")
            return A.While(cond, tuple(invs), body, span=sp)
        if self.accept("assert"):
            return A.Assert(self._braced(self.parse_expr), span=sp)
        if self.accept("assume"):
            return A.Assume(self._braced(self.parse_expr), span=sp)
        name = self.ident().text
        if self.accept("("):
            args = self.parse_args()
            return A.CallCmd(name, args, span=sp)
        if self.at(".") and not self.peek().space_after and self.at_ident(1):
            self.next()
            fld = self.ident().text
            self.expect(":=")
            return A.FieldAssign(name, fld, self.parse_expr(), span=sp)
        self.expect(":=")
        if self.accept("new"):
            return A.New(name, self.ident().text, span=sp)
        return A.Assign(name, self.parse_expr(), span=sp)

    def parse_args(self) -> Tuple[A.Expr, ...]:
        args = self._arg_list(")")
        self.expect(")")
        return args

    def _arg_list(self, stop: str) -> Tuple[A.Expr, ...]:
        args: List[A.Expr] = []
        if not self.at(stop):
            args.append(self.parse_expr())
            while self.accept(","):
                args.append(self.parse_expr())
        return tuple(args)

    # --------- biprograms ---------

    def starts_bicmd(self) -> bool:
        return any(self.peek().is_(k) for k in _BICMD_START)

    def parse_biseq(self) -> A.Biprogram:
        items = [self.parse_bicmd()]
        while self.accept(";"):
            if not self.starts_bicmd():
                break
            items.append(self.parse_bicmd())
        return items[0] if len(items) == 1 else A.BSeq(tuple(items), span=items[0].span)

    def _aligned_call(self, sp: Span) -> Optional[A.BCall]:
        """``m(a | b)`` or ``x | y := m(a | b)`` up to the closing ``_|``.

        Returns None, with the position restored, when the brackets hold
        ordinary code.
        """
        mark = self.pos
        try:
            ltarget = rtarget = None
            if self.at_ident() and self.at("|", 1):
                ltarget = self.ident().text
                self.expect("|")
                rtarget = self.ident().text
                self.expect(":=")
            name = self.ident().text
            self.expect("(")
            largs = self._arg_list("|")
            self.expect("|")
            rargs = self._arg_list(")")
            self.expect(")")
            self.expect("_|")
            return A.BCall(name, largs, rargs, ltarget, rtarget, span=sp)
        except ParseError:
            self.pos = mark
            return None

    def parse_bicmd(self) -> A.Biprogram:
        sp = self.span
        if self.accept("|_"):
            call = self._aligned_call(sp)
            if call is not None:
                return call
            cmd = self.parse_cmdseq()
            self.expect("_|")
            return A.BSync(cmd, span=sp)
        if self.accept("("):
            left = self.parse_cmdseq()
            self.expect("|")
            right = self.parse_cmdseq()
            self.expect(")")
            return A.BSplit(left, right, span=sp)
        if self.accept("skip"):
            return A.BSync(A.Skip(span=sp), span=sp)
        if self.accept("var"):
            lname = self.ident().text
            self.expect(":")
            ltype = self.parse_type()
            self.expect("|")
            rname = self.ident().text
            self.expect(":")
            rtype = self.parse_type()
            self.expect("in")
            return A.BVar(lname, ltype, rname, rtype, self.parse_biseq(), span=sp)
        if self.accept("if"):
            lcond = self.parse_expr()
            self.expect("|")
            rcond = self.parse_expr()
            self.expect("then")
            then = self.parse_biseq()
            orelse: A.Biprogram = A.BSync(A.Skip(span=sp), span=sp)
            if self.accept("else"):
                orelse = self.parse_biseq()
            self.expect("end")
            return A.BIf(lcond, rcond, then, orelse, span=sp)
        if self.accept("while"):
            lcond = self.parse_expr()
            self.expect("|")
            rcond = self.parse_expr()
            lguard = rguard = None
            if self.accept("."):
                lguard = self.parse_rel()
                self.expect("|")
                rguard = self.parse_rel()
            self.expect("do")
            invs: List[A.RelFormula] = []
            while self.accept("invariant"):
                invs.append(self._braced(self.parse_rel))
            body = self.parse_biseq()
            self.expect("done")
            return A.BWhile(lcond, rcond, lguard, rguard, tuple(invs), body, span=sp)
        if self.accept("assert"):
            return A.BAssert(self._braced(self.parse_rel), span=sp)
        self.error("expected a biprogram command")
        raise AssertionError("unreachable")

    # --------- expressions ---------

    def parse_expr(self) -> A.Expr:
        left = self.parse_imp()
        while self.at("<->"):
            sp = self.next().span
            left = A.Binary("<->", left, self.parse_imp(), span=sp)
        return left

    def parse_imp(self) -> A.Expr:
        left = self.parse_or()
        if self.at("->"):
            sp = self.next().span
            return A.Binary("->", left, self.parse_imp(), span=sp)
        return left

    def parse_or(self) -> A.Expr:
        left = self.parse_and()
        while self.at("\\/"):
            sp = self.next().span
            left = A.Binary("\\/", left, self.parse_and(), span=sp)
        return left

    def parse_and(self) -> A.Expr:
        left = self.parse_not()
        while self.at("/\\"):
            sp = self.next().span
            left = A.Binary("/\\", left, self.parse_not(), span=sp)
        return left

    def parse_not(self) -> A.Expr:
        if self.at("not"):
            sp = self.next().span
            return A.Unary("not", self.parse_not(), span=sp)
        return self.parse_cmp()

    def parse_cmp(self) -> A.Expr:
        first = self.parse_add()
        links: List[A.Expr] = []
        left = first
        while any(self.at(op) for op in _COMPARE):
            tok = self.next()
            right = self.parse_add()
            links.append(A.Binary(tok.text, left, right, span=tok.span))
            left = right
        if not links:
            return first
        out = links[0]
        for link in links[1:]:
            out = A.Binary("/\\", out, link, span=link.span)
        return out

    def parse_add(self) -> A.Expr:
        left = self.parse_mul()
        while any(self.at(op) for op in ("+", "-", "++", "--")):
            tok = self.next()
            left = A.Binary(tok.text, left, self.parse_mul(), span=tok.span)
        return left

    def parse_mul(self) -> A.Expr:
        left = self.parse_unary()
        while any(self.at(op) for op in ("*", "/", "%", "^^")):
            tok = self.next()
            left = A.Binary(tok.text, left, self.parse_unary(), span=tok.span)
        return left

    def parse_unary(self) -> A.Expr:
        if self.at("-"):
            sp = self.next().span
            t = self.peek()
            if t.kind == "int":
                self.next()
                return A.IntLit(-int(t.text), span=sp)
            return A.Unary("neg", self.parse_unary(), span=sp)
        return self.parse_postfix()

    def parse_postfix(self) -> A.Expr:
        e = self.parse_atom()
        while True:
            t = self.peek()
            if t.is_(".") and not t.space_after and self.at_ident(1):
                self.next()
                f = self.ident()
                e = A.FieldRead(e, f.text, span=f.span)
            elif t.is_("`"):
                self.next()
                f = self.ident()
                e = A.Image(e, f.text, span=f.span)
            else:
                return e

    def parse_atom(self) -> A.Expr:
        t = self.peek()
        sp = t.span
        if t.kind == "int":
            self.next()
            return A.IntLit(int(t.text), span=sp)
        if self.accept("true"):
            return A.BoolLit(True, span=sp)
        if self.accept("false"):
            return A.BoolLit(False, span=sp)
        if self.accept("null"):
            return A.NullLit(span=sp)
        if self.accept("nil"):
            return A.NilLit(span=sp)
        if self.accept("{"):
            elems: List[A.Expr] = []
            if not self.at("}"):
                elems.append(self.parse_expr())
                while self.accept(","):
                    elems.append(self.parse_expr())
            self.expect("}")
            return A.RegionLit(tuple(elems), span=sp)
        if self.accept("("):
            e = self.parse_expr()
            self.expect(")")
            return e
        if self.accept("old"):
            self.expect("(")
            e = self.parse_expr()
            self.expect(")")
            return A.Old(e, span=sp)
        if self.at("forall") or self.at("exists"):
            kind = self.next().text
            var = self.ident().text
            self.expect(":")
            vtype = self.parse_type()
            dom = None
            if self.accept("iin"):
                dom = self.parse_add()
            self.expect(".")
            return A.Quant(kind, var, vtype, dom, self.parse_expr(), span=sp)
        if self.at_ident():
            name = self.next().text
            if self.accept("("):
                return A.Call(name, self.parse_args(), span=sp)
            return A.Var(name, span=sp)
        self.error("expected an expression, got " + self._describe(t))
        raise AssertionError("unreachable")

    # --------- relational formulas ---------

    def parse_rel(self) -> A.RelFormula:
        left = self.parse_rimp()
        while self.at("<->"):
            sp = self.next().span
            left = A.RBin("<->", left, self.parse_rimp(), span=sp)
        return left

    def parse_rimp(self) -> A.RelFormula:
        left = self.parse_ror()
        if self.at("->"):
            sp = self.next().span
            return A.RBin("->", left, self.parse_rimp(), span=sp)
        return left

    def parse_ror(self) -> A.RelFormula:
        left = self.parse_rand()
        while self.at("\\/"):
            sp = self.next().span
            left = A.RBin("\\/", left, self.parse_rand(), span=sp)
        return left

    def parse_rand(self) -> A.RelFormula:
        left = self.parse_rnot()
        while self.at("/\\"):
            sp = self.next().span
            left = A.RBin("/\\", left, self.parse_rnot(), span=sp)
        return left

    def parse_rnot(self) -> A.RelFormula:
        if self.at("not"):
            sp = self.next().span
            return A.RNot(self.parse_rnot(), span=sp)
        return self.parse_ratom()

    def parse_ratom(self) -> A.RelFormula:
        sp = self.span
        if self.accept("Both"):
            self.expect("(")
            f = self.parse_expr()
            self.expect(")")
            return A.BothF(f, span=sp)
        if self.accept("*<|"):
            f = self.parse_expr()
            self.expect("*<]")
            return A.LeftF(f, span=sp)
        if self.accept("[>"):
            f = self.parse_expr()
            self.expect("|>")
            return A.RightF(f, span=sp)
        if (self.at("true") or self.at("false")) and not self.at("=:=", 1):
            return A.RBool(self.next().text == "true", span=sp)
        if self.at("forall") or self.at("exists"):
            kind = self.next().text
            lvar, ltype, ldom = self._binder()
            rvar, rtype, rdom = lvar, ltype, ldom
            if self.accept("|"):
                rvar, rtype, rdom = self._binder()
            self.expect(".")
            return A.RQuant(kind, lvar, ltype, ldom, rvar, rtype, rdom, self.parse_rel(), span=sp)
        if self.at("("):
            mark = self.pos
            try:
                self.next()
                rf = self.parse_rel()
                self.expect(")")
                if not self.at("=:="):
                    return rf
            except ParseError:
                pass
            self.pos = mark
        left = self.parse_add()
        self.expect("=:=")
        right = self.parse_add()
        return A.Agree(left, right, span=sp)

    def _binder(self) -> Tuple[str, A.Type, Optional[A.Expr]]:
        name = self.ident().text
        self.expect(":")
        t = self.parse_type()
        dom = None
        if self.accept("iin"):
            dom = self.parse_add()
        return name, t, dom


def parse(text: str, path: str = "<input>") -> A.CompilationUnit:
    """Parse one compilation unit; raises ParseError with position and expected tokens."""
    p = Parser(tokenize(text, path), path)
    unit = p.parse_unit()
    log.debug("parsed %s %s from %s", unit.kind, unit.name, path)
    return unit


def parse_expr(text: str, path: str = "<expr>") -> A.Expr:
    p = Parser(tokenize(text, path), path)
    e = p.parse_expr()
    if p.peek().kind != "eof":
        p.error("trailing input")
    return e


def parse_rel(text: str, path: str = "<expr>") -> A.RelFormula:
    p = Parser(tokenize(text, path), path)
    rf = p.parse_rel()
    if p.peek().kind != "eof":
        p.error("trailing input")
    return rf


def parse_command(text: str, path: str = "<cmd>") -> A.Command:
    p = Parser(tokenize(text, path), path)
    c = p.parse_cmdseq()
    if p.peek().kind != "eof":
        p.error("trailing input")
    return c


def parse_biprogram(text: str, path: str = "<biprogram>") -> A.Biprogram:
    p = Parser(tokenize(text, path), path)
    b = p.parse_biseq()
    if p.peek().kind != "eof":
        p.error("trailing input")
    return b


__all__ = ["Parser", "parse", "parse_expr", "parse_rel", "parse_command", "parse_biprogram"]
