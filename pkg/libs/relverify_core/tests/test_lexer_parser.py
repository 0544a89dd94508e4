from __future__ import annotations

from pathlib import Path

import pytest

from relverify.diagnostics import ParseError, Span
from relverify.frontend import parse, parse_biprogram, parse_command, parse_expr, parse_rel, tokenize
from relverify.lang import ast as A
from relverify.lang.pretty import pretty_unit

CORPUS = Path(__file__).resolve().parents[3] / "corpus"


def test_sync_brackets_split_from_identifiers():
    toks = tokenize("|_ g_|")
    assert [t.text for t in toks] == ["|_", "g", "_|", "<eof>"]
    assert [t.kind for t in toks] == ["sym", "ident", "sym", "eof"]


def test_keywords_and_identifiers():
    toks = tokenize("while whilex done")
    assert [t.kind for t in toks] == ["kw", "ident", "kw", "eof"]


def test_comments_are_skipped():
    toks = tokenize("x /* a\n comment */ y")
    assert [t.text for t in toks] == ["x", "y", "<eof>"]
    assert toks[1].span.line == 2


def test_unterminated_comment():
    with pytest.raises(ParseError, match="unterminated comment"):
        tokenize("x /* never closed")


def test_error_position_and_expected_set():
    with pytest.raises(ParseError) as ei:
        parse_command("x :=", path="t.wrl")
    assert ei.value.span == Span("t.wrl", 1, 5)
    assert "identifier" in ei.value.expected
    assert "expected one of" in ei.value.message


def test_missing_done_is_reported():
    with pytest.raises(ParseError) as ei:
        parse_command("while x < 1 do x := x + 1")
    assert "'done'" in ei.value.expected


def test_one_unit_per_file():
    with pytest.raises(ParseError, match="one compilation unit per file"):
        parse("module A =\n  meth m() = skip\nmodule B =\n")


def test_interface_method_body_rejected():
    with pytest.raises(ParseError, match="has a body"):
        parse("interface I =\n  meth m() = skip\n")


def test_negative_literal_folds():
    assert parse_expr("-3") == A.IntLit(-3)
    assert parse_expr("- x") == A.Unary("neg", A.Var("x"))


def test_chained_comparison_is_a_conjunction():
    e = parse_expr("0 <= i < n")
    assert e == A.Binary(
        "/\\",
        A.Binary("<=", A.IntLit(0), A.Var("i")),
        A.Binary("<", A.Var("i"), A.Var("n")),
    )


def test_field_assignment():
    assert parse_command("c.val := 0") == A.FieldAssign("c", "val", A.IntLit(0))


def test_var_block_extends_to_end_of_sequence():
    c = parse_command("var i: int in i := 1; j := i")
    assert isinstance(c, A.VarBlock)
    assert isinstance(c.body, A.Seq) and len(c.body.items) == 2


def test_relational_atoms():
    assert parse_rel("x =:= y") == A.Agree(A.Var("x"), A.Var("y"))
    assert parse_rel("*<| x > 0 *<]") == A.LeftF(A.Binary(">", A.Var("x"), A.IntLit(0)))
    assert parse_rel("[> x > 0 |>") == A.RightF(A.Binary(">", A.Var("x"), A.IntLit(0)))
    assert parse_rel("Both(b)") == A.BothF(A.Var("b"))


def test_guarded_loop():
    b = parse_biprogram("while i < n | j < m . *<| i < j *<] | [> j < i |> do |_ skip _| done")
    assert isinstance(b, A.BWhile)
    assert b.guarded
    assert b.lguard == A.LeftF(parse_expr("i < j"))
    assert b.rguard == A.RightF(parse_expr("j < i"))


def test_aligned_call_with_per_side_arguments():
    b = parse_biprogram("|_ x | y := m(a, 1 | b) _|")
    assert b == A.BCall("m", (A.Var("a"), A.IntLit(1)), (A.Var("b"),), "x", "y")
    assert parse_biprogram("|_ m(a | b) _|") == A.BCall("m", (A.Var("a"),), (A.Var("b"),))
    assert parse_biprogram("|_ m( | ) _|") == A.BCall("m", (), ())
    # without a bar inside the parentheses both sides share the call
    assert parse_biprogram("|_ m(a) _|") == A.BSync(A.CallCmd("m", (A.Var("a"),)))
    assert parse_biprogram("|_ x := m(a) _|") == A.BSync(A.Assign("x", A.Call("m", (A.Var("a"),))))


def test_trailing_input():
    with pytest.raises(ParseError, match="trailing input"):
        parse_expr("x y")


@pytest.mark.parametrize(
    "path", sorted(CORPUS.glob("*/*.wrl")), ids=lambda p: f"{p.parent.name}/{p.name}"
)
def test_pretty_printed_units_parse_back(path: Path):
    u = parse(path.read_text(encoding="utf-8"), str(path))
    assert parse(pretty_unit(u), str(path)) == u
