from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridaudit import formula as fm
from gridaudit.model import CellAddress


def rc(text: str) -> fm.Expr:
    return fm.parse_expression(text)


# ---------------------------------------------------------------------------
# Parsing shapes


def test_parse_requires_equals_prefix():
    with pytest.raises(fm.ParseError):
        fm.parse_formula("1+2")
    f = fm.parse_formula("=1+2")
    assert f.source == "=1+2"


def test_number_and_text_literals():
    assert rc("42") == fm.NumberLit(42.0)
    assert rc("3.14") == fm.NumberLit(3.14)
    assert rc("1e3") == fm.NumberLit(1000.0)
    assert rc('"he said ""hi"""') == fm.TextLit('he said "hi"')
    assert rc('""') == fm.TextLit("")


def test_bool_literals_case_insensitive():
    assert rc("TRUE") == fm.BoolLit(True)
    assert rc("false") == fm.BoolLit(False)
    assert rc("True") == fm.BoolLit(True)


@pytest.mark.parametrize("code", fm.ERROR_CODES)
def test_error_literals(code):
    assert rc(code) == fm.ErrorLit(code)


def test_na_error_not_cut_short():
    # the #N/A token must win over any shorter prefix match
    assert rc("ISNA(#N/A)") == fm.Call("ISNA", (fm.ErrorLit("#N/A"),))


def test_r1c1_reference_shapes():
    assert rc("R2C3") == fm.CellRef(fm.RefComponent.abs(2), fm.RefComponent.abs(3))
    assert rc("RC[-1]") == fm.CellRef(fm.RefComponent.rel(0), fm.RefComponent.rel(-1))
    assert rc("R[-2]C") == fm.CellRef(fm.RefComponent.rel(-2), fm.RefComponent.rel(0))
    assert rc("R[3]C[4]") == fm.CellRef(fm.RefComponent.rel(3), fm.RefComponent.rel(4))
    rng = rc("R5C3:R5C7")
    assert isinstance(rng, fm.RangeRef)
    assert rng.start.row == fm.RefComponent.abs(5)
    assert rng.end.col == fm.RefComponent.abs(7)


def test_sheet_qualified_reference():
    ref = rc("Forecast!R10C1")
    assert ref == fm.CellRef(fm.RefComponent.abs(10), fm.RefComponent.abs(1), "Forecast")


def test_name_vs_reference_lexing():
    assert rc("Tax_Rate") == fm.NameRef("Tax_Rate")
    assert fm.looks_like_reference("R2C3")
    assert fm.looks_like_reference("RC")
    assert fm.looks_like_reference("B2")
    assert not fm.looks_like_reference("Growth_Rate")
    assert not fm.looks_like_reference("R2C3x")


def test_call_names_uppercase():
    node = rc("sum(R1C1:R2C1)")
    assert isinstance(node, fm.Call)
    assert node.name == "SUM"


def test_a1_parsing_is_origin_relative():
    origin = CellAddress(9, 3)
    ast = fm.parse_expression("C7+C8", style=fm.Style.A1, origin=origin)
    assert fm.normal_form(ast) == "=R[-2]C+R[-1]C"
    absolute = fm.parse_expression("$B$2", style=fm.Style.A1, origin=origin)
    assert absolute == fm.CellRef(fm.RefComponent.abs(2), fm.RefComponent.abs(2))
    mixed = fm.parse_expression("B$2", style=fm.Style.A1, origin=origin)
    assert mixed == fm.CellRef(fm.RefComponent.abs(2), fm.RefComponent.rel(-1))


def test_a1_requires_origin():
    with pytest.raises(fm.ParseError):
        fm.parse_expression("A1", style=fm.Style.A1)


def test_formula_from_paper_normal_form():
    f = fm.parse_formula("=C7+C8", style=fm.Style.A1, origin=CellAddress(9, 3))
    assert fm.normal_form(f.ast) == "=R[-2]C+R[-1]C"
    # the copy one row down reads =C8+C9 but shares the same normal form
    g = fm.parse_formula("=C8+C9", style=fm.Style.A1, origin=CellAddress(10, 3))
    assert fm.normal_form(g.ast) == "=R[-2]C+R[-1]C"


# ---------------------------------------------------------------------------
# Precedence and operators


def test_precedence_unary_minus_vs_power():
    # -2^2 groups as (-2)^2
    ast = rc("-2^2")
    assert ast == fm.Binary("^", fm.Unary("negate", fm.NumberLit(2.0)), fm.NumberLit(2.0))


def test_precedence_concat_below_add():
    ast = rc('"a"&1+2')
    assert ast == fm.Binary(
        "&", fm.TextLit("a"), fm.Binary("+", fm.NumberLit(1.0), fm.NumberLit(2.0))
    )


def test_precedence_compare_lowest():
    ast = rc("1+2=3")
    assert ast == fm.Binary(
        "=", fm.Binary("+", fm.NumberLit(1.0), fm.NumberLit(2.0)), fm.NumberLit(3.0)
    )


def test_percent_literal_folds():
    assert rc("10%") == fm.NumberLit(0.10, percent=True)
    assert rc("15%") == fm.NumberLit(0.15, percent=True)
    assert rc("-10%") == fm.Unary("negate", fm.NumberLit(0.10, percent=True))


def test_percent_of_parenthesized_number_stays_operator():
    assert rc("(5)%") == fm.Unary("percent", fm.NumberLit(5.0))
    assert fm.render_expression(fm.Unary("percent", fm.NumberLit(5.0))) == "(5)%"


def test_percent_binds_tighter_than_unary():
    ast = rc("-R1C1%")
    assert ast == fm.Unary(
        "negate",
        fm.Unary(
            "percent", fm.CellRef(fm.RefComponent.abs(1), fm.RefComponent.abs(1))
        ),
    )


# ---------------------------------------------------------------------------
# Rendering


def test_render_minimal_parens():
    assert fm.render_formula(rc("1+2*3")) == "=1+2*3"
    assert fm.render_formula(rc("(1+2)*3")) == "=(1+2)*3"
    assert fm.render_formula(rc("(1+Growth_Rate)*Prior_Year")) == "=(1+Growth_Rate)*Prior_Year"
    assert fm.render_formula(rc("1-(2-3)")) == "=1-(2-3)"
    assert fm.render_formula(rc("(1-2)-3")) == "=1-2-3"
    assert fm.render_formula(rc("2^(3^4)")) == "=2^(3^4)"
    assert fm.render_formula(rc("(2^3)^4")) == "=2^3^4"


def test_render_a1_styles():
    origin = CellAddress(9, 3)
    ast = rc("R[-2]C+R[-1]C")
    assert fm.render_formula(ast, style=fm.Style.A1, origin=origin) == "=C7+C8"


def test_render_a1_off_grid_is_an_error():
    ast = rc("R[-2]C")
    with pytest.raises(fm.RenderError):
        fm.render_formula(ast, style=fm.Style.A1, origin=CellAddress(1, 1))


def test_number_text_integral():
    assert fm.number_text(12000.0) == "12000"
    assert fm.number_text(3.5) == "3.5"
    assert fm.number_text(0.0) == "0"


def test_normal_form_strips_origin():
    a = fm.parse_formula("=A1+B1", style=fm.Style.A1, origin=CellAddress(2, 3))
    assert fm.normal_form(a.ast) == "=R[-1]C[-2]+R[-1]C[-1]"


# ---------------------------------------------------------------------------
# Translation


def test_translate_keeps_offsets():
    ast = rc("R[-1]C+R1C1")
    moved = fm.translate(ast, CellAddress(5, 5), CellAddress(9, 9))
    assert moved == ast


def test_translate_off_grid_becomes_ref_error():
    ast = rc("R[-1]C")
    moved = fm.translate(ast, CellAddress(5, 5), CellAddress(1, 5))
    assert moved == fm.ErrorLit("#REF!")


def test_translate_range_replaced_whole():
    ast = rc("SUM(R[-2]C:R[-1]C)")
    moved = fm.translate(ast, CellAddress(5, 5), CellAddress(2, 5))
    assert moved == fm.Call("SUM", (fm.ErrorLit("#REF!"),))


# ---------------------------------------------------------------------------
# Parse errors


@pytest.mark.parametrize(
    "bad",
    ["1+", "(1", '"open', "#BOGUS!", "1 2", "SUM(1,", "R1C1:", "Sheet!", "%5"],
)
def test_parse_rejects_malformed(bad):
    with pytest.raises(fm.ParseError):
        rc(bad)


def test_parse_error_carries_position():
    try:
        rc("1+*2")
    except fm.ParseError as exc:
        assert exc.position == 2
    else:
        raise AssertionError("expected a parse error")


# ---------------------------------------------------------------------------
# Property tests: render/parse round trip


def _positive_floats():
    return (
        st.floats(min_value=0.0, max_value=1e12, allow_nan=False, allow_infinity=False)
        .filter(lambda v: not (v == 0.0 and math.copysign(1.0, v) < 0))
    )


_names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_.]{0,8}", fullmatch=True).filter(
    lambda s: not fm.looks_like_reference(s) and s.upper() not in ("TRUE", "FALSE")
)

_components = st.one_of(
    st.integers(min_value=1, max_value=500).map(fm.RefComponent.abs),
    st.integers(min_value=-19, max_value=19).map(fm.RefComponent.rel),
)

_cell_refs = st.builds(fm.CellRef, _components, _components)


def _range_refs():
    return st.builds(
        lambda a, b: fm.RangeRef(a, b), _cell_refs, _cell_refs
    )


_leaves = st.one_of(
    st.builds(fm.NumberLit, _positive_floats()),
    st.builds(lambda v: fm.NumberLit(v, percent=True), _positive_floats()),
    st.builds(fm.TextLit, st.text(alphabet=st.characters(codec="ascii", exclude_characters="\x00\n\r"), max_size=12)),
    st.builds(fm.BoolLit, st.booleans()),
    st.sampled_from([fm.ErrorLit(c) for c in fm.ERROR_CODES]),
    st.builds(fm.NameRef, _names),
    _cell_refs,
    _range_refs(),
)


def _compound(children):
    binary = st.builds(
        fm.Binary,
        st.sampled_from(["+", "-", "*", "/", "^", "&", "=", "<>", "<", "<=", ">", ">="]),
        children,
        children,
    )
    unary = st.builds(fm.Unary, st.sampled_from(["negate", "plus", "percent"]), children)
    call = st.builds(
        fm.Call,
        st.sampled_from(["SUM", "IF", "MIN", "MAX", "COUNTA", "ABS"]),
        st.lists(children, min_size=1, max_size=3).map(tuple),
    )
    return st.one_of(binary, unary, call)


_asts = st.recursive(_leaves, _compound, max_leaves=12)


@given(_asts)
@settings(max_examples=300, deadline=None)
def test_r1c1_render_parse_round_trip(ast):
    rendered = fm.render_formula(ast)
    reparsed = fm.parse_formula(rendered)
    assert reparsed.ast == ast


@given(_asts)
@settings(max_examples=200, deadline=None)
def test_a1_render_parse_round_trip(ast):
    origin = CellAddress(20, 20)
    rendered = fm.render_formula(ast, style=fm.Style.A1, origin=origin)
    reparsed = fm.parse_formula(rendered, style=fm.Style.A1, origin=origin)
    assert reparsed.ast == ast


@given(_asts, st.integers(min_value=20, max_value=60), st.integers(min_value=20, max_value=60))
@settings(max_examples=200, deadline=None)
def test_normal_form_is_origin_free(ast, row, col):
    # translating between in-grid origins never changes the normal form
    moved = fm.translate(ast, CellAddress(40, 40), CellAddress(row, col))
    assert fm.normal_form(moved) == fm.normal_form(ast)


@given(_asts)
@settings(max_examples=200, deadline=None)
def test_normal_form_equals_r1c1_render(ast):
    assert fm.normal_form(ast) == fm.render_formula(ast)
