import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zkvmfuzz import il
from zkvmfuzz.il import (
    MASK32,
    BoolLit,
    Call,
    Circuit,
    Cmp,
    IntLit,
    IntOp,
    Ite,
    TypeCheckError,
    Ty,
    Var,
    eval_circuit,
    eval_custom,
    eval_expr,
    parse_circuit,
    parse_expr,
    render_circuit,
    render_expr,
    typecheck,
    typecheck_circuit,
)

ABC = frozenset({"a", "b", "c"})


def fig1_circuit() -> Circuit:
    return Circuit(
        inputs=(("a", "public"), ("b", "public"), ("c", "public")),
        output_expr=IntOp("rem", Var("a"), IntOp("add", Var("b"), Var("c"))),
    )


# ---------------------------------------------------------------- typecheck

def test_compare_yields_bool():
    assert typecheck(Cmp("eq", Var("a"), Var("b")), ABC) is Ty.BOOL


def test_int_op_rejects_bool_operand():
    with pytest.raises(TypeCheckError):
        typecheck(IntOp("add", Var("a"), BoolLit(True)), ABC)


def test_ite_yields_int():
    expr = Ite(Cmp("lt", Var("a"), Var("b")), Var("a"), Var("b"))
    assert typecheck(expr, ABC) is Ty.INT


def test_undeclared_variable_named_in_error():
    with pytest.raises(TypeCheckError, match="undeclared input 'z'"):
        typecheck(Var("z"), ABC)


def test_pow_exponent_must_be_literal_2_or_3():
    assert typecheck(IntOp("pow", Var("a"), IntLit(2)), ABC) is Ty.INT
    with pytest.raises(TypeCheckError):
        typecheck(IntOp("pow", Var("a"), IntLit(4)), ABC)
    with pytest.raises(TypeCheckError):
        typecheck(IntOp("pow", Var("a"), Var("b")), ABC)


# ---------------------------------------------------------------- evaluation

def test_rem_of_sum():
    # 7 mod (3 + 2) = 7 mod 5 = 2, by hand.
    expr = IntOp("rem", Var("a"), IntOp("add", Var("b"), Var("c")))
    assert eval_expr(expr, {"a": 7, "b": 3, "c": 2}) == 2


@given(st.integers(0, MASK32))
def test_xor_self_is_zero(x):
    assert eval_expr(IntOp("xor", Var("x"), Var("x")), {"x": x}) == 0


def test_divide_by_zero_conventions():
    # RV32 divu/remu convention: x/0 = all-ones, x%0 = x.
    assert eval_expr(IntOp("div", IntLit(5), IntLit(0)), {}) == 0xFFFFFFFF
    assert eval_expr(IntOp("rem", IntLit(5), IntLit(0)), {}) == 5


def test_wrapping_arithmetic():
    assert eval_expr(IntOp("add", IntLit(MASK32), IntLit(1)), {}) == 0
    assert eval_expr(IntOp("sub", IntLit(0), IntLit(1)), {}) == MASK32
    assert eval_expr(IntOp("mul", IntLit(0x80000000), IntLit(2)), {}) == 0


def test_pow_is_repeated_wrapping_mul():
    assert eval_expr(IntOp("pow", IntLit(7), IntLit(2)), {}) == 49
    assert eval_expr(IntOp("pow", IntLit(0x10000), IntLit(2)), {}) == 0
    assert eval_expr(IntOp("pow", IntLit(5), IntLit(3)), {}) == 125


def mulhsu_oracle(a: int, b: int) -> int:
    # Independent route: exact 64-bit product of (signed a) x (unsigned b).
    sa = a - (1 << 32) if a >= (1 << 31) else a
    return ((sa * b) >> 32) & MASK32


def test_mulhsu_against_product_oracle():
    assert eval_custom("mulhsu", [0xFFFFFFFF, 2]) == mulhsu_oracle(0xFFFFFFFF, 2)
    assert eval_custom("mulhsu", [0xFFFFFFFF, 2]) == 0xFFFFFFFF


@given(st.integers(0, MASK32))
def test_mulhsu_zero_annihilates(x):
    assert eval_custom("mulhsu", [0, x]) == 0


@given(st.integers(0, MASK32), st.integers(0, MASK32))
def test_mulhsu_matches_oracle(a, b):
    assert eval_custom("mulhsu", [a, b]) == mulhsu_oracle(a, b)


def test_sltu():
    assert eval_custom("sltu", [3, 7]) == 1
    assert eval_custom("sltu", [7, 3]) == 0
    assert eval_custom("sltu", [3, 3]) == 0


def test_signed_division_edge_cases():
    assert eval_custom("divs", [7, 0]) == MASK32
    assert eval_custom("rems", [7, 0]) == 7
    # INT_MIN / -1 overflows; quotient is the dividend, remainder zero.
    assert eval_custom("divs", [0x80000000, MASK32]) == 0x80000000
    assert eval_custom("rems", [0x80000000, MASK32]) == 0
    # -7 / 2 truncates toward zero: q = -3, r = -1.
    minus7 = (-7) & MASK32
    assert eval_custom("divs", [minus7, 2]) == (-3) & MASK32
    assert eval_custom("rems", [minus7, 2]) == (-1) & MASK32


def test_shifts_use_low_five_bits():
    assert eval_custom("sll", [1, 33]) == 2
    assert eval_custom("srl", [0x80000000, 31]) == 1
    assert eval_custom("sra", [0x80000000, 31]) == MASK32


# ---------------------------------------------------------------- circuits

def test_fig1_circuit_evaluates():
    assert eval_circuit(fig1_circuit(), [7, 3, 2]) == 2


def test_identity_circuit():
    circ = Circuit((("x", "public"),), Var("x"))
    assert eval_circuit(circ, [41]) == 41


def test_mulhsu_circuit():
    circ = Circuit(
        (("a", "public"), ("b", "public"), ("c", "public")),
        Call("mulhsu", (Var("a"), IntOp("add", Var("b"), Var("c")))),
    )
    assert eval_circuit(circ, [0xFFFFFFFF, 1, 1]) == 0xFFFFFFFF


def test_arity_mismatch():
    with pytest.raises(ValueError):
        eval_circuit(fig1_circuit(), [1, 2])


def test_duplicate_inputs_rejected():
    circ = Circuit((("a", "public"), ("a", "public")), Var("a"))
    with pytest.raises(TypeCheckError):
        typecheck_circuit(circ)


def test_bool_output_rejected():
    circ = Circuit((("a", "public"),), Cmp("eq", Var("a"), IntLit(0)))
    with pytest.raises(TypeCheckError):
        typecheck_circuit(circ)


# ---------------------------------------------------------------- text format

def test_render_fig1():
    text = render_circuit(fig1_circuit())
    assert text == "inputs : a, b, c\noutputs: out\nout = (a % (b + c))\n"


def test_parse_render_roundtrip_fig1():
    circ = fig1_circuit()
    assert parse_circuit(render_circuit(circ)) == circ


def test_private_visibility_suffix():
    circ = Circuit((("a", "private"), ("b", "public")), IntOp("add", Var("a"), Var("b")))
    text = render_circuit(circ)
    assert "a#priv" in text
    assert parse_circuit(text) == circ


def test_parse_precedence_without_parens():
    assert parse_expr("a + b * c") == IntOp(
        "add", Var("a"), IntOp("mul", Var("b"), Var("c"))
    )


def test_parse_custom_call():
    assert parse_expr("mulhsu(a, (b + c))") == Call(
        "mulhsu", (Var("a"), IntOp("add", Var("b"), Var("c")))
    )


def test_parse_ternary_and_bools():
    expr = parse_expr("((a < b) ? a : b)")
    assert expr == Ite(Cmp("lt", Var("a"), Var("b")), Var("a"), Var("b"))
    assert parse_expr("T") == BoolLit(True)
    assert parse_expr("(!F)") == il.Not(BoolLit(False))


def test_parse_hex_literal():
    assert parse_expr("0xC0FFEE") == IntLit(0xC0FFEE)
    assert render_expr(IntLit(0xC0FFEE)) == "0xc0ffee"


def test_parse_pattern_atoms():
    assert parse_expr("?a + ?b") == IntOp("add", il.Capture("a"), il.Capture("b"))
    assert parse_expr("?a:bool") == il.Capture("a", Ty.BOOL)
    assert parse_expr("$r:int ^ $r:int") == IntOp(
        "xor", il.Fresh("r", Ty.INT), il.Fresh("r", Ty.INT)
    )


def test_parse_rejects_garbage():
    with pytest.raises(il.ParseError):
        parse_expr("a + + b")
    with pytest.raises(il.ParseError):
        parse_expr("(a + b")
    with pytest.raises(il.ParseError):
        parse_expr("$r")


# ---------------------------------------------------------------- structure

def test_walk_preorder_paths():
    expr = fig1_circuit().output_expr
    nodes = list(il.walk(expr))
    assert nodes[0][0] == ()
    assert [p for p, _ in nodes] == [(), (0,), (1,), (1, 0), (1, 1)]


def test_replace_at():
    expr = fig1_circuit().output_expr
    swapped = il.replace_at(expr, (1,), IntLit(5))
    assert swapped == IntOp("rem", Var("a"), IntLit(5))
    assert il.subexpr_at(swapped, (1,)) == IntLit(5)


@settings(max_examples=50)
@given(st.integers(0, 2**63 - 1))
def test_generated_circuit_roundtrip(seed):
    from zkvmfuzz.gen import GenConfig, generate_circuit

    circ = generate_circuit(seed, GenConfig(max_depth=5, asm_extension=True))
    assert parse_circuit(render_circuit(circ)) == circ


@settings(max_examples=30)
@given(st.integers(0, 2**63 - 1), st.integers(0, 2**32 - 1))
def test_eval_total_and_deterministic(seed, salt):
    import random

    from zkvmfuzz.gen import GenConfig, generate_circuit

    circ = generate_circuit(seed, GenConfig(max_depth=5, asm_extension=True))
    rng = random.Random(salt)
    values = [rng.getrandbits(32) for _ in range(circ.arity)]
    assert eval_circuit(circ, values) == eval_circuit(circ, values)
