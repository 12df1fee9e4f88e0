import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circuitbench.symexpr import (
    ExpressionError,
    MissingSymbol,
    NearPole,
    ParseError,
    Polynomial,
    RationalFunc,
    WorkBudget,
    WorkBudgetExceeded,
    eval_numeric,
    format_canonical,
    parse_equation,
    parse_rational,
    poly_div_exact,
    poly_gcd,
    simplify,
    to_rational,
)


def rf(text: str) -> RationalFunc:
    return parse_rational(text)


# ---------------------------------------------------------------------------
# parse_equation
# ---------------------------------------------------------------------------


def test_parse_strips_lhs():
    assert parse_equation("H(s) = 1/(R*C*s + 1)") == parse_equation("1/(R*C*s + 1)")


def test_parse_single_symbol():
    tree = parse_equation("s")
    assert tree.kind == "sym" and tree.value == "s"


def test_parse_q1_ground_truth_shape():
    tree = parse_equation("Vn2(s) = V1*(R5 + R6)/(s*(R1 + R5 + R6))")
    r = to_rational(tree)
    assert r.num == rf("V1*R5 + V1*R6").num
    assert r.den == rf("s*R1 + s*R5 + s*R6").num


def test_parse_application_sugar():
    assert to_rational(parse_equation("V1(s)/s")) == rf("V1/s")


def test_caret_and_double_star_agree():
    assert parse_equation("s^2 + 2*s + 1") == parse_equation("s**2 + 2*s + 1")


def test_decimal_literals_exact():
    r = rf("0.5")
    assert r.num.const_value() == Fraction(1, 2) * r.den.const_value()
    assert rf("0.1+ 0.2") == rf("3/10")


def test_unary_minus_and_precedence():
    assert rf("-s**2") == rf("-(s**2)")
    assert rf("2*-3") == rf("-6")
    assert rf("1 - -1") == rf("2")


@pytest.mark.parametrize("bad", ["", "   ", "(", "a+", "1/(", "x =", "2(s)", "a^b"])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse_equation(bad)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as exc:
        parse_equation("1 + @")
    assert exc.value.position == 4


def test_unbalanced_parens():
    with pytest.raises(ParseError):
        parse_equation("(s + 1")


# ---------------------------------------------------------------------------
# to_rational
# ---------------------------------------------------------------------------


def test_to_rational_direct():
    r = rf("1/(R*C*s+1)")
    assert r.num == Polynomial.one()
    assert format_canonical(r) == "1/(C*R*s + 1)"


def test_to_rational_clears_nested_fractions():
    r = rf("(1/(R*C))/(s + 1/(R*C))")
    assert r.num == Polynomial.one()
    assert r == rf("1/(R*C*s+1)")
    # cross-check at 10 random points
    rng = random.Random(3)
    other = rf("1/(R*C*s+1)")
    for _ in range(10):
        a = {n: rng.uniform(0.5, 5.0) for n in ("R", "C")}
        a["s"] = complex(rng.uniform(0.5, 5), rng.uniform(0.5, 5))
        x, y = eval_numeric(r, a), eval_numeric(other, a)
        assert abs(x - y) <= 1e-9 * max(1.0, abs(y))


def test_to_rational_polynomial_only():
    r = rf("s**2 + 2*s + 1")
    assert r.den == Polynomial.one()
    assert format_canonical(r) == "s**2 + 2*s + 1"


def test_to_rational_negative_powers():
    assert rf("s**-1") == rf("1/s")
    assert rf("(R*s)^(-2)") == rf("1/(R**2*s**2)")


def test_division_by_zero_expression():
    with pytest.raises(ExpressionError):
        rf("1/(s - s)")
    with pytest.raises(ExpressionError):
        rf("1/0")


# ---------------------------------------------------------------------------
# simplify
# ---------------------------------------------------------------------------


def test_simplify_common_factor():
    r = rf("(s+1)*(s+2)/(s+1)")
    assert simplify(r) == rf("s+2")


def test_simplify_q1_already_coprime():
    r = rf("V1*(R5 + R6)/(s*(R1 + R5 + R6))")
    assert simplify(r) == r


def _euclid_gcd(a, b):
    """Independent univariate oracle over Q, dense coefficient lists."""
    def norm(p):
        while p and p[-1] == 0:
            p.pop()
        return p

    def rem(p, q):
        p = p[:]
        while len(p) >= len(q) and p:
            f = p[-1] / q[-1]
            off = len(p) - len(q)
            for i, c in enumerate(q):
                p[off + i] -= f * c
            norm(p)
        return p

    a, b = norm(a[:]), norm(b[:])
    while b:
        a, b = b, rem(a, b)
    return [c / a[-1] for c in a] if a else a


def test_simplify_scalar_ratio_matches_euclid_oracle():
    # oracle: gcd(2s+2, 4s+4) over Q is (s+1) up to units
    g = _euclid_gcd([Fraction(2), Fraction(2)], [Fraction(4), Fraction(4)])
    assert g == [Fraction(1), Fraction(1)]
    assert simplify(rf("(2*s+2)/(4*s+4)")) == rf("1/2")


def test_simplify_idempotent():
    rng = random.Random(11)
    for _ in range(50):
        n = _random_poly(rng)
        d = _random_poly(rng)
        if d.is_zero():
            continue
        once = simplify(RationalFunc(n, d))
        assert simplify(once) == once


def test_simplify_budget_exhaustion_flags():
    r = rf("(s+1)*(s+2)*(R1+R2)*(C1*s+1)/((s+1)*(L1*s+R1))")
    out = simplify(r, budget=WorkBudget(1))
    assert out.unsimplified
    assert out.num == r.num and out.den == r.den


def test_simplify_agrees_numerically():
    rng = random.Random(5)
    r = RationalFunc(
        rf("(R1+R2)*(C1*s+2)").num,
        rf("(C1*s+2)*(R1*s+R2)").num,
    )
    s_ = simplify(r)
    assert s_ == rf("(R1+R2)/(R1*s+R2)")
    hits = 0
    while hits < 50:
        a = {n: rng.uniform(0.1, 10.0) for n in ("R1", "R2", "C1")}
        a["s"] = complex(rng.uniform(0.1, 10), rng.uniform(-10, 10))
        try:
            x, y = eval_numeric(r, a), eval_numeric(s_, a)
        except NearPole:
            continue
        assert abs(x - y) <= 1e-9 * max(1.0, abs(y))
        hits += 1


# ---------------------------------------------------------------------------
# eval_numeric
# ---------------------------------------------------------------------------


def test_eval_basic():
    assert eval_numeric(rf("1/(R*C*s+1)"), {"R": 1, "C": 1, "s": 1}) == 0.5


def test_eval_complex_point():
    got = eval_numeric(rf("1/(R*C*s+1)"), {"R": 2, "C": 3, "s": 1j})
    want = 1 / (1 + 6j)
    assert abs(got - want) < 1e-12


def test_eval_zero_numerator():
    z = RationalFunc(Polynomial.zero(), rf("s+1").num)
    assert eval_numeric(z, {"s": 2.5}) == 0


def test_eval_missing_symbol():
    with pytest.raises(MissingSymbol):
        eval_numeric(rf("R/(s+1)"), {"s": 1})


def test_eval_near_pole():
    with pytest.raises(NearPole):
        eval_numeric(rf("1/(s-1)"), {"s": 1 + 1e-12})


# ---------------------------------------------------------------------------
# format_canonical
# ---------------------------------------------------------------------------


def test_format_fixed_order():
    assert format_canonical(rf("1/(s*C*R + 1)")) == "1/(C*R*s + 1)"


def test_format_bare_symbol():
    assert format_canonical(rf("s")) == "s"


def test_format_powers_use_double_star():
    out = format_canonical(rf("C1*L2*R4*s**2 + C1*R1*R4*s + L2*s + R1 + R4"))
    assert out == "C1*L2*R4*s**2 + C1*R1*R4*s + L2*s + R1 + R4"


def test_format_round_trip_bulk():
    rng = random.Random(23)
    for _ in range(1000):
        n = _random_poly(rng)
        d = _random_poly(rng)
        if d.is_zero():
            continue
        r = simplify(RationalFunc(n, d))
        back = simplify(parse_rational(format_canonical(r)))
        assert back == r


# ---------------------------------------------------------------------------
# polynomial arithmetic properties
# ---------------------------------------------------------------------------

_SYMS = ["R1", "C1", "L1", "s", "x_1"]


def _random_poly(rng, max_terms: int = 4) -> Polynomial:
    p = Polynomial.zero()
    for _ in range(rng.randint(1, max_terms)):
        mono = tuple(
            sorted(
                (name, rng.randint(1, 2))
                for name in rng.sample(_SYMS, rng.randint(0, 2))
            )
        )
        p = p + Polynomial({mono: rng.randint(-4, 4)})
    return p


@st.composite
def small_polys(draw):
    n_terms = draw(st.integers(1, 4))
    terms = {}
    for _ in range(n_terms):
        names = draw(st.lists(st.sampled_from(_SYMS), max_size=2, unique=True))
        exps = tuple(sorted((n, draw(st.integers(1, 2))) for n in names))
        terms[exps] = draw(st.integers(-5, 5))
    return Polynomial(terms)


@settings(max_examples=200, deadline=None)
@given(small_polys(), small_polys(), small_polys())
def test_distributivity_exact(p, q, r):
    assert (p + q) * r == p * r + q * r


@settings(max_examples=100, deadline=None)
@given(small_polys(), small_polys())
def test_mul_commutes(p, q):
    assert p * q == q * p


def test_gcd_divides_both():
    rng = random.Random(41)
    for _ in range(100):
        a, b = _random_poly(rng), _random_poly(rng)
        g = poly_gcd(a, b)
        if g.is_zero():
            assert a.is_zero() and b.is_zero()
            continue
        assert poly_div_exact(a, g) is not None
        assert poly_div_exact(b, g) is not None


def test_gcd_finds_planted_factor():
    rng = random.Random(17)
    for _ in range(60):
        g = _random_poly(rng)
        if g.is_zero() or g.is_const():
            continue
        a = g * _random_poly(rng)
        b = g * _random_poly(rng)
        got = poly_gcd(a, b)
        if a.is_zero() or b.is_zero():
            continue
        assert poly_div_exact(got, poly_gcd(got, g.primitive()[1])) is not None
        # planted factor must divide the computed gcd
        assert poly_div_exact(got, g.primitive()[1]) is not None


def test_budget_raises():
    big = rf("(s+1)*(R1+1)*(C1+1)*(L1+1)").num
    with pytest.raises(WorkBudgetExceeded):
        poly_gcd(big, big + Polynomial.one(), WorkBudget(1))


def test_div_exact_rejects_non_divisor():
    assert poly_div_exact(rf("s+1").num, rf("s+2").num) is None
