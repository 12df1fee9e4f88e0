"""Exact symbolic algebra for rational functions of ``s`` and named component symbols.

Everything is computed over the rationals: coefficients are Python ints or
``fractions.Fraction``, never floats.  The value type used throughout the rest
of the package is :class:`RationalFunc`, a ratio of two multivariate
polynomials kept in a canonical integer-primitive form.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

SYMBOL_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

#: The reserved complex-frequency variable.
S_NAME = "s"

# Term-multiplication budget used by `simplify` when none is supplied.
DEFAULT_GCD_BUDGET = 4_000_000


class SymexprError(Exception):
    """Base class for errors raised by this module."""


class ParseError(SymexprError):
    """Malformed equation text; carries the 0-based offset of the problem."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class ExpressionError(SymexprError):
    """Structurally invalid expression, e.g. division by a zero expression."""


class MissingSymbol(SymexprError):
    """Numeric evaluation was asked for with an incomplete assignment."""


class NearPole(SymexprError):
    """The denominator magnitude fell below the pole guard at this point."""


class WorkBudgetExceeded(SymexprError):
    """A symbolic computation hit its term-operation budget."""


class WorkBudget:
    """Mutable counter of polynomial term operations, shared across one task."""

    __slots__ = ("limit", "used")

    def __init__(self, limit: int):
        self.limit = int(limit)
        self.used = 0

    def charge(self, amount: int) -> None:
        self.used += amount
        if self.used > self.limit:
            raise WorkBudgetExceeded(
                f"work budget exhausted ({self.used} > {self.limit} term ops)"
            )


# ---------------------------------------------------------------------------
# Monomials
# ---------------------------------------------------------------------------
# A monomial is a tuple of (symbol, exponent) pairs, sorted by symbol name,
# with all exponents > 0.  The empty tuple is the constant monomial.

Monomial = tuple


def _mono_mul_raw(m1: Monomial, m2: Monomial) -> Monomial:
    out = []
    i = j = 0
    n1len, n2len = len(m1), len(m2)
    while i < n1len and j < n2len:
        a, ea = m1[i]
        b, eb = m2[j]
        if a == b:
            out.append((a, ea + eb))
            i += 1
            j += 1
        elif a < b:
            out.append(m1[i])
            i += 1
        else:
            out.append(m2[j])
            j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    return tuple(out)


_MONO_CACHE: dict = {}
_MONO_CACHE_MAX = 1 << 18


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    # Hot path during elimination; monomial pairs repeat heavily.
    if not m1:
        return m2
    if not m2:
        return m1
    key = (m1, m2)
    hit = _MONO_CACHE.get(key)
    if hit is None:
        hit = _mono_mul_raw(m1, m2)
        if len(_MONO_CACHE) >= _MONO_CACHE_MAX:
            _MONO_CACHE.clear()
        _MONO_CACHE[key] = hit
    return hit


def _mono_div(m1: Monomial, m2: Monomial) -> Monomial | None:
    """m1 / m2, or None when m2 does not divide m1."""
    if not m2:
        return m1
    rem = dict(m1)
    out = []
    for name, exp in m2:
        have = rem.get(name, 0)
        if have < exp:
            return None
        if have == exp:
            rem.pop(name)
        else:
            rem[name] = have - exp
    for name in sorted(rem):
        out.append((name, rem[name]))
    return tuple(out)


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _grlex_key(m: Monomial, var_slot: Mapping[str, int], nvars: int):
    """Sortable graded-lex key; larger key = larger monomial."""
    vec = [0] * nvars
    for name, exp in m:
        vec[var_slot[name]] = exp
    # Earlier variables more significant: negate position by reversing sign
    # convention -- with plain tuples, (1,0) > (0,2) already gives lex order.
    return (_mono_degree(m), tuple(vec))


def _sorted_terms(terms: Mapping[Monomial, object]) -> list:
    """Terms in descending graded-lex order over the polynomial's symbols."""
    names = sorted({name for m in terms for name, _ in m})
    slot = {n: i for i, n in enumerate(names)}
    nvars = len(names)
    return sorted(
        terms.items(), key=lambda kv: _grlex_key(kv[0], slot, nvars), reverse=True
    )


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------


class Polynomial:
    """Sparse multivariate polynomial with exact rational coefficients.

    Immutable by convention: no public method mutates ``terms``.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean: dict = {}
        if terms:
            for mono, coeff in terms.items():
                if isinstance(coeff, Fraction) and coeff.denominator == 1:
                    coeff = coeff.numerator
                if coeff != 0:
                    clean[mono] = coeff
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls) -> "Polynomial":
        return cls()

    @classmethod
    def one(cls) -> "Polynomial":
        return cls({(): 1})

    @classmethod
    def const(cls, value) -> "Polynomial":
        return cls({(): Fraction(value)})

    @classmethod
    def symbol(cls, name: str) -> "Polynomial":
        if not SYMBOL_RE.match(name):
            raise ExpressionError(f"invalid symbol name {name!r}")
        return cls({((name, 1),): 1})

    # -- predicates and views ----------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def const_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        if not self.is_const():
            raise ExpressionError("polynomial is not constant")
        return Fraction(self.terms[()])

    def symbols(self) -> set:
        return {name for m in self.terms for name, _ in m}

    def degree(self, var: str) -> int:
        deg = 0
        for m in self.terms:
            for name, exp in m:
                if name == var and exp > deg:
                    deg = exp
        return deg

    def total_degree(self) -> int:
        return max((_mono_degree(m) for m in self.terms), default=0)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        return f"Polynomial({format_poly(self)!r})"

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other: "Polynomial") -> "Polynomial":
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, 0) + c
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
        return Polynomial(out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m, 0) - c
            if v == 0:
                out.pop(m, None)
            else:
                out[m] = v
        return Polynomial(out)

    def __neg__(self) -> "Polynomial":
        return Polynomial({m: -c for m, c in self.terms.items()})

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        return self.mul(other)

    def mul(self, other: "Polynomial", budget: WorkBudget | None = None) -> "Polynomial":
        a, b = self.terms, other.terms
        if not a or not b:
            return Polynomial()
        if len(a) > len(b):
            a, b = b, a
        if budget is not None:
            budget.charge(len(a) * len(b))
        out: dict = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = _mono_mul(m1, m2)
                v = out.get(m, 0) + c1 * c2
                if v == 0:
                    out.pop(m, None)
                else:
                    out[m] = v
        return Polynomial(out)

    def scale(self, factor) -> "Polynomial":
        if factor == 0:
            return Polynomial()
        if isinstance(factor, Fraction) and factor.denominator == 1:
            factor = factor.numerator
        return Polynomial({m: c * factor for m, c in self.terms.items()})

    def pow(self, exponent: int, budget: WorkBudget | None = None) -> "Polynomial":
        if exponent < 0:
            raise ExpressionError("negative exponent on a bare polynomial")
        result = Polynomial.one()
        base = self
        e = exponent
        while e:
            if e & 1:
                result = result.mul(base, budget)
            e >>= 1
            if e:
                base = base.mul(base, budget)
        return result

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, assignment: Mapping[str, complex]) -> complex:
        total = 0j
        for m, c in self.terms.items():
            v = complex(c if not isinstance(c, Fraction) else float(c))
            for name, exp in m:
                try:
                    v *= assignment[name] ** exp
                except KeyError:
                    raise MissingSymbol(name) from None
            total += v
        return total

    # -- canonical structure --------------------------------------------------

    def leading(self) -> tuple:
        """(monomial, coefficient) of the graded-lex leading term."""
        if not self.terms:
            raise ExpressionError("zero polynomial has no leading term")
        return _sorted_terms(self.terms)[0]

    def rational_content(self) -> Fraction:
        """Positive rational c with self = c * P, P integer-primitive.

        Sign is carried separately by callers; the returned content is > 0
        for nonzero polynomials and 0 for the zero polynomial.
        """
        if not self.terms:
            return Fraction(0)
        num_gcd = 0
        den_lcm = 1
        for c in self.terms.values():
            f = c if isinstance(c, Fraction) else Fraction(c)
            num_gcd = math.gcd(num_gcd, abs(f.numerator))
            den_lcm = den_lcm * f.denominator // math.gcd(den_lcm, f.denominator)
        return Fraction(num_gcd, den_lcm)

    def primitive(self) -> tuple:
        """(content, primitive) with content a Fraction carrying the lead sign."""
        if not self.terms:
            return Fraction(0), Polynomial()
        content = self.rational_content()
        _, lead_c = self.leading()
        if lead_c < 0:
            content = -content
        inv = 1 / content
        return content, self.scale(inv)


def poly_div_exact(
    p: Polynomial, d: Polynomial, budget: WorkBudget | None = None
) -> Polynomial | None:
    """Exact quotient p / d, or None when d does not divide p.

    Sparse heap division: the live remainder monomials sit in a max-heap so
    each leading-term extraction is logarithmic rather than a full scan.
    """
    if d.is_zero():
        raise ExpressionError("division by the zero polynomial")
    if p.is_zero():
        return Polynomial()
    if d.is_const():
        return p.scale(Fraction(1) / d.const_value())
    names = sorted(p.symbols() | d.symbols())
    slot = {n: i for i, n in enumerate(names)}
    nvars = len(names)

    def negkey(m: Monomial):
        deg, vec = _grlex_key(m, slot, nvars)
        return (-deg, tuple(-e for e in vec))

    d_items = sorted(
        d.terms.items(), key=lambda kv: _grlex_key(kv[0], slot, nvars), reverse=True
    )
    d_lead_m, d_lead_c = d_items[0]
    nd = len(d_items)
    rem = dict(p.terms)
    heap = [(negkey(m), m) for m in rem]
    heapq.heapify(heap)
    quo: dict = {}
    while heap:
        _, m = heapq.heappop(heap)
        c = rem.get(m)
        if c is None:
            continue
        qm = _mono_div(m, d_lead_m)
        if qm is None:
            return None
        qc = Fraction(c) / Fraction(d_lead_c)
        if qc.denominator == 1:
            qc = qc.numerator
        quo[qm] = qc
        if budget is not None:
            budget.charge(nd)
        for mm, cc in d_items:
            tm = _mono_mul(qm, mm)
            old = rem.get(tm)
            v = (0 if old is None else old) - qc * cc
            if v == 0:
                if old is not None:
                    del rem[tm]
            else:
                rem[tm] = v
                if old is None:
                    heapq.heappush(heap, (negkey(tm), tm))
    assert not rem
    return Polynomial(quo)


# ---------------------------------------------------------------------------
# Multivariate GCD: content / primitive-part recursion over a main variable
# with a primitive pseudo-remainder sequence, and plain Euclid at the
# univariate base.  All heavy multiplications are charged to the budget.
# ---------------------------------------------------------------------------


def _strip_monomial(p: Polynomial) -> tuple:
    """Factor out the largest common monomial: returns (mono, reduced)."""
    if p.is_zero():
        return (), p
    common: dict | None = None
    for m in p.terms:
        if common is None:
            common = dict(m)
        else:
            this = dict(m)
            for name in list(common):
                e = min(common[name], this.get(name, 0))
                if e == 0:
                    del common[name]
                else:
                    common[name] = e
        if not common:
            return (), p
    mono = tuple(sorted(common.items()))
    if not mono:
        return (), p
    reduced = Polynomial({_mono_div(m, mono): c for m, c in p.terms.items()})
    return mono, reduced


def _int_content(p: Polynomial) -> int:
    g = 0
    for c in p.terms.values():
        g = math.gcd(g, abs(int(c)))
    return g


def _to_univar(p: Polynomial, x: str) -> dict:
    """View p as a polynomial in x with Polynomial coefficients."""
    out: dict = {}
    for m, c in p.terms.items():
        exp = 0
        rest = []
        for name, e in m:
            if name == x:
                exp = e
            else:
                rest.append((name, e))
        coeff = out.setdefault(exp, {})
        coeff[tuple(rest)] = coeff.get(tuple(rest), 0) + c
    return {e: Polynomial(t) for e, t in out.items() if any(v != 0 for v in t.values())}


def _from_univar(coeffs: Mapping[int, Polynomial], x: str) -> Polynomial:
    out: dict = {}
    for e, poly in coeffs.items():
        xm = ((x, e),) if e else ()
        for m, c in poly.terms.items():
            mm = _mono_mul(m, xm)
            out[mm] = out.get(mm, 0) + c
    return Polynomial(out)


def _prem(u: dict, v: dict, budget: WorkBudget | None) -> dict:
    """Pseudo-remainder of u by v, both univariate views (dict deg -> Polynomial)."""
    dv = max(v)
    lc_v = v[dv]
    r = dict(u)
    while r and max(r) >= dv:
        dr = max(r)
        lc_r = r[dr]
        shift = dr - dv
        new: dict = {}
        for e, c in r.items():
            if e == dr:
                continue
            new[e] = c.mul(lc_v, budget)
        for e, c in v.items():
            if e == dv:
                continue
            t = lc_r.mul(c, budget)
            tgt = e + shift
            acc = new.get(tgt)
            new[tgt] = -t if acc is None else acc - t
        r = {e: c for e, c in new.items() if not c.is_zero()}
    return r


def _gcd_int(a: Polynomial, b: Polynomial, budget: WorkBudget | None) -> Polynomial:
    """GCD of integer-coefficient polynomials, integer-primitive, positive lead."""
    if a.is_zero():
        return _normalize_sign(b)
    if b.is_zero():
        return _normalize_sign(a)
    if a.is_const() or b.is_const():
        return Polynomial.const(math.gcd(_int_content(a), _int_content(b)))

    mono_a, a = _strip_monomial(a)
    mono_b, b = _strip_monomial(b)
    shared: dict = {}
    da, db = dict(mono_a), dict(mono_b)
    for name in set(da) & set(db):
        shared[name] = min(da[name], db[name])
    shared_mono = tuple(sorted(shared.items()))

    common = sorted(a.symbols() & b.symbols())
    if not common:
        g: Polynomial = Polynomial.const(math.gcd(_int_content(a), _int_content(b)))
    else:
        x = min(common, key=lambda v: (min(a.degree(v), b.degree(v)), v))
        ua, ub = _to_univar(a, x), _to_univar(b, x)
        cont_a = _fold_gcd(ua.values(), budget)
        cont_b = _fold_gcd(ub.values(), budget)
        pa = poly_div_exact(a, cont_a, budget)
        pb = poly_div_exact(b, cont_b, budget)
        assert pa is not None and pb is not None
        cg = _gcd_int(cont_a, cont_b, budget)

        u, v = _to_univar(pa, x), _to_univar(pb, x)
        if max(u) < max(v):
            u, v = v, u
        while True:
            r = _prem(u, v, budget)
            if not r:
                g_main = _from_univar(v, x)
                break
            if max(r) == 0:
                g_main = Polynomial.one()
                break
            cont_r = _fold_gcd(r.values(), budget)
            rp = poly_div_exact(_from_univar(r, x), cont_r, budget)
            assert rp is not None
            u, v = v, _to_univar(rp, x)
        if not g_main.is_const():
            cont_g = _fold_gcd(_to_univar(g_main, x).values(), budget)
            reduced = poly_div_exact(g_main, cont_g, budget)
            assert reduced is not None
            g_main = reduced
        g = cg.mul(g_main, budget)

    if shared_mono:
        g = g.mul(Polynomial({shared_mono: 1}), budget)
    return _normalize_sign(g)


def _fold_gcd(polys: Iterable[Polynomial], budget: WorkBudget | None) -> Polynomial:
    acc = Polynomial.zero()
    for p in polys:
        acc = _gcd_int(acc, p, budget)
        if acc.is_const() and acc.const_value() == 1:
            return acc
    return acc


def _normalize_sign(p: Polynomial) -> Polynomial:
    if p.is_zero():
        return p
    _, lead_c = p.leading()
    return p.scale(-1) if lead_c < 0 else p


def poly_gcd(a: Polynomial, b: Polynomial, budget: WorkBudget | None = None) -> Polynomial:
    """GCD over the integers of two exact polynomials.

    Inputs with fractional coefficients are scaled to integer-primitive form
    first; the result always has integer coefficients, content included, and a
    positive leading coefficient.  Raises :class:`WorkBudgetExceeded` when the
    supplied budget runs out.
    """
    if a.is_zero() and b.is_zero():
        return Polynomial.zero()
    if a.is_zero():
        return _normalize_sign(b.primitive()[1])
    if b.is_zero():
        return _normalize_sign(a.primitive()[1])
    ia = _integerize(a)
    ib = _integerize(b)
    return _gcd_int(ia, ib, budget)


def _integerize(p: Polynomial) -> Polynomial:
    """Scale away fractional coefficients, keeping integer content intact."""
    den_lcm = 1
    for c in p.terms.values():
        if isinstance(c, Fraction):
            den_lcm = den_lcm * c.denominator // math.gcd(den_lcm, c.denominator)
    return p.scale(den_lcm) if den_lcm != 1 else p


# -- probabilistic coprimality screen ---------------------------------------
# Before paying for a full PRS gcd, project both polynomials to univariate
# images modulo a prime (all other symbols evaluated at fixed pseudo-random
# points) and take cheap univariate gcds.  A trivial verdict skips the exact
# gcd: in the unlikely event of an unlucky evaluation the result is merely an
# unreduced (still exact) fraction, never a wrong one.

_SCREEN_P = 2_147_483_629
_screen_point_cache: dict = {}


def _screen_point(name: str) -> int:
    v = _screen_point_cache.get(name)
    if v is None:
        digest = hashlib.sha256(name.encode()).digest()
        v = int.from_bytes(digest[:8], "big") % (_SCREEN_P - 2) + 1
        _screen_point_cache[name] = v
    return v


def _univar_image(p: Polynomial, var: str) -> list | None:
    """Dense mod-p coefficient list of p with all other symbols evaluated."""
    out: dict = {}
    for mono, c in p.terms.items():
        cv = int(c) % _SCREEN_P
        ev = 0
        for name, e in mono:
            if name == var:
                ev = e
            else:
                cv = cv * pow(_screen_point(name), e, _SCREEN_P) % _SCREEN_P
        out[ev] = (out.get(ev, 0) + cv) % _SCREEN_P
    deg = p.degree(var)
    dense = [out.get(i, 0) for i in range(deg + 1)]
    if dense and dense[-1] == 0:
        return None  # unlucky degree drop; caller must fall back
    while dense and dense[-1] == 0:
        dense.pop()
    return dense


def _univar_gcd_degree_mod_p(a: list, b: list) -> int:
    while b:
        inv = pow(b[-1], _SCREEN_P - 2, _SCREEN_P)
        while len(a) >= len(b):
            f = a[-1] * inv % _SCREEN_P
            off = len(a) - len(b)
            for i, c in enumerate(b):
                a[off + i] = (a[off + i] - f * c) % _SCREEN_P
            while a and a[-1] == 0:
                a.pop()
            if not a:
                break
        a, b = b, a
    return len(a) - 1


def gcd_is_probably_trivial(a: Polynomial, b: Polynomial) -> bool:
    """True when a and b are almost surely coprime (up to integer content).

    Deterministic (fixed evaluation points), one-sided: a False return says
    nothing, a True return is wrong only with negligible probability, and a
    wrong True only skips a cosmetic simplification.
    """
    if a.is_zero() or b.is_zero() or a.is_const() or b.is_const():
        return False
    common = sorted(a.symbols() & b.symbols())
    if not common:
        return True
    for var in common:
        ia = _univar_image(a, var)
        ib = _univar_image(b, var)
        if ia is None or ib is None or not ia or not ib:
            return False
        if len(ia) == 1 or len(ib) == 1:
            continue  # one side constant in var: gcd has degree 0 in var
        if _univar_gcd_degree_mod_p(list(ia), list(ib)) > 0:
            return False
    return True


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------


class RationalFunc:
    """Ratio of two polynomials in canonical integer-primitive pair form.

    Canonical form: the integer content common to numerator and denominator is
    divided out, coefficients are integers, and the denominator's graded-lex
    leading coefficient is positive.  Equality is structural; use
    :meth:`equivalent` for mathematical equality of unreduced forms.
    """

    __slots__ = ("num", "den", "unsimplified")

    def __init__(self, num: Polynomial, den: Polynomial, unsimplified: bool = False):
        if den.is_zero():
            raise ExpressionError("rational function with zero denominator")
        if num.is_zero():
            self.num = Polynomial.zero()
            self.den = Polynomial.one()
            self.unsimplified = False
            return
        # Clear the monomial content shared by the pair (nested-fraction residue).
        mono_n, _ = _strip_monomial(num)
        mono_d, _ = _strip_monomial(den)
        if mono_n and mono_d:
            dn, dd = dict(mono_n), dict(mono_d)
            shared = {k: min(dn[k], dd[k]) for k in set(dn) & set(dd)}
            shared_mono = tuple(sorted(shared.items()))
            if shared_mono:
                num = Polynomial(
                    {_mono_div(m, shared_mono): c for m, c in num.terms.items()}
                )
                den = Polynomial(
                    {_mono_div(m, shared_mono): c for m, c in den.terms.items()}
                )
        cn = num.rational_content()
        cd = den.rational_content()
        # Content of the pair: gcd(a/b, c/d) = gcd(a*d, c*b) / (b*d).
        g = Fraction(
            math.gcd(cn.numerator * cd.denominator, cd.numerator * cn.denominator),
            cn.denominator * cd.denominator,
        )
        _, lead_c = den.leading()
        if lead_c < 0:
            g = -g
        inv = 1 / g
        self.num = num.scale(inv)
        self.den = den.scale(inv)
        self.unsimplified = unsimplified

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls) -> "RationalFunc":
        return cls(Polynomial.zero(), Polynomial.one())

    @classmethod
    def one(cls) -> "RationalFunc":
        return cls(Polynomial.one(), Polynomial.one())

    @classmethod
    def const(cls, value) -> "RationalFunc":
        return cls(Polynomial.const(value), Polynomial.one())

    @classmethod
    def symbol(cls, name: str) -> "RationalFunc":
        return cls(Polynomial.symbol(name), Polynomial.one())

    # -- views ---------------------------------------------------------------

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def symbols(self) -> set:
        return self.num.symbols() | self.den.symbols()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RationalFunc)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    def __repr__(self) -> str:
        return f"RationalFunc({format_canonical(self)!r})"

    # -- arithmetic (exact, unreduced) ----------------------------------------

    def __add__(self, other: "RationalFunc") -> "RationalFunc":
        return RationalFunc(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def __sub__(self, other: "RationalFunc") -> "RationalFunc":
        return RationalFunc(
            self.num * other.den - other.num * self.den, self.den * other.den
        )

    def __neg__(self) -> "RationalFunc":
        return RationalFunc(-self.num, self.den)

    def __mul__(self, other: "RationalFunc") -> "RationalFunc":
        return RationalFunc(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "RationalFunc") -> "RationalFunc":
        if other.num.is_zero():
            raise ExpressionError("division by a zero rational function")
        return RationalFunc(self.num * other.den, self.den * other.num)

    def equivalent(self, other: "RationalFunc", budget: WorkBudget | None = None) -> bool:
        """Exact mathematical equality (cross-multiplication test)."""
        diff = self.num.mul(other.den, budget) - other.num.mul(self.den, budget)
        return diff.is_zero()


def simplify(rf: RationalFunc, budget: WorkBudget | None = None) -> RationalFunc:
    """Cancel the polynomial GCD of numerator and denominator.

    When the GCD computation exhausts its budget the input is returned
    unchanged with ``unsimplified=True`` so callers can fall back to numeric
    comparison.
    """
    if rf.num.is_zero():
        return RationalFunc.zero()
    if rf.den == Polynomial.one() or gcd_is_probably_trivial(rf.num, rf.den):
        return RationalFunc(rf.num, rf.den)
    if budget is None:
        budget = WorkBudget(DEFAULT_GCD_BUDGET)
    try:
        g = poly_gcd(rf.num, rf.den, budget)
    except WorkBudgetExceeded:
        return RationalFunc(rf.num, rf.den, unsimplified=True)
    if g.is_const() and abs(g.const_value()) == 1:
        return RationalFunc(rf.num, rf.den)
    num = poly_div_exact(rf.num, g)
    den = poly_div_exact(rf.den, g)
    assert num is not None and den is not None, "gcd must divide both sides"
    return RationalFunc(num, den)


def eval_numeric(
    rf: RationalFunc,
    assignment: Mapping[str, complex],
    pole_guard: float = 1e-8,
) -> complex:
    """Evaluate at a point; raises NearPole when |denominator| <= pole_guard."""
    for name in sorted(rf.symbols()):
        if name not in assignment:
            raise MissingSymbol(name)
    den = rf.den.evaluate(assignment)
    if abs(den) <= pole_guard:
        raise NearPole(f"|denominator| = {abs(den):.3e} <= {pole_guard}")
    return rf.num.evaluate(assignment) / den


# ---------------------------------------------------------------------------
# Expression trees and the equation parser
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExprTree:
    """Parse-tree node: kinds add/sub/mul/div/pow/neg/sym/num.

    ``pow`` stores its integer exponent in ``value``; ``sym`` the symbol name;
    ``num`` an exact Fraction.
    """

    kind: str
    children: tuple = ()
    value: object = None


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/^()=]))"
)


def _tokenize(text: str) -> list:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:]
            if rest.strip() == "":
                break
            bad = pos + len(rest) - len(rest.lstrip())
            raise ParseError(f"unexpected character {text[bad]!r}", bad)
        if m.group("num") is not None:
            tok = m.group("num")
            if tok.startswith("."):
                tok = "0" + tok
            if tok.endswith("."):
                tok = tok + "0"
            tokens.append(("num", Fraction(tok), m.start()))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start()))
        else:
            tokens.append(("op", m.group("op"), m.start()))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", pos)
        self.advance()

    def parse(self) -> ExprTree:
        tree = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing {val!r}", pos)
        return tree

    def expr(self) -> ExprTree:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                rhs = self.term()
                node = ExprTree("add" if val == "+" else "sub", (node, rhs))
            else:
                return node

    def term(self) -> ExprTree:
        node = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                rhs = self.factor()
                node = ExprTree("mul" if val == "*" else "div", (node, rhs))
            else:
                return node

    def factor(self) -> ExprTree:
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.advance()
            child = self.factor()
            return child if val == "+" else ExprTree("neg", (child,))
        return self.power()

    def power(self) -> ExprTree:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val in ("**", "^"):
            self.advance()
            exp = self.int_exponent()
            return ExprTree("pow", (base,), exp)
        return base

    def int_exponent(self) -> int:
        kind, val, pos = self.peek()
        sign = 1
        parens = False
        if kind == "op" and val == "(":
            self.advance()
            parens = True
            kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            sign = -1
            kind, val, pos = self.peek()
        if kind != "num" or val.denominator != 1:
            raise ParseError("exponent must be an integer literal", pos)
        self.advance()
        if parens:
            self.expect_op(")")
        return sign * val.numerator

    def atom(self) -> ExprTree:
        kind, val, pos = self.advance()
        if kind == "num":
            return ExprTree("num", (), val)
        if kind == "ident":
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "(":
                # Laplace application sugar: `H(s)` names the signal H itself.
                self.advance()
                ak, av, apos = self.peek()
                if ak != "ident" or av != S_NAME:
                    raise ParseError(
                        f"only {S_NAME!r} may appear as a function argument", apos
                    )
                self.advance()
                self.expect_op(")")
                return ExprTree("sym", (), val)
            return ExprTree("sym", (), val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(
            f"expected a value, got {val!r}" if val else "unexpected end of input", pos
        )


def parse_equation(text: str) -> ExprTree:
    """Parse equation or expression text to a tree.

    When one or more ``=`` signs are present only the final right-hand side is
    parsed; left-hand sides such as ``H(s)`` or ``Vn2(s)`` are discarded.
    Accepts both ``^`` and ``**`` for powers; decimal literals become exact
    rationals.
    """
    if text is None or not text.strip():
        raise ParseError("empty input", 0)
    rhs = text.split("=")[-1]
    if not rhs.strip():
        raise ParseError("empty right-hand side", len(text))
    return _Parser(rhs).parse()


def to_rational(tree: ExprTree) -> RationalFunc:
    """Flatten a tree into a single numerator/denominator pair, exactly."""
    num, den = _to_pair(tree)
    if den.is_zero():
        raise ExpressionError("expression divides by zero")
    return RationalFunc(num, den)


def _to_pair(tree: ExprTree) -> tuple:
    kind = tree.kind
    if kind == "num":
        return Polynomial.const(tree.value), Polynomial.one()
    if kind == "sym":
        return Polynomial.symbol(tree.value), Polynomial.one()
    if kind == "neg":
        n, d = _to_pair(tree.children[0])
        return -n, d
    if kind in ("add", "sub"):
        an, ad = _to_pair(tree.children[0])
        bn, bd = _to_pair(tree.children[1])
        cross = an * bd
        other = bn * ad
        return (cross + other if kind == "add" else cross - other), ad * bd
    if kind == "mul":
        an, ad = _to_pair(tree.children[0])
        bn, bd = _to_pair(tree.children[1])
        return an * bn, ad * bd
    if kind == "div":
        an, ad = _to_pair(tree.children[0])
        bn, bd = _to_pair(tree.children[1])
        if bn.is_zero():
            raise ExpressionError("division by a zero expression")
        return an * bd, ad * bn
    if kind == "pow":
        n, d = _to_pair(tree.children[0])
        e = tree.value
        if e >= 0:
            return n.pow(e), d.pow(e)
        if n.is_zero():
            raise ExpressionError("zero raised to a negative power")
        return d.pow(-e), n.pow(-e)
    raise ExpressionError(f"unknown tree node {kind!r}")


# ---------------------------------------------------------------------------
# Canonical formatting
# ---------------------------------------------------------------------------


def _format_coeff(c) -> str:
    if isinstance(c, Fraction) and c.denominator != 1:
        return f"{c.numerator}/{c.denominator}"
    return str(int(c))


def _format_term(mono: Monomial, coeff) -> str:
    factors = []
    for name, exp in mono:
        factors.append(name if exp == 1 else f"{name}**{exp}")
    mag = abs(coeff)
    if not factors:
        return _format_coeff(mag)
    if mag != 1:
        factors.insert(0, _format_coeff(mag))
    return "*".join(factors)


def format_poly(p: Polynomial) -> str:
    """Deterministic text form: graded-lex descending, `**` powers."""
    if p.is_zero():
        return "0"
    parts = []
    for i, (mono, coeff) in enumerate(_sorted_terms(p.terms)):
        term = _format_term(mono, coeff)
        if i == 0:
            parts.append(f"-{term}" if coeff < 0 else term)
        else:
            parts.append(f" - {term}" if coeff < 0 else f" + {term}")
    return "".join(parts)


def _needs_parens_as_denominator(p: Polynomial) -> bool:
    if len(p.terms) != 1:
        return True
    mono, coeff = next(iter(p.terms.items()))
    if not mono:
        return False  # plain positive integer constant
    # A single symbol or symbol power with unit coefficient needs no parens.
    return coeff != 1 or len(mono) != 1


def format_canonical(rf: RationalFunc) -> str:
    """Round-trippable canonical text for a rational function."""
    num_s = format_poly(rf.num)
    if rf.den == Polynomial.one():
        return num_s
    if len(rf.num.terms) > 1:
        num_s = f"({num_s})"
    den_s = format_poly(rf.den)
    if _needs_parens_as_denominator(rf.den):
        den_s = f"({den_s})"
    return f"{num_s}/{den_s}"


def parse_rational(text: str) -> RationalFunc:
    """Convenience: parse equation text straight to a RationalFunc."""
    return to_rational(parse_equation(text))
