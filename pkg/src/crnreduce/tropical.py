"""Leading-order arithmetic in the scale parameter N.

Every quantity handled here is a finite sum of terms ``c * N**e`` with
positive coefficients ``c`` (numbers or positive sympy expressions) and
exact rational exponents ``e``.  Because no coefficient is negative,
sums never cancel and the leading term of a sum is the term of largest
exponent; this is what makes exact limits and orders decidable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import sympy as sp

N = sp.Symbol("N", positive=True)

Exponent = Union[Fraction, float]  # float only for +-inf


def as_fraction(value) -> Fraction:
    """Convert ``value`` (int, str ``p/q``, Fraction, sympy Rational) to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, sp.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, sp.Basic):
        raise ValueError(f"exponent {value} is not a rational number")
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**9)
    return Fraction(value)


def exponent_str(e: Exponent) -> str:
    if e == math.inf:
        return "+inf"
    if e == -math.inf:
        return "-inf"
    return str(e)


@dataclass(frozen=True)
class ScaledQuantity:
    """The leading-order pair ``coefficient * N**exponent``.

    ``ScaledQuantity.zero()`` is the distinguished zero (exponent ``-inf``).
    """

    exponent: Exponent
    coefficient: sp.Expr

    @classmethod
    def zero(cls) -> "ScaledQuantity":
        return cls(-math.inf, sp.Integer(0))

    @classmethod
    def of(cls, coefficient, exponent=0) -> "ScaledQuantity":
        return cls(as_fraction(exponent), sp.sympify(coefficient))

    @property
    def is_zero(self) -> bool:
        return self.exponent == -math.inf

    def __add__(self, other: "ScaledQuantity") -> "ScaledQuantity":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.exponent > other.exponent:
            return self
        if other.exponent > self.exponent:
            return other
        return ScaledQuantity(self.exponent, self.coefficient + other.coefficient)

    def __mul__(self, other: "ScaledQuantity") -> "ScaledQuantity":
        if self.is_zero or other.is_zero:
            return ScaledQuantity.zero()
        return ScaledQuantity(self.exponent + other.exponent,
                              self.coefficient * other.coefficient)

    def __truediv__(self, other: "ScaledQuantity") -> "ScaledQuantity":
        if other.is_zero:
            raise ZeroDivisionError("division by the zero scaled quantity")
        if self.is_zero:
            return self
        return ScaledQuantity(self.exponent - other.exponent,
                              self.coefficient / other.coefficient)

    def shift(self, exponent: Exponent) -> "ScaledQuantity":
        """Multiply by ``N**exponent``."""
        if self.is_zero:
            return self
        return ScaledQuantity(self.exponent + exponent, self.coefficient)

    def limit_after_scaling(self, exponent: Exponent) -> sp.Expr:
        """``lim_{N->inf} N**(-exponent) * self``: 0, the coefficient, or ``oo``."""
        if self.is_zero or self.exponent < exponent:
            return sp.Integer(0)
        if self.exponent == exponent:
            return self.coefficient
        return sp.oo

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        return f"({self.coefficient})*N^{self.exponent}"


class NPoly:
    """A generalized polynomial ``sum_e c_e N**e`` with positive coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for e, c in (terms or {}).items():
            c = sp.sympify(c)
            if c != 0:
                clean[as_fraction(e)] = c
        self.terms: dict[Fraction, sp.Expr] = clean

    @classmethod
    def monomial(cls, coefficient, exponent=0) -> "NPoly":
        return cls({as_fraction(exponent): coefficient})

    @classmethod
    def one(cls) -> "NPoly":
        return cls({Fraction(0): sp.Integer(1)})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "NPoly") -> "NPoly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out[e] + c if e in out else c
        return NPoly(out)

    def __mul__(self, other: "NPoly") -> "NPoly":
        out: dict[Fraction, sp.Expr] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = e1 + e2
                out[e] = out[e] + c1 * c2 if e in out else c1 * c2
        return NPoly(out)

    def leading(self) -> ScaledQuantity:
        if not self.terms:
            return ScaledQuantity.zero()
        e = max(self.terms)
        return ScaledQuantity(e, self.terms[e])

    def to_expr(self) -> sp.Expr:
        return sp.Add(*[c * N**sp.Rational(e.numerator, e.denominator)
                        for e, c in sorted(self.terms.items())])

    def __eq__(self, other) -> bool:
        return isinstance(other, NPoly) and self.terms == other.terms

    def __repr__(self) -> str:
        return f"NPoly({self.to_expr()})"


class RationalN:
    """Ratio of two :class:`NPoly` with a non-zero denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num: NPoly, den: NPoly | None = None):
        den = NPoly.one() if den is None else den
        if den.is_zero:
            raise ZeroDivisionError("zero denominator")
        self.num = num
        self.den = den

    @classmethod
    def zero(cls) -> "RationalN":
        return cls(NPoly())

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def _plain(self) -> bool:
        return self.den == NPoly.one()

    def __add__(self, other: "RationalN") -> "RationalN":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.den == other.den:
            return RationalN(self.num + other.num, self.den)
        return RationalN(self.num * other.den + other.num * self.den,
                         self.den * other.den)

    def __mul__(self, other: "RationalN") -> "RationalN":
        if other._plain():
            return RationalN(self.num * other.num, self.den)
        if self._plain():
            return RationalN(self.num * other.num, other.den)
        return RationalN(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "RationalN") -> "RationalN":
        return self * RationalN(other.den, other.num)

    def leading(self) -> ScaledQuantity:
        return self.num.leading() / self.den.leading()

    def to_expr(self) -> sp.Expr:
        return self.num.to_expr() / self.den.to_expr()

    def __repr__(self) -> str:
        return f"RationalN({self.to_expr()})"


def npoly_from_expr(expr: sp.Expr) -> NPoly:
    """Split a sum of monomials in ``N`` into an :class:`NPoly`."""
    expr = sp.expand(expr)
    out = NPoly()
    for term in sp.Add.make_args(expr):
        coeff, e = term.as_coeff_exponent(N)
        if coeff.has(N):
            raise ValueError(f"term {term} is not a monomial in N")
        if not e.is_Rational:
            raise ValueError(f"exponent of N in {term} is not rational")
        if coeff.is_positive is False or (coeff.is_number and coeff <= 0):
            raise ValueError(f"term {term} has a non-positive coefficient")
        out = out + NPoly.monomial(coeff, as_fraction(e))
    return out


def rational_from_expr(expr: sp.Expr) -> RationalN:
    """Convert a positive rational expression in ``N`` to :class:`RationalN`."""
    expr = sp.sympify(expr)
    if not expr.has(N):
        return RationalN(NPoly.monomial(expr))
    num, den = sp.fraction(sp.together(expr))
    return RationalN(npoly_from_expr(num), npoly_from_expr(den))
