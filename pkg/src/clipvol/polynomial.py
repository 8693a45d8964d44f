"""Exact univariate polynomials over the rationals, restricted to [0, 1].

Coefficients are stored lowest power first. Everything here is exact; the
only place a float appears is ``to_float_coefficients`` which callers use
for vectorised sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Sequence

Rational = Fraction | int


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions, decimal strings and 'p/q' strings to Fraction.

    Floats are accepted and converted exactly (so 0.1 becomes the binary
    value, not 1/10); pass strings when the decimal value is intended.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, (int, float, str)):
        return Fraction(value)
    # gmpy2.mpq, flint.fmpq and friends expose numerator/denominator
    num = getattr(value, "numerator", None)
    den = getattr(value, "denominator", None)
    if num is not None and den is not None:
        return Fraction(int(num), int(den))
    raise TypeError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True)
class UnivariatePolynomial:
    """p(x) = sum_j coefficients[j] * x**j with exact rational coefficients."""

    coefficients: tuple[Fraction, ...]

    def __post_init__(self):
        coeffs = tuple(as_fraction(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("a polynomial needs at least one coefficient")
        end = len(coeffs)
        while end > 1 and coeffs[end - 1] == 0:
            end -= 1
        object.__setattr__(self, "coefficients", coeffs[:end])

    @classmethod
    def constant(cls, c) -> "UnivariatePolynomial":
        return cls((c,))

    @classmethod
    def monomial(cls, degree: int, c=1) -> "UnivariatePolynomial":
        return cls((0,) * degree + (c,))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return self.coefficients == (Fraction(0),)

    def is_one(self) -> bool:
        return self.coefficients == (Fraction(1),)

    def __call__(self, x) -> Fraction:
        return evaluate(self, x)

    def __add__(self, other):
        return add(self, _coerce(other))

    __radd__ = __add__

    def __neg__(self):
        return UnivariatePolynomial(tuple(-c for c in self.coefficients))

    def __sub__(self, other):
        return add(self, -_coerce(other))

    def __rsub__(self, other):
        return add(_coerce(other), -self)

    def __mul__(self, other):
        return multiply(self, _coerce(other))

    __rmul__ = __mul__

    def __pow__(self, m: int):
        return power(self, m)

    def __repr__(self) -> str:
        terms = []
        for j, c in enumerate(self.coefficients):
            if c == 0 and self.degree > 0:
                continue
            terms.append(f"{c}" if j == 0 else f"{c}*x^{j}")
        return "Poly(" + " + ".join(terms) + ")"


Poly = UnivariatePolynomial
ZERO = UnivariatePolynomial((0,))
ONE = UnivariatePolynomial((1,))
X = UnivariatePolynomial((0, 1))


def _coerce(value) -> UnivariatePolynomial:
    if isinstance(value, UnivariatePolynomial):
        return value
    return UnivariatePolynomial.constant(value)


def add(p: UnivariatePolynomial, q: UnivariatePolynomial) -> UnivariatePolynomial:
    a, b = p.coefficients, q.coefficients
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for j, c in enumerate(b):
        out[j] += c
    return UnivariatePolynomial(tuple(out))


def multiply(p: UnivariatePolynomial, q: UnivariatePolynomial) -> UnivariatePolynomial:
    a, b = p.coefficients, q.coefficients
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca == 0:
            continue
        for j, cb in enumerate(b):
            out[i + j] += ca * cb
    return UnivariatePolynomial(tuple(out))


def power(p: UnivariatePolynomial, m: int) -> UnivariatePolynomial:
    """p**m by repeated squaring."""
    if m < 0:
        raise ValueError("negative powers are not polynomials")
    result = ONE
    base = p
    while m:
        if m & 1:
            result = multiply(result, base)
        m >>= 1
        if m:
            base = multiply(base, base)
    return result


def integrate_unit(p: UnivariatePolynomial) -> Fraction:
    return sum((c / (j + 1) for j, c in enumerate(p.coefficients)), Fraction(0))


def sup_bound_unit(p: UnivariatePolynomial) -> Fraction:
    """Sum of |c_j|: a cheap certified bound on max |p| over [0, 1]."""
    return sum((abs(c) for c in p.coefficients), Fraction(0))


def evaluate(p: UnivariatePolynomial, x) -> Fraction:
    x = as_fraction(x)
    acc = Fraction(0)
    for c in reversed(p.coefficients):
        acc = acc * x + c
    return acc


def compose_affine(p: UnivariatePolynomial, a, w) -> UnivariatePolynomial:
    """Return q(t) = p(a + w*t)."""
    lin = UnivariatePolynomial((a, w))
    acc = ZERO
    for c in reversed(p.coefficients):
        acc = add(multiply(acc, lin), UnivariatePolynomial.constant(c))
    return acc


def shift(p: UnivariatePolynomial, c) -> UnivariatePolynomial:
    """Return p(x + c)."""
    return compose_affine(p, c, 1)


def bernstein_coefficients(p: UnivariatePolynomial) -> list[Fraction]:
    """Coefficients of p in the degree-d Bernstein basis on [0, 1]."""
    d = p.degree
    c = p.coefficients
    return [
        sum((Fraction(comb(i, j), comb(d, j)) * c[j] for j in range(i + 1)), Fraction(0))
        for i in range(d + 1)
    ]


def range_unit(p: UnivariatePolynomial, depth: int = 4) -> tuple[Fraction, Fraction]:
    """Certified enclosure (lo, hi) of p over [0, 1].

    Uses the Bernstein convex-hull property on 2**depth equal subintervals.
    The overestimate shrinks like 4**-depth, which is plenty for choosing
    series orders.
    """
    if p.degree <= 1:
        v0, v1 = p.coefficients[0], evaluate(p, 1)
        return min(v0, v1), max(v0, v1)
    pieces = 1 << depth
    width = Fraction(1, pieces)
    lo = hi = None
    for k in range(pieces):
        b = bernstein_coefficients(compose_affine(p, k * width, width))
        bl, bh = min(b), max(b)
        lo = bl if lo is None or bl < lo else lo
        hi = bh if hi is None or bh > hi else hi
    return lo, hi


def sup_abs_unit(p: UnivariatePolynomial, depth: int = 4) -> Fraction:
    lo, hi = range_unit(p, depth)
    return max(abs(lo), abs(hi))


def to_float_coefficients(p: UnivariatePolynomial) -> list[float]:
    return [float(c) for c in p.coefficients]

