"""Exact block moments  int prod f_q * (sum g_q)^m * (sum h_q)^r  over [0,1]^block.

A table over a block of coordinates stores, for each h-power r, the
exponential generating function

    row_r(s) = sum_m values(m, r) / (m! r!) * s^m

as a flint ``fmpq_poly``. In that form the binomial merge of two adjacent
blocks is a truncated product of generating functions, which FLINT does
with fast integer multiplication. All arithmetic is exact.

Leaf tables come from an integration-by-parts recurrence on
A[m][j] = int_0^1 x^j g(x)^m dx, which avoids forming g^m explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Sequence

import flint
from gmpy2 import mpq

from .errors import PreconditionError
from .polynomial import ONE, UnivariatePolynomial, integrate_unit, multiply, power

BRUTE_FORCE_MAX_N = 6
BRUTE_FORCE_MAX_ORDER = 6


class OracleScaleError(PreconditionError):
    """Raised when the multinomial oracle is asked for an infeasible size."""


@dataclass(frozen=True)
class MomentFamily:
    """Weights f, residual pieces g and (optionally) second residual pieces h."""

    f: tuple[UnivariatePolynomial, ...]
    g: tuple[UnivariatePolynomial, ...]
    h: tuple[UnivariatePolynomial, ...] | None = None

    def __post_init__(self):
        f, g = tuple(self.f), tuple(self.g)
        h = None if self.h is None else tuple(self.h)
        if not g:
            raise ValueError("a moment family needs at least one coordinate")
        if len(f) != len(g) or (h is not None and len(h) != len(g)):
            raise ValueError("f, g and h must all have length n")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)

    @classmethod
    def plain(cls, g: Sequence[UnivariatePolynomial], h=None) -> "MomentFamily":
        """All weights equal to one."""
        return cls((ONE,) * len(g), tuple(g), None if h is None else tuple(h))

    @property
    def n(self) -> int:
        return len(self.g)

    def leaf_key(self, q: int):
        hq = None if self.h is None else self.h[q].coefficients
        return (self.f[q].coefficients, self.g[q].coefficients, hq)

    def swapped(self) -> "MomentFamily":
        if self.h is None:
            raise ValueError("family has no h to swap with")
        return MomentFamily(self.f, self.h, self.g)


@dataclass
class MomentStats:
    """Operation counters, used to check the cost shape of the DP."""

    leaves: int = 0
    merges: int = 0
    multiplications: int = 0
    cache_hits: int = 0


@dataclass(frozen=True, eq=False)
class BlockMomentTable:
    lo: int
    hi: int
    max_g_power: int
    max_h_power: int
    rows: tuple = field(repr=False)

    @property
    def block(self) -> tuple[int, int]:
        return (self.lo, self.hi)

    def _check(self, m: int, r: int) -> None:
        if not (0 <= m <= self.max_g_power and 0 <= r <= self.max_h_power):
            raise IndexError(
                f"({m}, {r}) outside table of depth ({self.max_g_power}, {self.max_h_power})"
            )

    def egf(self, m: int, r: int = 0) -> flint.fmpq:
        """values(m, r) / (m! r!) as an exact flint rational."""
        self._check(m, r)
        row = self.rows[r]
        return row[m] if m <= row.degree() else flint.fmpq(0)

    def value(self, m: int, r: int = 0) -> Fraction:
        c = self.egf(m, r) * factorial(m) * factorial(r)
        return Fraction(int(c.p), int(c.q))

    @property
    def values(self) -> dict[tuple[int, int], Fraction]:
        return {
            (m, r): self.value(m, r)
            for r in range(self.max_h_power + 1)
            for m in range(self.max_g_power + 1)
        }

    def same_values(self, other: "BlockMomentTable") -> bool:
        return (
            self.max_g_power == other.max_g_power
            and self.max_h_power == other.max_h_power
            and all(a == b for a, b in zip(self.rows, other.rows))
        )

    def __eq__(self, other):
        if not isinstance(other, BlockMomentTable):
            return NotImplemented
        return self.block == other.block and self.same_values(other)

    __hash__ = None

    def relabel(self, lo: int, hi: int) -> "BlockMomentTable":
        return BlockMomentTable(lo, hi, self.max_g_power, self.max_h_power, self.rows)


def unit_power_moments(g: Sequence, P: int, J: int) -> list[list[mpq]]:
    """A[m][j] = int_0^1 x^j g(x)^m dx for 0 <= m <= P and 0 <= j <= J.

    With d = deg g >= 1, integrating the derivative of x^k g^(m+1) over
    [0, 1] gives one linear relation per k on row m:

        k = 0:   sum_i g_i (m+1) i A[m][i-1]        = g(1)^(m+1) - g(0)^(m+1)
        k >= 1:  sum_i g_i ((m+1) i + k) A[m][k-1+i] = g(1)^(m+1)

    The relation for k introduces A[m][k-1+d] with the non-zero factor
    g_d ((m+1) d + k), so the row follows from its first d-1 entries.
    Those come from the previous row via A[m][k] = sum_i g_i A[m-1][k+i].
    """
    gq = [mpq(Fraction(c).numerator, Fraction(c).denominator) for c in g]
    while len(gq) > 1 and gq[-1] == 0:
        gq.pop()
    d = len(gq) - 1
    if d == 0:
        c = gq[0]
        base = [mpq(1, j + 1) for j in range(J + 1)]
        out, cm = [], mpq(1)
        for _ in range(P + 1):
            out.append([cm * b for b in base])
            cm *= c
        return out

    width = max(J, 2 * d - 2)
    lead = gq[d]
    g1 = sum(gq)
    g0 = gq[0]
    prev = [mpq(1, j + 1) for j in range(width + 1)]
    out = [prev[: J + 1]]
    g1p, g0p = g1, g0  # g(1)^(m+1), g(0)^(m+1)
    for m in range(1, P + 1):
        g1p *= g1
        g0p *= g0
        a = [sum(gq[i] * prev[k + i] for i in range(d + 1)) for k in range(d - 1)]
        s = g1p - g0p
        for i in range(1, d):
            s -= gq[i] * ((m + 1) * i) * a[i - 1]
        a.append(s / (lead * ((m + 1) * d)))
        k = 1
        while len(a) <= width:
            s = g1p
            for i in range(d):
                s -= gq[i] * ((m + 1) * i + k) * a[k - 1 + i]
            a.append(s / (lead * ((m + 1) * d + k)))
            k += 1
        out.append(a[: J + 1])
        prev = a
    return out


def _egf_row(values: Sequence[mpq], r: int) -> flint.fmpq_poly:
    scale = factorial(r)
    coeffs = []
    fact = 1
    for m, v in enumerate(values):
        if m:
            fact *= m
        q = v / (fact * scale)
        coeffs.append(flint.fmpq(int(q.numerator), int(q.denominator)))
    return flint.fmpq_poly(coeffs)


def _leaf_rows(f: UnivariatePolynomial, g: UnivariatePolynomial, h, P: int, Q: int) -> tuple:
    if Q > 0 and h is None:
        raise ValueError("h-powers requested but the family has no h")
    weights = []
    w = f
    for _ in range(Q + 1):
        weights.append(w)
        if h is not None:
            w = multiply(w, h)
    J = max(w.degree for w in weights)
    A = unit_power_moments(g.coefficients, P, J)
    # vals[r][m] = sum_j w_r[j] A[m][j], as one exact matrix product
    W = flint.fmpq_mat(Q + 1, J + 1)
    for r, w in enumerate(weights):
        for j, c in enumerate(w.coefficients):
            W[r, j] = flint.fmpq(c.numerator, c.denominator)
    At = flint.fmpq_mat(J + 1, P + 1)
    for m, Am in enumerate(A):
        for j, v in enumerate(Am):
            At[j, m] = flint.fmpq(int(v.numerator), int(v.denominator))
    V = W * At
    rows = []
    inv_m = [flint.fmpq(1)]
    for m in range(1, P + 1):
        inv_m.append(inv_m[-1] / m)
    for r in range(Q + 1):
        scale = flint.fmpq(1, factorial(r))
        rows.append(flint.fmpq_poly([V[r, m] * inv_m[m] * scale for m in range(P + 1)]))
    return tuple(rows)


def _pack(rows: tuple, stride: int) -> flint.fmpq_poly:
    coeffs = []
    for row in rows:
        c = row.coeffs()
        coeffs += c + [0] * (stride - len(c))
    return flint.fmpq_poly(coeffs)


# Above this estimated size (in bits) of the packed product, merge row by
# row instead; flint's single large multiplication needs several times the
# output size in scratch memory.
PACKED_PRODUCT_LIMIT_BITS = 1 << 30


def _packed_bits(left: tuple, right: tuple, stride: int) -> int:
    def height(rows):
        return max(r.numer().height_bits() + r.denom().bit_length() for r in rows)

    length = 2 * len(left) * stride
    return length * (height(left) + height(right) + length.bit_length())


def _merge_rows_direct(left: tuple, right: tuple, P: int, Q: int) -> tuple:
    rows = []
    for r in range(Q + 1):
        acc = flint.fmpq_poly(0)
        for j in range(r + 1):
            acc += left[j].mul_low(right[r - j], P + 1)
        rows.append(acc)
    return tuple(rows)


def _merge_rows(left: tuple, right: tuple, P: int, Q: int) -> tuple:
    if Q == 0:
        return (left[0].mul_low(right[0], P + 1),)
    if _packed_bits(left, right, 2 * P + 1) > PACKED_PRODUCT_LIMIT_BITS:
        return _merge_rows_direct(left, right, P, Q)
    # Kronecker substitution: row r sits at offset r * stride, and a stride
    # of 2P + 1 keeps the full products of different rows apart.
    stride = 2 * P + 1
    prod = (_pack(left, stride) * _pack(right, stride)).coeffs()
    rows = []
    for r in range(Q + 1):
        chunk = prod[r * stride : r * stride + P + 1]
        rows.append(flint.fmpq_poly(chunk) if chunk else flint.fmpq_poly(0))
    return tuple(rows)


def _merge_cost(P: int, Q: int) -> int:
    # coefficient products in the binomial double convolution
    return ((P + 1) * (P + 2) // 2) * ((Q + 1) * (Q + 2) // 2)


def leaf_moments(q: int, fam: MomentFamily, P: int, Q: int = 0) -> BlockMomentTable:
    if P < 0 or Q < 0:
        raise ValueError("table depths must be non-negative")
    h = None if fam.h is None else fam.h[q]
    rows = _leaf_rows(fam.f[q], fam.g[q], h, P, Q)
    return BlockMomentTable(q, q + 1, P, Q, rows)


def merge(left: BlockMomentTable, right: BlockMomentTable, stats: MomentStats | None = None) -> BlockMomentTable:
    if left.hi != right.lo:
        raise ValueError(f"blocks {left.block} and {right.block} are not adjacent")
    if (left.max_g_power, left.max_h_power) != (right.max_g_power, right.max_h_power):
        raise ValueError("tables have different depths")
    P, Q = left.max_g_power, left.max_h_power
    if stats is not None:
        stats.merges += 1
        stats.multiplications += _merge_cost(P, Q)
    return BlockMomentTable(left.lo, right.hi, P, Q, _merge_rows(left.rows, right.rows, P, Q))


def block_moments(
    fam: MomentFamily,
    P: int,
    Q: int = 0,
    *,
    cache: dict | None = None,
    stats: MomentStats | None = None,
) -> BlockMomentTable:
    """Full-cube table from a balanced tree of merges, split at floor(n/2).

    ``cache`` maps block contents to generating-function rows. Passing the
    same dict for several families shares every subtree with identical
    polynomials, including repeated leaves inside one family.
    """
    if P < 0 or Q < 0:
        raise ValueError("table depths must be non-negative")
    if Q > 0 and fam.h is None:
        raise ValueError("h-powers requested but the family has no h")
    if cache is None:
        cache = {}

    def build(lo: int, hi: int) -> tuple:
        key = (P, Q, tuple(fam.leaf_key(q) for q in range(lo, hi)))
        hit = cache.get(key)
        if hit is not None:
            if stats is not None:
                stats.cache_hits += 1
            return hit
        if hi - lo == 1:
            if stats is not None:
                stats.leaves += 1
            h = None if fam.h is None else fam.h[lo]
            rows = _leaf_rows(fam.f[lo], fam.g[lo], h, P, Q)
        else:
            mid = lo + (hi - lo) // 2
            left, right = build(lo, mid), build(mid, hi)
            if stats is not None:
                stats.merges += 1
                stats.multiplications += _merge_cost(P, Q)
            rows = _merge_rows(left, right, P, Q)
        cache[key] = rows
        return rows

    return BlockMomentTable(0, fam.n, P, Q, build(0, fam.n))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _multinomial(alpha) -> int:
    out = factorial(sum(alpha))
    for a in alpha:
        out //= factorial(a)
    return out


def brute_force_moment(fam: MomentFamily, m: int, r: int = 0) -> Fraction:
    """Expand (sum g)^m (sum h)^r into separable monomials and integrate.

    Independent of the recurrence and of the merge: it only uses
    polynomial power/multiply/integrate on single coordinates.
    """
    n = fam.n
    if n > BRUTE_FORCE_MAX_N or m + r > BRUTE_FORCE_MAX_ORDER:
        raise OracleScaleError(
            f"oracle scale exceeded: n={n}, m+r={m + r} "
            f"(limits n<={BRUTE_FORCE_MAX_N}, m+r<={BRUTE_FORCE_MAX_ORDER})"
        )
    if r > 0 and fam.h is None:
        raise ValueError("h-powers requested but the family has no h")
    leaf_cache: dict = {}

    def leaf(q: int, a: int, b: int) -> Fraction:
        key = (q, a, b)
        if key not in leaf_cache:
            poly = multiply(fam.f[q], power(fam.g[q], a))
            if b:
                poly = multiply(poly, power(fam.h[q], b))
            leaf_cache[key] = integrate_unit(poly)
        return leaf_cache[key]

    total = Fraction(0)
    for alpha in _compositions(m, n):
        ca = _multinomial(alpha)
        for beta in _compositions(r, n):
            term = Fraction(ca * _multinomial(beta))
            for q in range(n):
                term *= leaf(q, alpha[q], beta[q])
                if term == 0:
                    break
            total += term
    return total
