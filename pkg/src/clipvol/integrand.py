"""Truncated Taylor evaluation of the exponential integrands.

    J1(y)    = int prod f * exp(-y^2 (sum g)^2)
             = sum_k (-y^2)^k / k! * values(2k)
    J2(y, z) = int prod f * exp(-y^2 (sum g)^2) * exp(-z^2 (sum h)^2)

The alternating sums have terms as large as exp(t_max) while the result
is at most int |prod f|, so they are accumulated in mpfr at a working
precision that grows linearly with t_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

import flint
import gmpy2
from gmpy2 import mpfr, mpq

from .errors import PreconditionError
from .constraint import ClippedCubeProblem, normalize, residual_bound
from .moments import BlockMomentTable, MomentFamily
from .polynomial import as_fraction, range_unit


class TableDepthError(PreconditionError):
    """The moment table does not reach the powers the series needs."""


@dataclass(frozen=True)
class SeriesPlan:
    """Truncation order and working precision for one sharpness K.

    ``t_parts`` holds the bound K^2 N_i^2 for each exponential factor;
    ``t_max`` is their sum.
    """

    t_max: float
    p: int
    precision_bits: int
    tolerance: float
    K: float = 1.0
    t_parts: tuple[float, ...] = ()

    def with_precision(self, bits: int) -> "SeriesPlan":
        return replace(self, precision_bits=int(bits))


def _round_up(x: Fraction) -> float:
    v = float(x)
    return v if Fraction(v) >= x else math.nextafter(v, math.inf)


def log_remainder_bound(t: float, p: int) -> float:
    """log of e^t t^(p+1) / (p+1)!  (Lagrange bound for the degree-p Taylor polynomial of e^-t)."""
    if t == 0:
        return -math.inf
    return t + (p + 1) * math.log(t) - math.lgamma(p + 2)


def remainder_bound(t: float, p: int) -> float:
    return math.exp(log_remainder_bound(t, p))


def truncation_order(t: float, tolerance: float, ceiling: int | None = None) -> int:
    """Smallest p with e^t t^(p+1)/(p+1)! <= tolerance."""
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return 0
    target = math.log(tolerance) - 1e-12 * (1.0 + t)
    # the bound increases in p until p ~ t - 1 and decreases after
    lo = 0 if t < 1 else max(0, math.ceil(t) - 1)
    if ceiling is None:
        hi = max(lo, 1)
        while log_remainder_bound(t, hi) > target:
            hi *= 2
    else:
        hi = ceiling
        if log_remainder_bound(t, hi) > target:
            raise ValueError(f"order {ceiling} cannot reach tolerance {tolerance} at t={t}")
    if t < 1 and log_remainder_bound(t, 0) <= target:
        return 0
    while lo < hi:
        mid = (lo + hi) // 2
        if log_remainder_bound(t, mid) <= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


def working_precision(t_max: float, p: int, tolerance: float) -> int:
    """Bits so that rounding in an alternating sum of size e^t_max stays below the tolerance."""
    guard = max(0, math.ceil(math.log2(1.0 / tolerance))) + (p + 1).bit_length()
    return math.ceil(1.45 * t_max) + 64 + guard


def sum_bound(polys: Sequence) -> Fraction:
    """Certified bound on |sum_q polys[q](x_q)| over the cube."""
    lo = hi = Fraction(0)
    for p in polys:
        a, b = range_unit(p)
        lo += a
        hi += b
    return max(abs(lo), abs(hi))


def plan_series(target, K, tolerance: float, *, precision_bits: int | None = None) -> SeriesPlan:
    """Plan for a ClippedCubeProblem or a MomentFamily at sharpness K."""
    if not K > 0:
        raise ValueError("K must be positive")
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    if isinstance(target, ClippedCubeProblem):
        bounds = [residual_bound(normalize(c)) for c in target.constraints]
    elif isinstance(target, MomentFamily):
        bounds = [sum_bound(target.g)]
        if target.h is not None:
            bounds.append(sum_bound(target.h))
    else:
        raise TypeError("plan_series needs a problem or a moment family")
    k2 = as_fraction(K) ** 2
    parts = [k2 * b * b for b in bounds]
    t_parts = tuple(_round_up(x) for x in parts)
    t_max = _round_up(sum(parts, Fraction(0)))
    p = truncation_order(t_max, tolerance)
    bits = precision_bits if precision_bits is not None else working_precision(t_max, p, tolerance)
    return SeriesPlan(t_max, p, int(bits), float(tolerance), float(K), t_parts)


def _fmpq_to_mpfr(c) -> mpfr:
    if isinstance(c, flint.fmpq):
        return mpfr(mpq(int(c.p), int(c.q)))
    c = as_fraction(c)
    return mpfr(mpq(c.numerator, c.denominator))


def odd_even_coefficients(table: BlockMomentTable, p: int, offset: int = 0) -> list:
    """c_k = values(2k + offset) / k!  for k <= p, exact (flint rationals)."""
    need = 2 * p + offset
    if table.max_g_power < need:
        raise TableDepthError(f"series of order {p} needs g-powers up to {need}, table has {table.max_g_power}")
    out = []
    ratio = 1  # (2k+offset)! / k!
    for k in range(p + 1):
        if k == 0:
            ratio = math.factorial(offset)
        else:
            ratio = ratio * (2 * k + offset - 1) * (2 * k + offset) // k
        out.append(table.egf(2 * k + offset) * ratio)
    return out


def double_coefficients(table: BlockMomentTable, p: int, q: int, offset: int = 0) -> list[list]:
    """c_ij = values(2i+offset, 2j+offset) / (i! j!)."""
    need_g, need_h = 2 * p + offset, 2 * q + offset
    if table.max_g_power < need_g or table.max_h_power < need_h:
        raise TableDepthError(
            f"double series needs powers ({need_g}, {need_h}), table has "
            f"({table.max_g_power}, {table.max_h_power})"
        )

    def ratios(count):
        out, ratio = [], math.factorial(offset)
        for k in range(count + 1):
            if k:
                ratio = ratio * (2 * k + offset - 1) * (2 * k + offset) // k
            out.append(ratio)
        return out

    ri, rj = ratios(p), ratios(q)
    return [[table.egf(2 * i + offset, 2 * j + offset) * (ri[i] * rj[j]) for j in range(q + 1)] for i in range(p + 1)]


class ExponentialSeries:
    """y -> sum_k a_k (-y^2)^k with a_k = c_k (already divided by k!).

    The order used at node y is the smallest one whose remainder bound at
    t = y^2 * t_scale is within the tolerance, so small |y| costs little.
    """

    def __init__(self, coefficients: Sequence, t_scale: float, tolerance: float, precision_bits: int):
        self.precision_bits = int(precision_bits)
        self.t_scale = float(t_scale)
        self.tolerance = float(tolerance)
        coeffs = list(coefficients)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        with gmpy2.context(gmpy2.get_context(), precision=self.precision_bits):
            self.a = [_fmpq_to_mpfr(c) for c in coeffs]

    @property
    def max_order(self) -> int:
        return len(self.a) - 1

    def order_at(self, y: float) -> int:
        if not self.a:
            return -1
        t = y * y * self.t_scale * (1 + 1e-15)
        return min(self.max_order, truncation_order(t, self.tolerance))

    def row(self, y: float) -> mpfr:
        """Value as an mpfr at the working precision."""
        if not self.a:
            return mpfr(0)
        p = self.order_at(y)
        with gmpy2.context(gmpy2.get_context(), precision=self.precision_bits):
            w = -(mpfr(y) ** 2)
            acc = mpfr(0)
            pw = mpfr(1)
            a = self.a
            for k in range(p + 1):
                acc = gmpy2.fma(a[k], pw, acc)
                pw *= w
            return acc

    def __call__(self, y: float) -> float:
        return float(self.row(y))


class DoubleExponentialSeries:
    """(y, z) -> sum_ij a_ij (-y^2)^i (-z^2)^j, evaluated row by row.

    For a fixed y the inner sums b_j(y) = sum_i a_ij (-y^2)^i are cached,
    so a row-major sweep costs one O(p^2) step per row and O(p) per node.
    """

    def __init__(self, coefficients: Sequence[Sequence], t_scale_y: float, t_scale_z: float,
                 tolerance: float, precision_bits: int, cache_rows: int = 4096):
        self.precision_bits = int(precision_bits)
        self.t_scale_y = float(t_scale_y)
        self.t_scale_z = float(t_scale_z)
        self.tolerance = float(tolerance)
        self._cache: dict = {}
        self._cache_rows = cache_rows
        with gmpy2.context(gmpy2.get_context(), precision=self.precision_bits):
            self.a = [[_fmpq_to_mpfr(c) for c in row] for row in coefficients]
        self.p = len(self.a) - 1
        self.q = len(self.a[0]) - 1 if self.a else -1

    def _order(self, v: float, scale: float, cap: int) -> int:
        return min(cap, truncation_order(v * v * scale * (1 + 1e-15), self.tolerance))

    def _inner(self, y: float) -> list:
        hit = self._cache.get(y)
        if hit is not None:
            return hit
        py = self._order(y, self.t_scale_y, self.p)
        with gmpy2.context(gmpy2.get_context(), precision=self.precision_bits):
            w = -(mpfr(y) ** 2)
            b = [mpfr(0)] * (self.q + 1)
            pw = mpfr(1)
            for i in range(py + 1):
                row = self.a[i]
                for j in range(self.q + 1):
                    b[j] = gmpy2.fma(row[j], pw, b[j])
                pw *= w
        if len(self._cache) >= self._cache_rows:
            self._cache.clear()
        self._cache[y] = b
        return b

    def _power_sums(self, nodes: Sequence[float], scale: float, cap: int) -> list:
        """S_i = sum over nodes v whose order reaches i of (-v^2)^i."""
        sums = [mpfr(0)] * (cap + 1)
        for v in nodes:
            order = self._order(v, scale, cap)
            w = -(mpfr(v) ** 2)
            pw = mpfr(1)
            for i in range(order + 1):
                sums[i] += pw
                pw *= w
        return sums

    def grid_sum(self, ys: Sequence[float], zs: Sequence[float]) -> float:
        """sum_{y in ys, z in zs} of the per-node truncated value.

        Because the truncated double sum separates, this equals
        sum_ij a_ij S_i(ys) T_j(zs) with per-axis power sums, which costs
        O((|ys| + |zs|) p + p^2) instead of O(|ys| |zs| p).
        """
        if self.p < 0:
            return 0.0
        extra = 2 * max(len(ys), len(zs), 1).bit_length() + 8
        with gmpy2.context(gmpy2.get_context(), precision=self.precision_bits + extra):
            sy = self._power_sums(ys, self.t_scale_y, self.p)
            sz = self._power_sums(zs, self.t_scale_z, self.q)
            acc = mpfr(0)
            for i in range(self.p + 1):
                row = self.a[i]
                inner = mpfr(0)
                for j in range(self.q + 1):
                    inner = gmpy2.fma(row[j], sz[j], inner)
                acc = gmpy2.fma(inner, sy[i], acc)
            return float(acc)

    def __call__(self, y: float, z: float) -> float:
        if self.p < 0:
            return 0.0
        b = self._inner(y)
        pz = self._order(z, self.t_scale_z, self.q)
        with gmpy2.context(gmpy2.get_context(), precision=self.precision_bits):
            w = -(mpfr(z) ** 2)
            acc = mpfr(0)
            pw = mpfr(1)
            for j in range(pz + 1):
                acc = gmpy2.fma(b[j], pw, acc)
                pw *= w
            return float(acc)


def _check_node(v: float, plan: SeriesPlan) -> None:
    if abs(v) > plan.K * (1 + 1e-12):
        raise ValueError(f"node {v} lies outside [-K, K] with K={plan.K}")


def _scale(plan: SeriesPlan, index: int) -> float:
    if index >= len(plan.t_parts):
        return 0.0
    return plan.t_parts[index] / (plan.K * plan.K)


def eval_j1(y: float, fam: MomentFamily, table: BlockMomentTable, plan: SeriesPlan) -> float:
    _check_node(y, plan)
    coeffs = odd_even_coefficients(table, plan.p)
    series = ExponentialSeries(coeffs, _scale(plan, 0), plan.tolerance, plan.precision_bits)
    return series(y)


def eval_j2(y: float, z: float, fam: MomentFamily, table: BlockMomentTable, plan: SeriesPlan) -> float:
    _check_node(y, plan)
    _check_node(z, plan)
    coeffs = double_coefficients(table, plan.p, plan.p)
    series = DoubleExponentialSeries(coeffs, _scale(plan, 0), _scale(plan, 1), plan.tolerance, plan.precision_bits)
    return series(y, z)
