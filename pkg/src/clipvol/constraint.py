"""Separable constraint sets {x : sum_i a_i(x_i) <= b} and clipped-cube problems."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .polynomial import (
    UnivariatePolynomial,
    as_fraction,
    evaluate,
    range_unit,
    sup_bound_unit,
)


@dataclass(frozen=True)
class BallShape:
    center: tuple[Fraction, ...]
    radius: Fraction


@dataclass(frozen=True)
class HalfspaceShape:
    normal: tuple[Fraction, ...]
    offset: Fraction


@dataclass(frozen=True)
class SeparableConstraint:
    """The set sum_i per_coordinate[i](x_i) <= offset.

    ``shape`` remembers how a ball or half-space was built. It does not
    take part in any computation except the ball-only error bound and
    problem-file serialisation, and it survives normalisation.
    """

    per_coordinate: tuple[UnivariatePolynomial, ...]
    offset: Fraction
    shape: BallShape | HalfspaceShape | None = field(default=None, compare=True)

    def __post_init__(self):
        polys = tuple(self.per_coordinate)
        if not polys:
            raise ValueError("a constraint needs at least one coordinate")
        for p in polys:
            if not isinstance(p, UnivariatePolynomial):
                raise TypeError("per_coordinate entries must be UnivariatePolynomial")
        object.__setattr__(self, "per_coordinate", polys)
        object.__setattr__(self, "offset", as_fraction(self.offset))

    @property
    def dimension(self) -> int:
        return len(self.per_coordinate)

    @property
    def is_ball(self) -> bool:
        return isinstance(self.shape, BallShape)

    def residual_terms(self) -> tuple[UnivariatePolynomial, ...]:
        """Per-coordinate g_q with rho(x) = sum_q g_q(x_q); needs offset 0."""
        if self.offset != 0:
            raise ValueError("residual_terms needs a normalized constraint (offset 0)")
        return tuple(-p for p in self.per_coordinate)


@dataclass(frozen=True)
class ClippedCubeProblem:
    """The unit cube [0,1]^n cut by zero, one or two separable constraints."""

    dimension: int
    constraints: tuple[SeparableConstraint, ...]

    def __post_init__(self):
        cons = tuple(self.constraints)
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if len(cons) > 2:
            raise ValueError("at most two constraints are supported")
        for c in cons:
            if c.dimension != self.dimension:
                raise ValueError(
                    f"constraint has {c.dimension} coordinates, problem has {self.dimension}"
                )
        object.__setattr__(self, "constraints", cons)

    def normalized(self) -> "ClippedCubeProblem":
        return ClippedCubeProblem(self.dimension, tuple(normalize(c) for c in self.constraints))

    def with_constraint(self, c: SeparableConstraint) -> "ClippedCubeProblem":
        return ClippedCubeProblem(self.dimension, self.constraints + (c,))

    def swapped(self) -> "ClippedCubeProblem":
        return ClippedCubeProblem(self.dimension, tuple(reversed(self.constraints)))


def _vector(values: Sequence) -> tuple[Fraction, ...]:
    return tuple(as_fraction(v) for v in values)


def from_ball(center: Sequence, radius) -> SeparableConstraint:
    """||x - C||^2 <= r^2 written as sum_i (x_i^2 - 2 C_i x_i + C_i^2) <= r^2."""
    center = _vector(center)
    radius = as_fraction(radius)
    if radius <= 0:
        raise ValueError("radius must be positive")
    polys = tuple(UnivariatePolynomial((c * c, -2 * c, 1)) for c in center)
    return SeparableConstraint(polys, radius * radius, BallShape(center, radius))


def from_halfspace(normal: Sequence, offset) -> SeparableConstraint:
    normal = _vector(normal)
    offset = as_fraction(offset)
    if all(w == 0 for w in normal):
        raise ValueError("half-space normal must be non-zero")
    polys = tuple(UnivariatePolynomial((0, w)) for w in normal)
    return SeparableConstraint(polys, offset, HalfspaceShape(normal, offset))


def normalize(c: SeparableConstraint) -> SeparableConstraint:
    """Move the offset into the polynomials, b/n per coordinate."""
    if c.offset == 0:
        return c
    share = c.offset / c.dimension
    polys = tuple(p - share for p in c.per_coordinate)
    return SeparableConstraint(polys, Fraction(0), c.shape)


def residual(c: SeparableConstraint, x: Sequence) -> Fraction:
    if len(x) != c.dimension:
        raise ValueError(f"point has {len(x)} coordinates, constraint has {c.dimension}")
    return c.offset - sum(
        (evaluate(p, xi) for p, xi in zip(c.per_coordinate, x)), Fraction(0)
    )


def residual_range(c: SeparableConstraint, method: str = "bernstein") -> tuple[Fraction, Fraction]:
    """Certified (lower, upper) bounds of the residual over the cube.

    ``method="coefficient"`` uses the absolute coefficient sum of every
    coordinate polynomial (very loose). The default encloses each
    coordinate polynomial with Bernstein coefficients on a subdivided
    interval, which is typically within a few percent of the true range.
    """
    if method == "coefficient":
        s = sum((sup_bound_unit(p) for p in c.per_coordinate), Fraction(0))
        return c.offset - s, c.offset + s
    if method != "bernstein":
        raise ValueError(f"unknown range method {method!r}")
    lo = hi = Fraction(0)
    for p in c.per_coordinate:
        plo, phi = range_unit(p)
        lo += plo
        hi += phi
    return c.offset - hi, c.offset - lo


def residual_bound(c: SeparableConstraint) -> Fraction:
    lo, hi = residual_range(c)
    return max(abs(lo), abs(hi))


def min_cube_distance_sq(center: Sequence) -> Fraction:
    total = Fraction(0)
    for ci in _vector(center):
        gap = max(Fraction(0), -ci, ci - 1)
        total += gap * gap
    return total


def min_cube_distance(center: Sequence) -> float:
    return math.sqrt(min_cube_distance_sq(center))
