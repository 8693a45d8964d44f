"""Left Riemann sums over [0, K] and [0, K]^2 with a-priori error certificates.

Two certificates are available for the exponential integrands
J(y) = int F(x) exp(-y^2 s(x)^2) dx:

* derivative: |J'(y)| <= 2 K B_f N^2, so the left rule errs by at most
  (that bound) * eps * K;
* variation: int_0^K |J'(y)| dy <= int |F| (1 - e^{-K^2 s^2}) <= B_f, so the
  left rule errs by at most eps * B_f regardless of K and N.

Both are sound; the volume engine uses whichever needs fewer nodes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .integrand import sum_bound
from .moments import MomentFamily
from .polynomial import as_fraction, integrate_unit, multiply


@dataclass(frozen=True)
class QuadraturePlan:
    """Equal-step grid on [0, K] (per axis) with its certified error.

    For ``certificate == "derivative"`` the error is
    derivative_bound * step * K (times K again for two axes); for
    ``"variation"`` it is variation_bound * step (times 2K for two axes).
    """

    K: float
    nodes: int
    derivative_bound: float | None
    certified_error: float
    dims: int = 1
    certificate: str = "derivative"
    variation_bound: float | None = None
    rule: str = "left"

    @property
    def step(self) -> float:
        return self.K / self.nodes

    def with_rule(self, rule: str) -> "QuadraturePlan":
        if rule not in ("left", "midpoint"):
            raise ValueError(f"unknown rule {rule!r}")
        return QuadraturePlan(self.K, self.nodes, self.derivative_bound, self.certified_error,
                              self.dims, self.certificate, self.variation_bound, rule)


def _up(x: Fraction) -> float:
    v = float(x)
    return v if Fraction(v) >= x else math.nextafter(v, math.inf)


def sqrt_up(x: Fraction) -> float:
    """A float that is >= sqrt(x) for a non-negative rational x."""
    v = math.sqrt(x)
    while Fraction(v) * Fraction(v) < x:
        v = math.nextafter(v, math.inf)
    return v


def weight_l1_bound(fam: MomentFamily) -> float:
    """Upper bound on int |prod f| through Cauchy-Schwarz: sqrt(prod int f_q^2)."""
    total = Fraction(1)
    for f in fam.f:
        total *= integrate_unit(multiply(f, f))
    return sqrt_up(total)


def derivative_bound(fam: MomentFamily, K) -> float:
    """2 K B_f B_g^2: a bound on |dJ/dy| for |y| <= K.

    B_f bounds int |prod f| and B_g bounds |sum g| on the cube.
    """
    n_g = sum_bound(fam.g)
    if n_g == 0:
        return 0.0
    return _up(2 * as_fraction(K) * Fraction(weight_l1_bound(fam)) * n_g * n_g)


def _nodes_for(scale: Fraction, delta) -> int:
    delta = as_fraction(delta)
    if delta <= 0:
        raise ValueError("target error must be positive")
    if scale <= 0:
        return 1
    return max(1, math.ceil(scale / delta))


def plan_quadrature(K, delta, derivative_bound: float, dims: int = 1) -> QuadraturePlan:
    """Fewest equal steps with derivative_bound * eps * K**dims <= delta."""
    Kf = as_fraction(K)
    D = as_fraction(derivative_bound)
    M = _nodes_for(D * Kf ** (dims + 1), delta)
    err = _up(D * Kf ** (dims + 1) / M) if D else 0.0
    return QuadraturePlan(float(K), M, float(derivative_bound), err, dims, "derivative")


def plan_quadrature_variation(K, delta, variation_bound: float, dims: int = 1) -> QuadraturePlan:
    """Fewest equal steps with variation_bound * eps (times 2K for 2-D) <= delta."""
    Kf = as_fraction(K)
    V = as_fraction(variation_bound)
    scale = V * Kf if dims == 1 else 2 * V * Kf * Kf
    M = _nodes_for(scale, delta)
    err = _up(scale / M) if V else 0.0
    return QuadraturePlan(float(K), M, None, err, dims, "variation", float(variation_bound))


def grid_nodes(plan: QuadraturePlan) -> list[float]:
    M, K = plan.nodes, plan.K
    if plan.rule == "midpoint":
        return [(2 * i + 1) * K / (2 * M) for i in range(M)]
    return [i * K / M for i in range(M)]


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(v) for v in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def riemann_1d(f: Callable[[float], float], plan: QuadraturePlan, workers: int = 1) -> float:
    """eps * sum_i f(y_i). The reduction is exactly rounded, so the result
    does not depend on how evaluations were scheduled."""
    values = _map(f, grid_nodes(plan), workers)
    return math.fsum(values) * plan.K / plan.nodes


def riemann_2d(f: Callable[[float, float], float], plan: QuadraturePlan, workers: int = 1) -> float:
    ys = grid_nodes(plan)

    def row(y):
        return math.fsum(f(y, z) for z in ys)

    rows = _map(row, ys, workers)
    eps = plan.K / plan.nodes
    return math.fsum(rows) * eps * eps


def riemann_2d_separable(grid_sum: Callable, plan: QuadraturePlan) -> float:
    """Same left (or midpoint) sum as riemann_2d for integrands that provide
    ``grid_sum(ys, zs)``, the exact total over the tensor grid."""
    nodes = grid_nodes(plan)
    eps = plan.K / plan.nodes
    return grid_sum(nodes, nodes) * eps * eps
