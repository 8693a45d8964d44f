"""Smoothed volume T(K) = int_cube prod_i H_K(rho_i) and its error bounds.

Writing H_K(rho) = 1/2 + (rho/sqrt(pi)) int_0^K exp(-y^2 rho^2) dy and
multiplying out gives, for two constraints,

    T = 1/4 + 1/(2 sqrt(pi)) int_0^K dy int rho_0 e^{-y^2 rho_0^2}
            + 1/(2 sqrt(pi)) int_0^K dy int rho_1 e^{-y^2 rho_1^2}
            + 1/pi int_0^K int_0^K dy dz int rho_0 rho_1 e^{-y^2 rho_0^2} e^{-z^2 rho_1^2}

and for one constraint T = 1/2 + 1/sqrt(pi) int_0^K dy int rho e^{-y^2 rho^2}.

The residual factor can be split into its n coordinate pieces (one moment
family per piece, see ``expand_terms``) or kept whole, in which case the
series coefficients are odd moments of the residual itself. Both give the
same exact coefficients; the second needs one table instead of n.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import flint

from .constraint import (
    BallShape,
    ClippedCubeProblem,
    min_cube_distance_sq,
    normalize,
)
from .errors import BoundNotApplicable, PreconditionError
from .integrand import (
    DoubleExponentialSeries,
    ExponentialSeries,
    SeriesPlan,
    double_coefficients,
    odd_even_coefficients,
    plan_series,
    truncation_order,
    working_precision,
)
from .moments import MomentFamily, block_moments
from .polynomial import ONE, UnivariatePolynomial, as_fraction, multiply
from .quadrature import (
    QuadraturePlan,
    plan_quadrature,
    plan_quadrature_variation,
    riemann_1d,
    riemann_2d_separable,
    sqrt_up,
)

SQRT_PI = math.sqrt(math.pi)


def _fmpq(x: Fraction) -> flint.fmpq:
    return flint.fmpq(x.numerator, x.denominator)


DEFAULT_MAX_ORDER = 20000


@dataclass(frozen=True)
class ApproximationParams:
    K: float
    delta: float = 1e-4
    tau: float = 1e-8
    precision_bits: int | None = None
    rule: str = "left"
    route: str = "collapsed"
    workers: int = 1
    max_order: int = DEFAULT_MAX_ORDER


@dataclass(frozen=True)
class Term:
    coefficient: Fraction
    family: MomentFamily
    kind: int  # number of exponential factors


@dataclass(frozen=True)
class TermExpansion:
    i2: tuple[Term, ...]
    i3: tuple[Term, ...] = ()
    i4: tuple[Term, ...] = ()

    @property
    def terms(self) -> tuple[Term, ...]:
        return self.i2 + self.i3 + self.i4


@dataclass
class ComponentResult:
    value: float
    prefactor: float
    quadrature: QuadraturePlan | None
    quadrature_error: float
    series_error: float
    p: int
    precision_bits: int
    t_max: float


@dataclass
class VolumeReport:
    t_of_k: float
    i1: float
    i2: float
    i3: float
    i4: float
    error_bound: float | None
    certified_error: float
    quadrature_error: float
    series_error: float
    K: float
    delta: float
    tau: float
    p: int
    precision_bits: int
    epsilon: float
    nodes: int
    t_max: float
    certificate: str
    rule: str
    components: dict = field(default_factory=dict, repr=False)
    wall_time_ms: float | None = None

    def to_text(self, timing: bool = False) -> str:
        rows = [
            ("t_of_k", self.t_of_k),
            ("i1", self.i1),
            ("i2", self.i2),
            ("i3", self.i3),
            ("i4", self.i4),
            ("error_bound", "none" if self.error_bound is None else self.error_bound),
            ("certified_error", self.certified_error),
            ("quadrature_error", self.quadrature_error),
            ("series_error", self.series_error),
            ("K", self.K),
            ("delta", self.delta),
            ("tau", self.tau),
            ("p", self.p),
            ("precision_bits", self.precision_bits),
            ("epsilon", self.epsilon),
            ("nodes", self.nodes),
            ("t_max", self.t_max),
            ("certificate", self.certificate),
            ("rule", self.rule),
        ]
        if timing and self.wall_time_ms is not None:
            rows.append(("wall_time_ms", round(self.wall_time_ms, 3)))
        return "".join(f"{k}: {_fmt(v)}\n" for k, v in rows)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _require_normalized(problem: ClippedCubeProblem) -> None:
    for c in problem.constraints:
        if c.offset != 0:
            raise PreconditionError("expand_terms needs normalized constraints (offset 0)")


def _single_terms(g: tuple[UnivariatePolynomial, ...]) -> tuple[Term, ...]:
    n = len(g)
    out = []
    for q in range(n):
        f = tuple(g[q] if i == q else ONE for i in range(n))
        out.append(Term(Fraction(1), MomentFamily(f, g), 1))
    return tuple(out)


def _pair_terms(g, h) -> tuple[Term, ...]:
    n = len(g)
    out = []
    for q in range(n):
        for s in range(n):
            f = []
            for i in range(n):
                if i == q and i == s:
                    f.append(multiply(g[i], h[i]))
                elif i == q:
                    f.append(g[i])
                elif i == s:
                    f.append(h[i])
                else:
                    f.append(ONE)
            out.append(Term(Fraction(1), MomentFamily(tuple(f), g, h), 2))
    return tuple(out)


def expand_terms(problem: ClippedCubeProblem) -> TermExpansion:
    """Distribute each residual factor over its coordinate pieces.

    With rho = sum_q g_q, the one-exponential integrand rho e^{-y^2 rho^2}
    becomes n families with weight g_q at coordinate q. The two-exponential
    integrand rho_0 rho_1 e^{...} e^{...} becomes n^2 families.
    """
    _require_normalized(problem)
    cons = problem.constraints
    if not cons:
        return TermExpansion(())
    g = cons[0].residual_terms()
    if len(cons) == 1:
        return TermExpansion(_single_terms(g))
    h = cons[1].residual_terms()
    return TermExpansion(_single_terms(g), _single_terms(h), _pair_terms(g, h))


def prism_bound(center) -> float:
    """sqrt(n) (sqrt(n)/2 + ||C - 1/2||), bounding vol(conv(C, cube)) for C outside the cube."""
    c = [float(as_fraction(v)) for v in center]
    n = len(c)
    dist = math.sqrt(sum((v - 0.5) ** 2 for v in c))
    return math.sqrt(n) * (math.sqrt(n) / 2 + dist)


def smoothing_bound(problem: ClippedCubeProblem, K) -> float:
    """A-priori bound on |vol - T(K)| for balls at distance >= 1 from the cube."""
    if not K > 0:
        raise ValueError("K must be positive")
    if not problem.constraints:
        raise BoundNotApplicable("no ball constraints")
    centers = []
    for i, c in enumerate(problem.constraints):
        if not isinstance(c.shape, BallShape):
            raise BoundNotApplicable(f"constraint {i} is not a ball")
        if min_cube_distance_sq(c.shape.center) < 1:
            raise BoundNotApplicable(f"ball {i} has its center closer than 1 to the cube")
        centers.append(c.shape.center)
    n = problem.dimension
    return n / (math.sqrt(2 * n - 1) * float(K)) * sum(prism_bound(c) for c in centers)


def _pick_plan(K, delta, derivative: float, variation: float, dims: int, rule: str) -> QuadraturePlan:
    a = plan_quadrature(K, delta, derivative, dims)
    b = plan_quadrature_variation(K, delta, variation, dims)
    best = b if b.nodes < a.nodes else a
    return best.with_rule(rule)


def _rounding_error(t_max: float, p: int, bits: int, weight: float) -> float:
    # rounding of coefficients and of each fma in a sum bounded by weight * e^t_max
    log2_err = math.log2(max(weight, 1e-300) * 2 * (p + 3)) + t_max / math.log(2) - bits
    return 2.0 ** log2_err if log2_err > -1000 else 0.0


def _check_order(p: int, params: ApproximationParams) -> None:
    if p > params.max_order:
        raise PreconditionError(
            f"series order {p} exceeds the configured cap {params.max_order}; "
            "lower K or raise the cap"
        )


def _one_exponential(g, params: ApproximationParams, delta: float, prefactor: float, cache: dict) -> ComponentResult:
    K, tau = params.K, params.tau
    fam = MomentFamily.plain(g)
    plan = plan_series(fam, K, tau, precision_bits=params.precision_bits)
    _check_order(plan.p, params)
    p = plan.p
    if params.route == "collapsed":
        table = block_moments(fam, 2 * p + 1, cache=cache)
        coeffs = odd_even_coefficients(table, p, offset=1)
        second = table.value(2) if table.max_g_power >= 2 else None
    elif params.route == "terms":
        coeffs = [0] * (p + 1)
        for term in _single_terms(tuple(g)):
            t = block_moments(term.family, 2 * p, cache=cache)
            for k, c in enumerate(odd_even_coefficients(t, p)):
                coeffs[k] = coeffs[k] + c * _fmpq(term.coefficient)
        second = None
    else:
        raise ValueError(f"unknown route {params.route!r}")
    if second is None:
        second = block_moments(fam, 2, cache=cache).value(2)
    weight = sqrt_up(second)  # >= int |rho|
    n_sq = plan.t_parts[0] / (K * K)
    series = ExponentialSeries(coeffs, n_sq, tau, plan.precision_bits)
    target = delta / prefactor
    qplan = _pick_plan(K, target, 2 * K * weight * n_sq, weight, 1, params.rule)
    integral = riemann_1d(series, qplan, params.workers)
    s_err = K * weight * tau + K * _rounding_error(plan.t_max, p, plan.precision_bits, weight)
    s_err += K * weight * 2.0 ** -50
    return ComponentResult(
        prefactor * integral, prefactor, qplan, prefactor * qplan.certified_error,
        prefactor * s_err, p, plan.precision_bits, plan.t_max,
    )


def _two_exponential(g, h, params: ApproximationParams, delta: float, prefactor: float, cache: dict) -> ComponentResult:
    K, tau = params.K, params.tau
    fam = MomentFamily.plain(g, h)
    plan = plan_series(fam, K, tau, precision_bits=params.precision_bits)
    pg = truncation_order(plan.t_parts[0], tau)
    ph = truncation_order(plan.t_parts[1], tau)
    _check_order(max(pg, ph), params)
    bits = plan.precision_bits
    if params.precision_bits is None:
        bits = working_precision(plan.t_max, max(pg, ph), tau)
    if params.route == "collapsed":
        table = block_moments(fam, 2 * pg + 1, 2 * ph + 1, cache=cache)
        coeffs = double_coefficients(table, pg, ph, offset=1)
    elif params.route == "terms":
        coeffs = [[0] * (ph + 1) for _ in range(pg + 1)]
        for term in _pair_terms(tuple(g), tuple(h)):
            t = block_moments(term.family, 2 * pg, 2 * ph, cache=cache)
            for i, row in enumerate(double_coefficients(t, pg, ph)):
                for j, c in enumerate(row):
                    coeffs[i][j] = coeffs[i][j] + c * _fmpq(term.coefficient)
    else:
        raise ValueError(f"unknown route {params.route!r}")
    weight = sqrt_up(block_moments(fam, 2, 2, cache=cache).value(2, 2))
    sy = plan.t_parts[0] / (K * K)
    sz = plan.t_parts[1] / (K * K)
    series = DoubleExponentialSeries(coeffs, sy, sz, tau, bits)
    target = delta / prefactor
    qplan = _pick_plan(K, target, 2 * K * weight * (sy + sz), weight, 2, params.rule)
    integral = riemann_2d_separable(series.grid_sum, qplan)
    s_err = K * K * weight * (2 * tau + tau * tau)
    s_err += K * K * _rounding_error(plan.t_max, max(pg, ph), bits, weight)
    s_err += K * K * weight * 2.0 ** -50
    return ComponentResult(
        prefactor * integral, prefactor, qplan, prefactor * qplan.certified_error,
        prefactor * s_err, max(pg, ph), bits, plan.t_max,
    )


def t_of_k(problem: ClippedCubeProblem, K, delta: float = 1e-4, tau: float = 1e-8, **options) -> VolumeReport:
    """Smoothed volume with its certified numerical error.

    ``options`` are the remaining ApproximationParams fields
    (precision_bits, rule, route, workers, max_order).
    """
    if not K > 0:
        raise ValueError("K must be positive")
    if not (delta > 0 and tau > 0):
        raise ValueError("delta and tau must be positive")
    params = ApproximationParams(float(K), float(delta), float(tau), **options)
    start = time.perf_counter()
    problem = problem.normalized()
    cons = problem.constraints
    cache: dict = {}
    comps: dict[str, ComponentResult] = {}
    if not cons:
        i1 = 1.0
    elif len(cons) == 1:
        i1 = 0.5
        comps["i2"] = _one_exponential(cons[0].residual_terms(), params, delta, 1 / SQRT_PI, cache)
    else:
        i1 = 0.25
        share = delta / 3
        g = cons[0].residual_terms()
        h = cons[1].residual_terms()
        comps["i2"] = _one_exponential(g, params, share, 1 / (2 * SQRT_PI), cache)
        comps["i3"] = _one_exponential(h, params, share, 1 / (2 * SQRT_PI), cache)
        comps["i4"] = _two_exponential(g, h, params, share, 1 / math.pi, cache)

    def part(name):
        return comps[name].value if name in comps else 0.0

    i2, i3, i4 = part("i2"), part("i3"), part("i4")
    q_err = sum(c.quadrature_error for c in comps.values())
    s_err = sum(c.series_error for c in comps.values())
    try:
        bound = smoothing_bound(problem, K)
    except BoundNotApplicable:
        bound = None
    first = comps.get("i2")
    plans = [c.quadrature for c in comps.values() if c.quadrature is not None]
    return VolumeReport(
        t_of_k=i1 + i2 + i3 + i4,
        i1=i1, i2=i2, i3=i3, i4=i4,
        error_bound=bound,
        certified_error=q_err + s_err,
        quadrature_error=q_err,
        series_error=s_err,
        K=float(K), delta=float(delta), tau=float(tau),
        p=max((c.p for c in comps.values()), default=0),
        precision_bits=max((c.precision_bits for c in comps.values()), default=0),
        epsilon=first.quadrature.step if first else float(K),
        nodes=sum(pl.nodes ** pl.dims for pl in plans),
        t_max=max((c.t_max for c in comps.values()), default=0.0),
        certificate=",".join(sorted({pl.certificate for pl in plans})) or "none",
        rule=params.rule,
        components=comps,
        wall_time_ms=(time.perf_counter() - start) * 1000.0,
    )
