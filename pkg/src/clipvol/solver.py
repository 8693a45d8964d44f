"""Farthest cube point from C0 inside a half-space, by bisection on a volume oracle.

The ball B(C0, R) covers the feasible region F exactly when
vol(F) - vol(F cap B(C0, R)) = 0, so max ||x - C0|| over F is the smallest
such R. A noisy oracle only says whether the volume deficit is
distinguishable from zero:

* deficit > its error  -> certainly R is too small, grow;
* otherwise            -> treat R as covering, shrink, and remember
                          deficit + error as the volume that may still be
                          left outside (``volume_slack``).

Converting the volume slack into a radius slack needs the local geometry
of F near its farthest points, which the caller knows and the solver does
not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Protocol, Sequence

from .constraint import ClippedCubeProblem, from_ball
from .errors import EmptyRegionError, InconclusiveError, PreconditionError
from .oracle import mc_volume
from .polynomial import as_fraction
from .volume import t_of_k


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    error: float


class VolumeOracle(Protocol):
    def volume(self, problem: ClippedCubeProblem) -> VolumeEstimate: ...

    def deficit(self, base: ClippedCubeProblem, clipped: ClippedCubeProblem) -> VolumeEstimate: ...


@dataclass
class McOracle:
    """Monte Carlo oracle. Every call reuses the same sample points (same
    seed), so the deficit is a paired count: the samples inside ``base``
    but outside ``clipped``."""

    samples: int = 1_000_000
    seed: int = 0
    z: float = 4.0
    workers: int = 1

    def _error(self, q: float) -> float:
        n = self.samples
        return self.z * math.sqrt(max(q * (1 - q), 0.0) / n) + self.z * self.z / n

    def volume(self, problem: ClippedCubeProblem) -> VolumeEstimate:
        est = mc_volume(problem, self.samples, self.seed, self.workers)
        return VolumeEstimate(est.mean, self._error(est.mean))

    def deficit(self, base: ClippedCubeProblem, clipped: ClippedCubeProblem) -> VolumeEstimate:
        a = mc_volume(base, self.samples, self.seed, self.workers).hits
        b = mc_volume(clipped, self.samples, self.seed, self.workers).hits
        q = (a - b) / self.samples
        return VolumeEstimate(q, self._error(q))


@dataclass
class TkOracle:
    """Smoothed-volume oracle. Its error is the certified numerical error
    plus the a-priori smoothing bound when one applies; for other
    constraint shapes the smoothing bias is not covered."""

    K: float
    delta: float = 1e-3
    tau: float = 1e-8
    workers: int = 1

    def volume(self, problem: ClippedCubeProblem) -> VolumeEstimate:
        r = t_of_k(problem, self.K, self.delta, self.tau, workers=self.workers)
        return VolumeEstimate(r.t_of_k, r.certified_error + (r.error_bound or 0.0))

    def deficit(self, base: ClippedCubeProblem, clipped: ClippedCubeProblem) -> VolumeEstimate:
        a, b = self.volume(base), self.volume(clipped)
        return VolumeEstimate(a.value - b.value, a.error + b.error)


@dataclass(frozen=True)
class BisectionStep:
    R: float
    deficit: float
    error: float
    decision: str


@dataclass
class BisectionTrace:
    iterations: list[BisectionStep] = field(default_factory=list)
    final_R: float = math.nan
    tolerance: float = math.nan
    R_lo: float = 0.0
    R_hi: float = math.nan
    baseline: VolumeEstimate | None = None
    volume_slack: float = 0.0

    def to_text(self) -> str:
        lines = [
            f"radius: {self.final_R!r}",
            f"lower: {self.R_lo!r}",
            f"tolerance: {self.tolerance!r}",
            f"initial_upper: {self.R_hi!r}",
            f"baseline_volume: {self.baseline.value!r}",
            f"baseline_error: {self.baseline.error!r}",
            f"volume_slack: {self.volume_slack!r}",
            f"iterations: {len(self.iterations)}",
            "step,R,deficit,error,decision",
        ]
        for i, s in enumerate(self.iterations):
            lines.append(f"{i},{s.R!r},{s.deficit!r},{s.error!r},{s.decision}")
        return "\n".join(lines) + "\n"


def _upper_radius(center: Sequence[Fraction]) -> Fraction:
    """A rational >= ||C - 1/2|| + sqrt(n)/2."""
    n = len(center)
    d = math.sqrt(sum(float(c - Fraction(1, 2)) ** 2 for c in center)) + math.sqrt(n) / 2
    return Fraction(d) * (1 + Fraction(1, 10**12)) + Fraction(1, 10**12)


def max_distance(
    problem: ClippedCubeProblem,
    center: Sequence,
    tol: float,
    oracle: VolumeOracle,
    max_error: float | None = None,
) -> tuple[float, BisectionTrace]:
    """Bisect R in [0, ||C0 - 1/2|| + sqrt(n)/2] until the bracket is <= tol.

    ``max_error`` caps the error a deficit estimate may carry before the
    comparison counts as undecidable; it defaults to half the feasible
    volume.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    center = tuple(as_fraction(c) for c in center)
    if len(center) != problem.dimension:
        raise PreconditionError("center has the wrong dimension")
    if len(problem.constraints) >= 2:
        raise PreconditionError("the feasible region may have at most one constraint (the ball adds another)")
    base = oracle.volume(problem)
    if base.value <= base.error:
        raise EmptyRegionError(
            f"feasible region has no detectable volume ({base.value} <= error {base.error})"
        )
    limit = base.value / 2 if max_error is None else max_error
    lo, hi = Fraction(0), _upper_radius(center)
    trace = BisectionTrace(tolerance=float(tol), R_hi=float(hi), baseline=base)
    tol_q = as_fraction(tol)
    while hi - lo > tol_q:
        R = (lo + hi) / 2
        est = oracle.deficit(problem, problem.with_constraint(from_ball(center, R)))
        step = len(trace.iterations)
        if est.error > limit:
            raise InconclusiveError(
                f"iteration {step}: deficit error {est.error} exceeds the allowed {limit} at R={float(R)}",
                iteration=step,
            )
        if est.value > est.error:
            lo = R
            decision = "grow"
        else:
            hi = R
            decision = "shrink"
            trace.volume_slack = max(trace.volume_slack, est.value + est.error)
        trace.iterations.append(BisectionStep(float(R), est.value, est.error, decision))
    trace.final_R = float(hi)
    trace.R_lo = float(lo)
    return float(hi), trace
