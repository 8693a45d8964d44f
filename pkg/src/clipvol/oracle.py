"""Independent volume estimates: uniform Monte Carlo and exact simplex volumes.

Random numbers come from a counter-based SplitMix64 stream so any range of
the stream can be produced independently (and in any order):

    z  = seed + (counter + 1) * 0x9E3779B97F4A7C15        (mod 2^64)
    z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9             (mod 2^64)
    z  = (z ^ (z >> 27)) * 0x94D049BB133111EB             (mod 2^64)
    z  =  z ^ (z >> 31)
    u  = (z >> 11) * 2^-53                                  in [0, 1)

Coordinate q of sample i uses counter i * n + q. The estimate is a count
of hits, so splitting the sample range across threads cannot change it.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .constraint import ClippedCubeProblem, SeparableConstraint
from .polynomial import as_fraction

GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
MASK64 = (1 << 64) - 1
CHUNK = 1 << 16


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int
    hits: int


def uniforms(seed: int, start: int, count: int) -> np.ndarray:
    """Stream entries start .. start+count-1 as float64 in [0, 1)."""
    ctr = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = np.uint64(seed & MASK64) + ctr * GAMMA
    z = (z ^ (z >> np.uint64(30))) * MIX1
    z = (z ^ (z >> np.uint64(27))) * MIX2
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def sample_points(seed: int, first: int, count: int, n: int) -> np.ndarray:
    """Samples first .. first+count-1 as a (count, n) array."""
    return uniforms(seed, first * n, count * n).reshape(count, n)


def _inside(c: SeparableConstraint, x: np.ndarray) -> np.ndarray:
    total = np.zeros(x.shape[0])
    for q, poly in enumerate(c.per_coordinate):
        col = x[:, q]
        acc = np.zeros_like(col)
        for coef in reversed(poly.coefficients):
            acc = acc * col + float(coef)
        total += acc
    return total <= float(c.offset)


def _count_hits(problem: ClippedCubeProblem, seed: int, first: int, count: int) -> int:
    x = sample_points(seed, first, count, problem.dimension)
    ok = np.ones(count, dtype=bool)
    for c in problem.constraints:
        ok &= _inside(c, x)
    return int(np.count_nonzero(ok))


def mc_volume(problem: ClippedCubeProblem, samples: int, seed: int = 0, workers: int = 1) -> McEstimate:
    if samples < 1:
        raise ValueError("need at least one sample")
    if not problem.constraints:
        return McEstimate(1.0, 0.0, samples, seed, samples)
    ranges = [(s, min(CHUNK, samples - s)) for s in range(0, samples, CHUNK)]

    def run(r):
        return _count_hits(problem, seed, r[0], r[1])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(run, ranges))
    else:
        hits = sum(run(r) for r in ranges)
    mean = hits / samples
    return McEstimate(mean, math.sqrt(mean * (1 - mean) / samples), samples, seed, hits)


def exact_simplex_volume(n: int, b) -> Fraction:
    """vol([0,1]^n intersected with sum x_i <= b) = b^n / n! for 0 < b <= 1."""
    b = as_fraction(b)
    if not 0 < b <= 1:
        raise ValueError("the closed form needs 0 < b <= 1")
    return b ** n / math.factorial(n)
