import math
from fractions import Fraction as F

import pytest

from clipvol.constraint import ClippedCubeProblem, from_ball, from_halfspace
from clipvol.errors import EmptyRegionError, InconclusiveError, PreconditionError
from clipvol.solver import McOracle, TkOracle, VolumeEstimate, max_distance

SQUARE = ClippedCubeProblem(2, ())
TRIANGLE = ClippedCubeProblem(2, (from_halfspace((1, 1), 1),))


def _radius_slack(volume_slack):
    # the farthest vertex has an interior angle of at least 45 degrees, so the
    # part of the region outside a ball of radius R* - d contains a triangle
    # of area d^2 / 2; hence d <= sqrt(2 * slack)
    return math.sqrt(2 * volume_slack)


def test_square_corner():
    R, trace = max_distance(SQUARE, (-1, -1), 1e-2, McOracle(samples=200_000))
    assert abs(R - 2 * math.sqrt(2)) <= 1e-2 + _radius_slack(trace.volume_slack)
    assert len(trace.iterations) <= math.ceil(math.log2(trace.R_hi / 1e-2))
    assert R >= trace.R_lo and R - trace.R_lo <= 1e-2


def test_triangle_from_origin():
    R, trace = max_distance(TRIANGLE, (0, 0), 1e-2, McOracle(samples=200_000))
    assert abs(R - 1) <= 1e-2 + _radius_slack(trace.volume_slack)


def test_empty_region_rejected():
    prob = ClippedCubeProblem(2, (from_halfspace((1, 0), 0),))
    with pytest.raises(EmptyRegionError):
        max_distance(prob, (-1, F(1, 2)), 1e-2, McOracle(samples=10_000))


def test_two_constraints_rejected():
    prob = ClippedCubeProblem(2, (from_halfspace((1, 0), 1), from_halfspace((0, 1), 1)))
    with pytest.raises(PreconditionError):
        max_distance(prob, (0, 0), 1e-2, McOracle(samples=1000))


class NoisyOracle:
    """Exact square volume, but deficits carry a huge error after a few calls."""

    def __init__(self, good_calls):
        self.calls = 0
        self.good_calls = good_calls

    def volume(self, problem):
        return VolumeEstimate(1.0, 0.0)

    def deficit(self, base, clipped):
        self.calls += 1
        err = 0.0 if self.calls <= self.good_calls else 0.9
        return VolumeEstimate(0.5, err)


def test_inconclusive_names_iteration():
    with pytest.raises(InconclusiveError) as info:
        max_distance(SQUARE, (-1, -1), 1e-3, NoisyOracle(good_calls=3))
    assert info.value.iteration == 3
    assert "iteration 3" in str(info.value)


def test_trace_text():
    _, trace = max_distance(SQUARE, (0, 0), 0.1, McOracle(samples=20_000))
    text = trace.to_text()
    assert text.startswith("radius: ")
    assert "step,R,deficit,error,decision" in text
    assert len(text.strip().splitlines()) == 9 + len(trace.iterations)


def test_smoothed_oracle_on_square():
    # from the cube corner the farthest point is the opposite vertex
    R, trace = max_distance(SQUARE, (0, 0), 5e-2, TkOracle(K=4, delta=1e-3, tau=1e-6))
    assert all(s.decision == "grow" for s in trace.iterations)
    assert abs(R - math.sqrt(2)) <= 5e-2


def test_rejects_bad_tolerance():
    with pytest.raises(ValueError):
        max_distance(SQUARE, (0, 0), 0, McOracle(samples=100))
    with pytest.raises(PreconditionError):
        max_distance(SQUARE, (0, 0, 0), 0.1, McOracle(samples=100))
