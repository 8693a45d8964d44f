"""Deterministic smoothed volumes of unit cubes clipped by separable polynomial sets."""

from .constraint import (
    ClippedCubeProblem,
    SeparableConstraint,
    from_ball,
    from_halfspace,
    min_cube_distance,
    normalize,
    residual,
    residual_range,
)
from .moments import MomentFamily, block_moments, brute_force_moment
from .oracle import exact_simplex_volume, mc_volume
from .polynomial import UnivariatePolynomial
from .solver import McOracle, TkOracle, max_distance
from .volume import VolumeReport, prism_bound, smoothing_bound, t_of_k

__all__ = [
    "ClippedCubeProblem",
    "McOracle",
    "MomentFamily",
    "SeparableConstraint",
    "TkOracle",
    "UnivariatePolynomial",
    "VolumeReport",
    "block_moments",
    "brute_force_moment",
    "exact_simplex_volume",
    "from_ball",
    "from_halfspace",
    "max_distance",
    "mc_volume",
    "min_cube_distance",
    "normalize",
    "prism_bound",
    "residual",
    "residual_range",
    "smoothing_bound",
    "t_of_k",
]
