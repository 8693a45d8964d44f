"""Smoothed step functions and the two kernels they are built from."""

from __future__ import annotations

import math

import gmpy2


def _check_k(K) -> None:
    if not K > 0:
        raise ValueError("sharpness K must be positive")


def h_k(t: float, K: float, precision_bits: int | None = None):
    """Smoothed Heaviside 1/2 + (1/sqrt(pi)) int_0^K t exp(-(t y)^2) dy.

    Substituting u = t*y gives 1/2 (1 + erf(K t)). For negative arguments
    the erfc form keeps full relative accuracy in the lower tail. With
    ``precision_bits`` the value is an mpfr at that precision.
    """
    _check_k(K)
    if precision_bits is not None:
        with gmpy2.context(gmpy2.get_context(), precision=precision_bits):
            s = gmpy2.mpfr(K) * gmpy2.mpfr(t)
            if s < 0:
                return gmpy2.erfc(-s) / 2
            return 1 - gmpy2.erfc(s) / 2
    s = K * t
    if s == 0:
        return 0.5
    if s < 0:
        return 0.5 * math.erfc(-s)
    return 1.0 - 0.5 * math.erfc(s)


def h_k_limit(t: float) -> float:
    if t < 0:
        return 0.0
    if t > 0:
        return 1.0
    return 0.5


def logistic(t: float, K: float) -> float:
    _check_k(K)
    s = K * t
    if s > 0:
        return 1.0 / (1.0 + math.exp(-s))
    e = math.exp(s)
    return e / (1.0 + e)


def phi_l(t: float) -> float:
    """1 / (2 + e^t + e^-t), written with e^-|t| so it never overflows."""
    e = math.exp(-abs(t))
    return e / ((1.0 + e) * (1.0 + e))


def phi_g(t: float) -> float:
    return 0.25 * math.exp(-t * t)
