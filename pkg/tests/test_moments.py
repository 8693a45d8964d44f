import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clipvol.moments import (
    MomentFamily,
    MomentStats,
    OracleScaleError,
    block_moments,
    brute_force_moment,
    leaf_moments,
    merge,
    unit_power_moments,
)
from clipvol.polynomial import ONE, X, UnivariatePolynomial as P, integrate_unit, multiply, power
from oracles import sympy_moment

small = st.fractions(min_value=-3, max_value=3, max_denominator=6)
poly2 = st.lists(small, min_size=1, max_size=3).map(lambda cs: P(tuple(cs)))


@st.composite
def families(draw, max_n=4, with_h=True):
    n = draw(st.integers(1, max_n))
    f = [draw(poly2) for _ in range(n)]
    g = [draw(poly2) for _ in range(n)]
    h = [draw(poly2) for _ in range(n)] if with_h else None
    return MomentFamily(f, g, h)


def _coeffs(ps):
    return None if ps is None else [p.coefficients for p in ps]


def test_leaf_examples():
    t = block_moments(MomentFamily.plain([X]), 2)
    assert [t.value(m) for m in range(3)] == [1, F(1, 2), F(1, 3)]
    t = block_moments(MomentFamily.plain([P((0,))]), 3)
    assert [t.value(m) for m in range(4)] == [1, 0, 0, 0]
    t = block_moments(MomentFamily([X], [P((F(-1, 2), 1))]), 1)
    assert t.value(1) == F(1, 12)


def test_block_examples():
    assert block_moments(MomentFamily.plain([X] * 4), 1).value(1) == 2
    t = block_moments(MomentFamily.plain([X, X], [P((1, -1))] * 2), 1, 1)
    assert t.value(1, 1) == F(5, 6)
    assert block_moments(MomentFamily.plain([X] * 3), 2).value(2) == F(5, 2)


def test_empty_moment_is_product_of_weights():
    f = [P((1, 2)), P((0, 0, 3)), P((F(1, 2),))]
    fam = MomentFamily(f, [X] * 3)
    expected = integrate_unit(f[0]) * integrate_unit(f[1]) * integrate_unit(f[2])
    assert brute_force_moment(fam, 0) == expected
    assert block_moments(fam, 0).value(0) == expected


def test_merge_rejects_non_adjacent():
    fam = MomentFamily.plain([X] * 3)
    a, c = leaf_moments(0, fam, 2), leaf_moments(2, fam, 2)
    with pytest.raises(ValueError):
        merge(a, c)


def test_brute_force_guard():
    fam = MomentFamily.plain([X] * 7)
    with pytest.raises(OracleScaleError, match="oracle scale"):
        brute_force_moment(fam, 1)


def test_unit_power_moments_direct():
    g = P((F(1, 3), -2, F(3, 2)))
    A = unit_power_moments(g.coefficients, 6, 4)
    for m in range(7):
        gm = power(g, m)
        for j in range(5):
            assert A[m][j] == integrate_unit(multiply(P((0,) * j + (1,)), gm))


@settings(max_examples=40, deadline=None)
@given(families())
def test_block_matches_brute_force(fam):
    P_, Q = 3, 2
    table = block_moments(fam, P_, Q)
    for m in range(P_ + 1):
        for r in range(Q + 1):
            if m + r <= 5:
                assert table.value(m, r) == brute_force_moment(fam, m, r)


@settings(max_examples=15, deadline=None)
@given(families(max_n=3))
def test_brute_force_matches_sympy(fam):
    f, g, h = _coeffs(fam.f), _coeffs(fam.g), _coeffs(fam.h)
    for m, r in [(0, 0), (1, 1), (3, 0), (2, 2), (0, 3)]:
        assert brute_force_moment(fam, m, r) == sympy_moment(f, g, h, m, r)


@settings(max_examples=20, deadline=None)
@given(families(max_n=4))
def test_merge_is_associative(fam):
    if fam.n < 3:
        return
    leaves = [leaf_moments(q, fam, 3, 2) for q in range(3)]
    left_first = merge(merge(leaves[0], leaves[1]), leaves[2])
    right_first = merge(leaves[0], merge(leaves[1], leaves[2]))
    assert left_first == right_first


@settings(max_examples=20, deadline=None)
@given(families(with_h=False), small)
def test_scaling_g(fam, c):
    scaled = MomentFamily(fam.f, [p * c for p in fam.g])
    a, b = block_moments(fam, 4), block_moments(scaled, 4)
    for m in range(5):
        assert b.value(m) == c**m * a.value(m)


def test_shared_cache_reuses_identical_leaves():
    fam = MomentFamily.plain([X] * 8)
    stats = MomentStats()
    block_moments(fam, 5, stats=stats)
    # one leaf, then one table per tree level
    assert stats.leaves == 1
    assert stats.merges == 3


def test_cost_grows_like_n_log_n_for_distinct_leaves():
    counts = {}
    for n in (2, 4, 8, 16):
        fam = MomentFamily.plain([P((F(q + 1, 7), 1)) for q in range(n)])
        stats = MomentStats()
        block_moments(fam, 4, stats=stats)
        counts[n] = stats
        assert stats.leaves == n
        assert stats.merges == n - 1
    assert counts[16].multiplications == 15 * counts[2].multiplications


def test_swapped_family_transposes_table():
    rng = random.Random(5)
    f = [P((rng.randint(1, 3), 1)) for _ in range(3)]
    g = [P((F(rng.randint(-3, 3), 4), 1)) for _ in range(3)]
    h = [P((1, F(rng.randint(-3, 3), 5))) for _ in range(3)]
    fam = MomentFamily(f, g, h)
    a, b = block_moments(fam, 3, 3), block_moments(fam.swapped(), 3, 3)
    for m in range(4):
        for r in range(4):
            assert a.value(m, r) == b.value(r, m)


def test_values_are_exact_fractions():
    t = block_moments(MomentFamily.plain([ONE, X]), 2)
    assert all(isinstance(v, F) for v in t.values.values())


@settings(max_examples=15, deadline=None)
@given(families(max_n=3))
def test_row_wise_merge_matches_packed(fam):
    import clipvol.moments as mod
    packed = block_moments(fam, 5, 3)
    saved = mod.PACKED_PRODUCT_LIMIT_BITS
    mod.PACKED_PRODUCT_LIMIT_BITS = 0
    try:
        row_wise = block_moments(fam, 5, 3)
    finally:
        mod.PACKED_PRODUCT_LIMIT_BITS = saved
    assert row_wise == packed
