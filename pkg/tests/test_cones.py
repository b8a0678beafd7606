import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conicdist.cones import PolyhedralCone, member, nonzero_element_with, polar


def _rays_from_seed(seed, max_rays=5, max_dim=4):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_dim + 1))
    r = int(rng.integers(1, max_rays + 1))
    return rng.standard_normal((r, n))


seeds = st.integers(0, 2**32 - 1)


def test_polar_of_orthant():
    P = polar(PolyhedralCone.nonneg(2))
    assert member(P, [-1.0, -2.0])
    assert not member(P, [1.0, -2.0])
    assert not member(P, [-1.0, 0.5])


def test_polar_of_full_is_zero():
    P = polar(PolyhedralCone.full(2))
    assert P.is_zero
    assert member(P, [0.0, 0.0])
    assert not member(P, [1e-3, 0.0])


def test_polar_of_ray_is_halfplane():
    P = polar(PolyhedralCone.from_rays([[1.0, 1.0]]))
    # oracle: y in polar iff y1 + y2 <= 0
    rng = np.random.default_rng(0)
    for y in rng.standard_normal((300, 2)):
        if abs(y.sum()) > 1e-6:
            assert member(P, y) == (y.sum() <= 0)
    assert member(P, [1.0, -1.0]) and member(P, [-1.0, 1.0])


@pytest.mark.parametrize("x,expected", [([1.0, 2.0], True), ([-1.0, 2.0], False)])
def test_orthant_membership(x, expected):
    assert member(PolyhedralCone.nonneg(2), x) is expected


def test_ray_membership():
    assert member(PolyhedralCone.from_rays([[1.0, 1.0]]), [2.0, 2.0])
    assert not member(PolyhedralCone.from_rays([[1.0, 1.0]]), [2.0, 1.0])


def test_nonzero_element_on_diagonal():
    x = nonzero_element_with(PolyhedralCone.nonneg(2), A_eq=[[1.0, -1.0]])
    assert x is not None and x[0] > 0
    np.testing.assert_allclose(x / x[0], [1.0, 1.0], atol=1e-12)


def test_nonzero_element_none():
    assert nonzero_element_with(PolyhedralCone.nonneg(2), A_eq=np.eye(2)) is None


def test_nonzero_element_in_full_plane():
    x = nonzero_element_with(PolyhedralCone.full(2), A_eq=[[1.0, 1.0]])
    assert x is not None and np.abs(x).max() > 0
    assert abs(x[0] + x[1]) <= 1e-12


def test_zero_and_duplicate_rays_dropped():
    K = PolyhedralCone.from_rays([[1.0, 0.0], [0.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    assert K.rays.shape[0] == 2


@given(seeds)
def test_bipolar(seed):
    R = _rays_from_seed(seed)
    K = PolyhedralCone.from_rays(R)
    KK = polar(polar(K))
    for r in R:
        assert member(KK, r / np.linalg.norm(r), tol=1e-9)
    for r in KK.rays:
        assert member(K, r, tol=1e-9, method="generator")


@given(seeds)
def test_polar_anti_monotone(seed):
    R = _rays_from_seed(seed)
    rng = np.random.default_rng(seed + 1)
    # K1 is generated by nonnegative combinations of generators of K2
    K2 = PolyhedralCone.from_rays(R)
    K1 = PolyhedralCone.from_rays(rng.uniform(0, 1, (2, R.shape[0])) @ R)
    P1, P2 = polar(K1), polar(K2)
    for r in P2.rays:
        assert member(P1, r, tol=1e-9)


@given(seeds)
def test_membership_methods_agree(seed):
    R = _rays_from_seed(seed)
    K = PolyhedralCone.from_rays(R)
    rng = np.random.default_rng(seed + 2)
    pts = np.vstack([rng.standard_normal((6, R.shape[1])), rng.uniform(0, 1, (4, R.shape[0])) @ R])
    for x in pts:
        # skip points too close to the boundary for either tolerance to be decisive
        if K.ineq.size and np.abs(K.ineq @ x).min() < 1e-6:
            continue
        assert member(K, x) == member(K, x, method="generator")
