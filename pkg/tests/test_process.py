import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conicdist import cones, lp_core
from conicdist.cones import PolyhedralCone, member
from conicdist.numerics import NormKind, dual_norm, norm
from conicdist.process import (
    ConicProcess,
    DimensionError,
    PerturbationAssignment,
    StructureBlock,
    adjoint,
    images_span,
    is_singular,
    is_surjective,
    operator_norm,
    perturb,
)

SPAN3 = np.array([[1.0, 0.0, -1.0], [0.0, 1.0, -1.0]])


def test_adjoint_examples():
    adj = adjoint(ConicProcess(np.eye(2), PolyhedralCone.nonneg(2)))
    np.testing.assert_array_equal(adj.A_transpose, np.eye(2))
    assert member(adj.K_polar, [-1.0, -3.0]) and not member(adj.K_polar, [1.0, -3.0])
    assert adjoint(ConicProcess(np.eye(2), PolyhedralCone.full(2))).K_polar.is_zero
    adj = adjoint(ConicProcess(SPAN3, PolyhedralCone.nonneg(3)))
    np.testing.assert_array_equal(adj.A_transpose, SPAN3.T)
    assert member(adj.K_polar, [-1.0, 0.0, -2.0]) and not member(adj.K_polar, [0.0, 0.1, 0.0])


def test_is_singular_examples():
    assert not is_singular(ConicProcess(np.eye(2), PolyhedralCone.full(2)))[0]
    sing, x = is_singular(ConicProcess([[1.0, 0.0], [0.0, 0.0]], PolyhedralCone.full(2)))
    assert sing
    assert abs(x[0]) <= 1e-12 and abs(x[1]) == pytest.approx(1.0)
    assert not is_singular(ConicProcess([[1.0, 1.0]], PolyhedralCone.nonneg(2)))[0]


def test_is_surjective_examples():
    assert is_surjective(ConicProcess(np.eye(2), PolyhedralCone.full(2)))[0]
    F = ConicProcess(np.eye(2), PolyhedralCone.nonneg(2))
    surj, y = is_surjective(F)
    assert not surj
    # <y*, A x> >= 0 on K
    assert np.all(F.A.T @ y >= -1e-12) and np.abs(y).max() == pytest.approx(1.0)
    assert is_surjective(ConicProcess(SPAN3, PolyhedralCone.nonneg(3)))[0]


def test_perturb_examples():
    F = ConicProcess(np.diag([3.0, 1.0]), PolyhedralCone.full(2))
    eye = [StructureBlock(np.eye(2), np.eye(2))]
    assert np.array_equal(perturb(F, eye, PerturbationAssignment.zeros(eye)).A, F.A)
    G = perturb(F, eye, PerturbationAssignment([-F.A], eye))
    assert np.all(G.A == 0) and not is_surjective(G)[0]
    masked = [StructureBlock([[1.0], [0.0]], [[1.0, 0.0]])]
    G = perturb(F, masked, PerturbationAssignment([[[-3.0]]], masked))
    np.testing.assert_array_equal(G.A, np.diag([0.0, 1.0]))
    assert not is_surjective(G)[0]
    # the one-parameter family A + t e1 e1^T is singular only at t = -3
    for t in np.linspace(-6, 6, 121):
        if abs(t + 3) > 1e-9:
            assert is_surjective(perturb(F, masked, PerturbationAssignment([[[t]]], masked)))[0]


def test_perturb_keeps_cone():
    F = ConicProcess(SPAN3, PolyhedralCone.nonneg(3))
    b = [StructureBlock(np.eye(2), np.eye(3))]
    assert perturb(F, b, PerturbationAssignment.zeros(b)).K is F.K


def test_dimension_errors():
    F = ConicProcess(np.eye(2), PolyhedralCone.full(2))
    with pytest.raises(DimensionError, match="blocks\\[0\\].P"):
        StructureBlock(np.eye(3), np.eye(2)).check(F)
    with pytest.raises(DimensionError):
        ConicProcess(np.eye(2), PolyhedralCone.full(3))
    with pytest.raises(DimensionError):
        PerturbationAssignment([np.eye(3)], [StructureBlock(np.eye(2), np.eye(2))])


def test_operator_norm_examples():
    assert operator_norm(np.eye(3), "L1", "L1") == pytest.approx(1.0)
    # oracle: largest singular value of [[1,2],[3,4]]
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert operator_norm(M, "L2", "L2") == pytest.approx(5.464985704219043, rel=1e-12)


@pytest.mark.parametrize("src", list(NormKind))
@pytest.mark.parametrize("dst", list(NormKind))
def test_rank_one_operator_norm(src, dst):
    rng = np.random.default_rng(2)
    for _ in range(20):
        u, v = rng.standard_normal(3), rng.standard_normal(2)
        T = np.outer(v, u)
        assert operator_norm(T, src, dst) == pytest.approx(dual_norm(src, u) * norm(dst, v), rel=1e-12)


def test_operator_norm_matches_sampled_lower_bound():
    rng = np.random.default_rng(5)
    for src in NormKind:
        for dst in NormKind:
            T = rng.standard_normal((3, 3))
            exact = operator_norm(T, src, dst)
            g = rng.standard_normal((4000, 3))
            best = max(norm(dst, T @ x) / norm(src, x) for x in g)
            assert best <= exact * (1 + 1e-12)
            assert best >= 0.9 * exact


def test_operator_norm_dimension_cap():
    with pytest.raises(ValueError, match="dimension cap"):
        operator_norm(np.ones((1, 13)), "LINF", "L2")


def _random_process(rng, max_dim=4, max_rays=5):
    m, n = int(rng.integers(1, max_dim + 1)), int(rng.integers(1, max_dim + 1))
    r = int(rng.integers(1, max_rays + 1))
    return ConicProcess(rng.standard_normal((m, n)), PolyhedralCone.from_rays(rng.standard_normal((r, n))))


def _primal_surjective(F):
    # every +-e_j of Y is some A x with x a nonnegative combination of rays
    G = F.A @ F.K.rays.T if F.K.rays.size else np.zeros((F.y_dim, 0))
    if G.shape[1] == 0:
        return False
    for j in range(F.y_dim):
        for s in (1.0, -1.0):
            ok, _ = lp_core.feasible(A_eq=G, b_eq=s * np.eye(F.y_dim)[j], bounds=[(0.0, None)] * G.shape[1])
            if not ok:
                return False
    return True


def test_open_mapping_consistency_on_200_instances():
    rng = np.random.default_rng(11)
    counts = {True: 0, False: 0}
    for _ in range(200):
        F = _random_process(rng)
        surj, y = is_surjective(F)
        assert surj == _primal_surjective(F)
        assert surj == images_span(F)
        if not surj:
            assert witness_ok(F, y)
        counts[surj] += 1
    assert counts[True] > 10 and counts[False] > 10


def witness_ok(F, y):
    return cones.member(adjoint(F).K_polar, -F.A.T @ y, tol=1e-9) and np.abs(y).max() > 0


@given(st.integers(0, 2**32 - 1))
def test_adjoint_additivity(seed):
    rng = np.random.default_rng(seed)
    F = _random_process(rng)
    G = rng.standard_normal(F.A.shape)
    blocks = [StructureBlock(np.eye(F.y_dim), np.eye(F.x_dim))]
    adj = adjoint(perturb(F, blocks, PerturbationAssignment([G], blocks)))
    np.testing.assert_allclose(adj.A_transpose, (F.A + G).T, atol=1e-14)
    base = adjoint(F).K_polar
    np.testing.assert_array_equal(adj.K_polar.ineq, base.ineq)
    np.testing.assert_array_equal(adj.K_polar.eq, base.eq)
