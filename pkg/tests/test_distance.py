import math

import numpy as np
import pytest

from conicdist.cones import PolyhedralCone
from conicdist.distance import (
    SYSTEM_I,
    SYSTEM_II,
    ModeError,
    SolverConfig,
    alternative_check,
    distance_dual,
    distance_rank_one_search,
    general_search,
    phi,
    phi_primal,
    quantity4,
    reciprocal_sup,
    verify_equalities,
)
from conicdist.distance.certificates import build_rank_one
from conicdist.numerics import NormKind, norm
from conicdist.process import ConicProcess, StructureBlock, is_surjective, operator_norm, perturb

from conftest import eckart_young, masked_entry, scalar_process

EXACT = SolverConfig(mode="exact")
SAMPLED = SolverConfig(mode="sampled")
SPAN3 = np.array([[1.0, 0.0, -1.0], [0.0, 1.0, -1.0]])


def renegar_grid_oracle(A, points=100_000):
    """min over unit y* in R^2 of the Euclidean length of (A^T y*)_+ on a fine grid."""
    th = np.linspace(0, 2 * np.pi, points, endpoint=False)
    Y = np.stack([np.cos(th), np.sin(th)])
    return float(np.linalg.norm(np.maximum(A.T @ Y, 0), axis=0).min())


# distance_dual -----------------------------------------------------------


def test_eckart_young_sampled():
    F, blocks = eckart_young()
    value, cert = distance_dual(F, blocks, SAMPLED)
    assert value == pytest.approx(1.0, abs=1e-3)
    assert cert.residual <= 1e-9


@pytest.mark.parametrize("kind", [NormKind.L1, NormKind.LINF])
def test_masked_entry_exact(kind):
    F, blocks = masked_entry(kind)
    value, cert = distance_dual(F, blocks, EXACT)
    assert value == pytest.approx(3.0, abs=1e-9)
    assert cert.value == pytest.approx(3.0, abs=1e-9)


def test_all_p_zero_is_infinite():
    F, _ = masked_entry()
    blocks = [StructureBlock(np.zeros((2, 1)), [[1.0, 0.0]], "LINF", "LINF")]
    assert distance_dual(F, blocks, EXACT)[0] == math.inf
    assert quantity4(F, blocks, EXACT).value == math.inf
    assert distance_rank_one_search(F, blocks, EXACT)[0] == math.inf


def test_renegar_unstructured_orthant():
    F = ConicProcess(SPAN3, PolyhedralCone.nonneg(3))
    blocks = [StructureBlock(np.eye(2), np.eye(3))]
    oracle = renegar_grid_oracle(SPAN3)
    assert oracle == pytest.approx(0.618034, abs=1e-6)
    assert distance_dual(F, blocks, SAMPLED)[0] == pytest.approx(oracle, abs=1e-3)


def test_exact_mode_rejects_l2():
    F, blocks = eckart_young()
    with pytest.raises(ModeError, match="exact mode requires polyhedral norms"):
        distance_dual(F, blocks, EXACT)


def test_nonsurjective_gives_zero():
    F = ConicProcess(np.eye(2), PolyhedralCone.nonneg(2))
    blocks = [StructureBlock(np.eye(2), np.eye(2), "L1", "L1")]
    assert distance_dual(F, blocks, EXACT)[0] == 0.0
    assert distance_rank_one_search(F, blocks, EXACT)[0] == 0.0
    assert general_search(F, blocks, EXACT)[0] == 0.0


def test_second_block_with_zero_p_changes_nothing():
    F, blocks = masked_entry()
    extra = blocks + [StructureBlock(np.zeros((2, 2)), np.eye(2), "L1", "LINF")]
    # two blocks go through bisection, whose feasibility LPs accept residuals
    # near 1e-9; the single-block value above is one exact LP
    alpha, cert = distance_dual(F, extra, EXACT)
    assert alpha == pytest.approx(3.0, abs=1e-7)
    assert cert.value == pytest.approx(3.0, abs=1e-9)
    assert quantity4(F, extra, EXACT).value == pytest.approx(3.0, abs=1e-7)
    q2, cert = distance_rank_one_search(F, extra, EXACT)
    assert q2 == pytest.approx(3.0, abs=1e-7)
    assert cert.verified


# rank-one search ------------------------------------------------------------


def test_eckart_young_rank_one_certificate():
    F, blocks = eckart_young()
    value, cert = distance_rank_one_search(F, blocks, SAMPLED)
    assert value == pytest.approx(1.0, abs=1e-3)
    # the singular pair of sigma_min: y* along e2 and Delta = -e2 e2^T
    assert abs(cert.y_star[1]) == pytest.approx(1.0) and abs(cert.y_star[0]) <= 1e-3
    np.testing.assert_allclose(cert.perturbation.T[0], [[0.0, 0.0], [0.0, -1.0]], atol=1e-3)
    assert cert.verified


def test_masked_entry_rank_one_exact():
    F, blocks = masked_entry()
    value, cert = distance_rank_one_search(F, blocks, EXACT)
    assert value == pytest.approx(3.0, abs=1e-9)
    np.testing.assert_allclose(cert.perturbation.T[0], [[-3.0]], atol=1e-9)
    assert cert.verified and all(cert.perturbation.rank_one)


def test_build_rank_one_examples():
    block = StructureBlock(np.eye(2), np.eye(2))
    T = build_rank_one([1.0, 0.0], [0.0, 1.0], block)
    np.testing.assert_allclose(T, [[0.0, 0.0], [1.0, 0.0]])
    assert operator_norm(T, "L2", "L2") == pytest.approx(1.0)
    assert np.all(build_rank_one([1.0, 0.0], [0.0, 0.0], block) == 0)


def test_build_rank_one_row_scaled():
    block = StructureBlock(np.eye(2), np.eye(2))
    T = build_rank_one([3.0, 4.0], [1.0, 0.0], block)
    np.testing.assert_allclose(T @ [3.0, 4.0], [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(T, [[0.6 / 5, 0.8 / 5], [0.0, 0.0]], atol=1e-15)
    assert operator_norm(T, "L2", "L2") == pytest.approx(0.2)


@pytest.mark.parametrize("kind", list(NormKind))
def test_build_rank_one_norm_formula(kind):
    rng = np.random.default_rng(8)
    for _ in range(20):
        Q = rng.standard_normal((2, 3))
        block = StructureBlock(np.eye(2), Q, kind, kind)
        x, v = rng.standard_normal(3), rng.standard_normal(2)
        T = build_rank_one(x, v, block)
        np.testing.assert_allclose(T @ (Q @ x), v, atol=1e-12)
        assert operator_norm(T, kind, kind) == pytest.approx(norm(kind, v) / norm(kind, Q @ x), rel=1e-12)


def test_build_rank_one_rejects_qx_zero():
    with pytest.raises(ValueError, match="Qx = 0"):
        build_rank_one([0.0, 1.0], [1.0], StructureBlock([[1.0], [0.0]], [[1.0, 0.0]]))


# phi ---------------------------------------------------------------------


@pytest.mark.parametrize("kind", list(NormKind))
def test_phi_scalar(kind):
    F = scalar_process()
    blocks = [StructureBlock([[1.0]], [[1.0]], kind, kind)]
    assert phi(F, blocks, [[2.0]]).value == pytest.approx(0.5, abs=1e-9)
    assert phi_primal(F, blocks, [[2.0]]).value == pytest.approx(0.5, abs=1e-9)


def test_phi_zero_list_is_infinite():
    F, blocks = masked_entry()
    assert phi(F, blocks, [[0.0, 0.0]], EXACT).value == math.inf
    assert phi_primal(F, blocks, [[0.0, 0.0]]).value == math.inf


@pytest.mark.parametrize("kind", list(NormKind))
def test_phi_eckart_young_minimizer(kind):
    F, blocks = eckart_young(kind)
    assert phi(F, blocks, [[0.0, -1.0]]).value == pytest.approx(1.0, abs=1e-6)
    assert phi_primal(F, blocks, [[0.0, -1.0]]).value == pytest.approx(1.0, abs=1e-9)


def test_phi_scaling_scalar():
    F = scalar_process()
    blocks = [StructureBlock([[1.0]], [[1.0]], "L1", "L1")]
    for c in (0.5, 2.0, 10.0):
        assert phi(F, blocks, [[2.0 * c]], EXACT).value == pytest.approx(0.5 / c, rel=1e-9)


def test_quantity4_eckart_young():
    F, blocks = eckart_young(NormKind.LINF)
    res = quantity4(F, blocks, EXACT)
    assert res.value == pytest.approx(distance_dual(F, blocks, EXACT)[0], abs=1e-9)


def test_quantity4_sampled_never_below_dual():
    F, blocks = eckart_young()
    alpha = distance_dual(F, blocks, SAMPLED)[0]
    rng = np.random.default_rng(3)
    for _ in range(30):
        v = rng.standard_normal(2)
        v /= np.linalg.norm(v)
        assert phi_primal(F, blocks, [v]).value >= alpha - 1e-6


# alternative ------------------------------------------------------------


def test_alternative_second_system():
    F = scalar_process()
    res = alternative_check(F, [StructureBlock([[1.0]], [[1.0]], "L1", "L1")], [[1.0]])
    assert res.which == SYSTEM_II
    assert res.witness["y_star"][0] > 0
    assert res.witness["u_star"][0][0] == pytest.approx(-1.0)
    assert res.residual <= 1e-9


def test_alternative_first_system_when_q_zero():
    F = scalar_process()
    res = alternative_check(F, [StructureBlock([[1.0]], [[0.0]], "L1", "L1")], [[1.0]])
    assert res.which == SYSTEM_I
    x, w = res.witness["x"], res.witness["w"]
    assert w[0] > 0
    assert x[0] == pytest.approx(w[0] * 1.0)
    assert res.margin > 1e-9


def test_alternative_on_half_line():
    F = scalar_process("nonneg")
    res = alternative_check(F, [StructureBlock([[1.0]], [[1.0]], "LINF", "LINF")], [[-1.0]])
    assert res.which == SYSTEM_II
    y, u = res.witness["y_star"][0], res.witness["u_star"][0][0]
    assert y < 0
    # <y*, y_1> Q^T u* in A^T(-y*) + K*, with K* the nonpositive half-line:
    # any |u*| <= 1 with u* <= 1 works, u* = 1 included
    d = y * -1.0
    assert d > 0 and abs(u) <= 1 + 1e-12
    assert d * u - (-y) <= 1e-12


def test_alternative_rejects_l2():
    F = scalar_process()
    with pytest.raises(ValueError, match="polyhedral"):
        alternative_check(F, [StructureBlock([[1.0]], [[1.0]])], [[1.0]])


# reciprocal ---------------------------------------------------------------


def test_reciprocal_sup_masked_entry():
    F, blocks = masked_entry()
    value, x, v = reciprocal_sup(F, blocks[0])
    assert value == pytest.approx(1 / 3, rel=1e-12)
    # P v in F(x) with ||v|| <= 1
    np.testing.assert_allclose(F.A @ x, blocks[0].P @ v, atol=1e-12)


# full suite on the named instances -------------------------------------------


def test_verify_eckart_young_sampled():
    F, blocks = eckart_young()
    report = verify_equalities(F, blocks, SolverConfig(mode="sampled", budget=2000))
    for key in ("q2", "q3", "q4"):
        assert report.values[key] == pytest.approx(1.0, abs=1e-3)
    assert report.values["q1"] >= report.values["q3"] - 1e-6


def test_verify_masked_entry_exact():
    F, blocks = masked_entry()
    report = verify_equalities(F, blocks, EXACT)
    assert report.ok, report.failures
    for key in ("q1", "q2", "q3", "q4"):
        assert report.values[key] == pytest.approx(3.0, abs=1e-9)
    assert [c.found for c in report.dichotomy] == [SYSTEM_I, SYSTEM_II]


def test_verify_nonsurjective():
    F = ConicProcess([[1.0, 0.0], [0.0, 0.0]], PolyhedralCone.full(2))
    report = verify_equalities(F, [StructureBlock(np.eye(2), np.eye(2), "L1", "L1")], EXACT)
    assert report.ok and not report.surjective
    assert set(report.values.values()) == {0.0}


def test_scaled_back_rank_one_stays_surjective():
    F, blocks = masked_entry()
    _, cert = distance_rank_one_search(F, blocks, EXACT)
    assert not is_surjective(perturb(F, blocks, cert.perturbation))[0]
    assert is_surjective(perturb(F, blocks, cert.perturbation.scaled(1 - 1e-3)))[0]
