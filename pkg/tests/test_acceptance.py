"""Acceptance criteria 1-7, each at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL`` line (with its worst
deviation and runtime); the lines are printed in the pytest terminal summary
and when this file is run as a script.
"""

import math
import time

import numpy as np
import pytest

from conicdist.cones import PolyhedralCone
from conicdist.distance import (
    SolverConfig,
    alternative_check,
    distance_dual,
    distance_rank_one_search,
    general_search,
    phi,
    quantity4,
    reciprocal_sup,
    verify_equalities,
)
from conicdist.distance.phi import SYSTEM_I, SYSTEM_II
from conicdist.generators import random_exact_instance, random_square_instance, random_y_list
from conicdist.numerics import NormKind, norm, smallest_singular_value
from conicdist.process import ConicProcess, StructureBlock, is_singular, is_surjective, perturb

RESULTS = {}
EXACT = SolverConfig(mode="exact")
SAMPLED = SolverConfig(mode="sampled")


def record(n, ok, detail, seconds):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  ({seconds:.1f} s)"
    RESULTS[n] = line
    print(line)
    return ok


# 1 ---------------------------------------------------------------------------


def test_criterion_1_eckart_young():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        inst = random_square_instance(rng, unstructured=True, norm_kind=NormKind.L2)
        sigma = smallest_singular_value(inst.F.A)
        alpha, _ = distance_dual(inst.F, inst.blocks, SAMPLED)
        worst = max(worst, abs(alpha - sigma) / max(1.0, sigma))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-3 and dt < 30
    record(1, ok, f"100 instances, worst |alpha - sigma_min| / max(1, sigma_min) = {worst:.2e} (<= 1e-3)", dt)
    assert worst <= 1e-3
    assert dt < 30


# 2 and 4 share their instances ---------------------------------------------------


@pytest.fixture(scope="module")
def four_way():
    rng = np.random.default_rng(202)
    rows = []
    t0 = time.perf_counter()
    for _ in range(50):
        inst = random_exact_instance(rng)
        F, blocks = inst.F, inst.blocks
        q3, _ = distance_dual(F, blocks, EXACT)
        q2, cert = distance_rank_one_search(F, blocks, EXACT)
        q4 = quantity4(F, blocks, EXACT, seed_v=cert.v if cert is not None else None).value
        q1, _ = general_search(F, blocks, EXACT, seeds=[cert.perturbation] if cert is not None else [])
        rows.append((inst, q1, q2, q3, q4, cert))
    return rows, time.perf_counter() - t0


def _gap(a, b):
    if math.isinf(a) and math.isinf(b):
        return 0.0
    return abs(a - b)


def test_criterion_2_four_way_equality(four_way):
    rows, dt = four_way
    worst = max(max(_gap(q2, q3), _gap(q4, q3), _gap(q2, q4)) for _, _, q2, q3, q4, _ in rows)
    undercut = max(q3 - q1 for _, q1, _, q3, _, _ in rows if math.isfinite(q3))
    finite = sum(math.isfinite(r[3]) for r in rows)
    ok = worst <= 1e-5 and undercut <= 1e-9 and dt < 60
    record(2, ok, f"50 instances ({finite} finite), worst pairwise gap {worst:.2e} (<= 1e-5), "
                  f"largest q3 - q1 {undercut:.2e} (<= 1e-9)", dt)
    assert worst <= 1e-5
    assert undercut <= 1e-9
    assert dt < 60


def test_criterion_4_certificate_validity(four_way):
    rows, _ = four_way
    t0 = time.perf_counter()
    bad = []
    for i, (inst, _, q2, q3, _, cert) in enumerate(rows):
        if not math.isfinite(q3):
            continue
        T = cert.perturbation
        if is_surjective(perturb(inst.F, inst.blocks, T))[0]:
            bad.append(f"{i}: perturbation at alpha leaves F surjective")
        if not is_surjective(perturb(inst.F, inst.blocks, T.scaled(1 - 1e-3)))[0]:
            bad.append(f"{i}: scaled perturbation already breaks F")
        if abs(T.size - q3) > 1e-5:
            bad.append(f"{i}: certificate size {T.size} vs alpha {q3}")
    dt = time.perf_counter() - t0
    record(4, not bad, f"{sum(math.isfinite(r[3]) for r in rows)} certificates, {len(bad)} failures", dt)
    assert not bad, bad


# 3 ---------------------------------------------------------------------------


def test_criterion_3_dichotomy():
    rng = np.random.default_rng(303)
    t0 = time.perf_counter()
    counts = {SYSTEM_I: 0, SYSTEM_II: 0}
    worst, errors = 0.0, []
    for i in range(200):
        inst = random_exact_instance(rng)
        y_list = random_y_list(rng, inst)
        try:
            res = alternative_check(inst.F, inst.blocks, y_list)
        except Exception as exc:  # both or neither: the property under test
            errors.append(f"{i}: {exc}")
            continue
        counts[res.which] += 1
        worst = max(worst, res.residual)
        if res.which == SYSTEM_I:
            x, w = res.witness["x"], res.witness["w"]
            gaps = [wi - norm(b.norm_U, b.Q @ x) for b, wi in zip(inst.blocks, w)]
            if min(gaps) < 1e-9:
                errors.append(f"{i}: strict margin {min(gaps):.2e}")
    dt = time.perf_counter() - t0
    ok = not errors and worst <= 1e-9
    record(3, ok, f"200 instances, SystemI {counts[SYSTEM_I]} / SystemII {counts[SYSTEM_II]}, "
                  f"worst witness residual {worst:.2e} (<= 1e-9), {len(errors)} errors", dt)
    assert not errors, errors
    assert worst <= 1e-9


# 5 ---------------------------------------------------------------------------


def test_criterion_5_masked_entry():
    t0 = time.perf_counter()
    F = ConicProcess(np.diag([3.0, 1.0]), PolyhedralCone.full(2))
    masked = [StructureBlock([[1.0], [0.0]], [[1.0, 0.0]], "LINF", "LINF")]
    report = verify_equalities(F, masked, EXACT)
    worst = max(abs(v - 3.0) for v in report.values.values())
    unstructured = [StructureBlock(np.eye(2), np.eye(2), "L2", "L2")]
    loose = verify_equalities(F, unstructured, SAMPLED)
    worst_u = max(abs(loose.values[k] - 1.0) for k in ("q2", "q3", "q4"))
    q1_u = loose.values["q1"]
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and worst_u <= 1e-3 and q1_u >= 1.0 - 1e-3
    record(5, ok, f"masked worst |q - 3| = {worst:.2e} (<= 1e-9), unstructured worst |q - 1| = {worst_u:.2e} "
                  f"(<= 1e-3), q1 = {q1_u:.6f}", dt)
    assert worst <= 1e-9
    assert worst_u <= 1e-3
    assert q1_u >= 1.0 - 1e-3


# 6 ---------------------------------------------------------------------------


def test_criterion_6_invariance():
    rng = np.random.default_rng(606)
    t0 = time.perf_counter()
    scale_err = mono_err = phi_err = 0.0
    for _ in range(50):
        inst = random_exact_instance(rng)
        F, blocks = inst.F, inst.blocks
        alpha, _ = distance_dual(F, blocks, EXACT)
        c = float(rng.choice([0.5, 2.0, 10.0]))
        alpha_c, _ = distance_dual(ConicProcess(c * F.A, F.K), blocks, EXACT)
        if math.isfinite(alpha):
            scale_err = max(scale_err, abs(alpha_c - c * alpha) / (c * alpha))
        elif math.isfinite(alpha_c):
            scale_err = math.inf

        extra = StructureBlock(rng.standard_normal((F.y_dim, 2)), rng.standard_normal((2, F.x_dim)),
                               rng.choice(["L1", "LINF"]), rng.choice(["L1", "LINF"]))
        alpha_more, _ = distance_dual(F, blocks + [extra], EXACT)
        if math.isfinite(alpha_more):
            mono_err = max(mono_err, alpha_more - alpha)

        y_list = random_y_list(rng, inst)
        p = phi(F, blocks, y_list, EXACT).value
        p_c = phi(F, blocks, [c * y for y in y_list], EXACT).value
        if math.isfinite(p) and p > 0:
            phi_err = max(phi_err, abs(p_c - p / c) / (p / c))
        elif p != p_c:
            phi_err = math.inf
    dt = time.perf_counter() - t0
    ok = scale_err <= 1e-6 and mono_err <= 1e-9 and phi_err <= 1e-6
    record(6, ok, f"50 instances each: scaling rel err {scale_err:.2e} (<= 1e-6), monotonicity excess "
                  f"{mono_err:.2e} (<= 1e-9), Phi scaling rel err {phi_err:.2e} (<= 1e-6)", dt)
    assert scale_err <= 1e-6
    assert mono_err <= 1e-9
    assert phi_err <= 1e-6


# 7 ---------------------------------------------------------------------------


def test_criterion_7_reciprocal():
    rng = np.random.default_rng(707)
    t0 = time.perf_counter()
    worst, used = 0.0, 0
    while used < 50:
        inst = random_square_instance(rng)
        F, block = inst.F, inst.blocks[0]
        assert not is_singular(F)[0]
        alpha, _ = distance_dual(F, [block], EXACT)
        sup, _, _ = reciprocal_sup(F, block)
        used += 1
        if math.isinf(alpha):
            worst = max(worst, 0.0 if sup == 0 else math.inf)
            continue
        worst = max(worst, abs(sup - 1.0 / alpha) * alpha)
    dt = time.perf_counter() - t0
    record(7, worst <= 1e-4, f"50 instances, worst relative |sup - 1/alpha| = {worst:.2e} (<= 1e-4)", dt)
    assert worst <= 1e-4


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
