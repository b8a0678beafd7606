"""Explicit perturbations: the rank-one search and a general random search.

For fixed directions ``v_i`` the rank-one perturbations ``Delta_i = v_i a_i^T``
break surjectivity iff some ``y* != 0`` has
``sum_i Q_i^T s_i - A^T y* in K*`` with ``s_i = -<P_i v_i, y*> a_i``; the
size ``max_i ||v_i|| ||a_i||`` becomes ``max_i ||s_i|| / <P_i v_i, y*>``.  The
search enumerates vertex directions ``v_i``, pins one coordinate of ``y*`` to
``+-1`` per cell, bisects on the size, and returns the assembled matrices.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .. import cones
from ..numerics import ZERO_TOL, ball_extreme_points, dual_norm, norming_functional
from ..process import (
    ConicProcess,
    PerturbationAssignment,
    StructureBlock,
    adjoint,
    images_span,
    is_surjective,
    perturb,
)
from .certificates import DualCertificate, RankOneCertificate
from .config import EXACT, SolverConfig, check_blocks, resolve_mode
from .dual import adjoint_cells, distance_dual, vertex_combinations

SAMPLED_VERIFY_TOL = 1e-7
CERTIFIED_TOL = 1e-12


def _direction_lists(blocks: Sequence[StructureBlock]):
    """Vertex directions per block, dropping those with repeated ``P_i v``."""
    out = []
    for b in blocks:
        V = ball_extreme_points(b.norm_V, b.v_dim)
        keep, seen = [], []
        for v in V:
            pv = b.P @ v
            if not any(np.array_equal(pv, q) for q in seen):
                seen.append(pv)
                keep.append(v)
        out.append(np.array(keep))
    return out


def _zero_certificate(F, blocks, y) -> RankOneCertificate:
    cert = RankOneCertificate.build(F, blocks, y, [np.zeros(b.v_dim) for b in blocks],
                                    [np.zeros(b.u_dim) for b in blocks])
    cert.verified = True
    return cert


def distance_rank_one_search(
    F: ConicProcess,
    blocks: Sequence[StructureBlock],
    config: Optional[SolverConfig] = None,
    dual_certificate: Optional[DualCertificate] = None,
) -> tuple[float, Optional[RankOneCertificate]]:
    """Smallest rank-one structured perturbation making ``F`` nonsurjective.

    Exact mode enumerates vertex directions ``v_i`` and pinned coordinates of
    ``y*``.  Sampled mode turns the adjoint-side certificate into matrices
    ``Delta_i = -n_i (z_i u_i*)^T / ||P_i^T y*||`` with ``n_i`` norming
    ``P_i^T y*``; pass ``dual_certificate`` to reuse one already computed.
    The returned value is the measured size ``max_i ||Delta_i||`` and the
    certificate records whether ``is_surjective`` rejects the perturbed process.
    """
    cfg = config or SolverConfig()
    check_blocks(F, blocks)
    mode = resolve_mode(blocks, cfg.mode)
    surj, y = is_surjective(F)
    if not surj:
        return 0.0, _zero_certificate(F, blocks, y)
    if mode != EXACT:
        return _from_dual(F, blocks, cfg, dual_certificate)

    dirs = _direction_lists(blocks)
    combos = list(vertex_combinations(dirs))
    D_list = [np.vstack([b.P @ v for b, v in zip(blocks, combo)]) for combo in combos]
    pins = [(j, s) for j in range(F.y_dim) for s in (1.0, -1.0)]
    cells = adjoint_cells(F, blocks)
    value, idx, sol = cells.search(D_list, cfg.bisection, pins=pins)
    if idx is None:
        return math.inf, None
    y_star = sol.a
    v = [np.array(r) for r in combos[idx]]
    a = []
    for b, vi, wi in zip(blocks, v, sol.w):
        c = float((b.P @ vi) @ y_star)
        a.append(-wi / c if c > ZERO_TOL else np.zeros(b.u_dim))
    cert = _settle(F, blocks, RankOneCertificate.build(F, blocks, y_star, v, a), cones.MEMBER_TOL)
    return cert.value, cert


def _polish(F, blocks, cert: RankOneCertificate) -> RankOneCertificate:
    """Least-squares correction of the ``a_i`` so the witness condition holds
    to rounding on the equality and active rows of ``K*``.

    With ``y*`` and ``v_i`` fixed, ``g = -A^T y* - sum_i <P_i v_i, y*> Q_i^T a_i``
    is affine in the ``a_i``; the minimum-norm step zeroing those rows is
    added to the ``a_i``.
    """
    y = cert.y_star
    Ke, Ku = cones.cone_rows(adjoint(F).K_polar)
    L = np.hstack([float((b.P @ vi) @ y) * b.Q.T for b, vi in zip(blocks, cert.v)])
    a = np.concatenate(cert.a)
    g = -F.A.T @ y - L @ a
    act = Ku[Ku @ g >= -1e-9] if Ku.size else Ku
    R = np.vstack([Ke, act]) if act.size else Ke
    if R.size == 0:
        return cert
    step = np.linalg.lstsq(R @ L, R @ g, rcond=None)[0]
    a = a + step
    parts = np.split(a, np.cumsum([b.u_dim for b in blocks])[:-1])
    return RankOneCertificate.build(F, blocks, y, cert.v, parts)


def _joint_polish(F, blocks, cert: RankOneCertificate, steps: int = 8) -> RankOneCertificate:
    """Gauss-Newton on ``(y*, a_i)`` together, ``v_i`` and the largest ``|y*_j|`` fixed.

    When the witness condition pins ``y*`` to a subspace (``K*`` with
    equalities) an error in ``y*`` cannot be absorbed by the ``a_i`` alone.
    The residual ``g = -A^T y* - sum_i <P_i v_i, y*> Q_i^T a_i`` is bilinear,
    so Newton steps on its equality and active rows converge quickly.
    """
    Ke, Ku = cones.cone_rows(adjoint(F).K_polar)
    y = cert.y_star.copy()
    a = np.concatenate(cert.a)
    p = [b.P @ vi for b, vi in zip(blocks, cert.v)]
    cuts = np.cumsum([b.u_dim for b in blocks])[:-1]
    j = int(np.argmax(np.abs(y)))
    free = [i for i in range(y.size) if i != j]
    best = cert
    for _ in range(steps):
        parts = np.split(a, cuts)
        g = -F.A.T @ y - sum((float(pi @ y) * (b.Q.T @ ai) for b, pi, ai in zip(blocks, p, parts)),
                             np.zeros(F.x_dim))
        act = Ku[Ku @ g >= -1e-9] if Ku.size else Ku
        R = np.vstack([Ke, act]) if act.size else Ke
        if R.size == 0:
            break
        Jy = -F.A.T - sum((np.outer(b.Q.T @ ai, pi) for b, pi, ai in zip(blocks, p, parts)),
                          np.zeros((F.x_dim, y.size)))
        Ja = np.hstack([-float(pi @ y) * b.Q.T for b, pi in zip(blocks, p)])
        J = R @ np.hstack([Jy[:, free], Ja])
        step = np.linalg.lstsq(J, -(R @ g), rcond=None)[0]
        y[free] += step[:len(free)]
        a = a + step[len(free):]
        trial = RankOneCertificate.build(F, blocks, y, cert.v, np.split(a, cuts))
        if trial.residual < best.residual:
            best = trial
        if trial.residual <= 1e-15:
            break
    return best


def _settle(F, blocks, cert: RankOneCertificate, tol: float) -> RankOneCertificate:
    """Verify ``cert``; if rounding leaves the perturbed process barely
    surjective, move to the breaking threshold along the same direction.

    The rescaled perturbation differs in size by a relative ``1e-6`` at most;
    its stored witness is the one the surjectivity test returns.
    """
    if cert.verify(F, blocks, tol):
        return cert
    if cert.perturbation.size <= 0:
        return cert
    cert = _polish(F, blocks, cert)
    if cert.verify(F, blocks, tol):
        return cert
    joint = _joint_polish(F, blocks, cert)
    if joint.verify(F, blocks, tol):
        return joint

    def breaks(f):
        return not is_surjective(perturb(F, blocks, cert.perturbation.scaled(f)), CERTIFIED_TOL)[0]

    lo = 1.0
    for hi in (1 + 1e-9, 1 + 1e-8, 1 + 1e-7, 1 + 1e-6):
        if breaks(hi):
            break
        lo = hi
    else:
        return cert
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if breaks(mid):
            hi = mid
        else:
            lo = mid
    f = hi
    surj, y = is_surjective(perturb(F, blocks, cert.perturbation.scaled(f)), tol)
    if surj:
        return cert
    out = RankOneCertificate.build(F, blocks, y, cert.v, [f * ai for ai in cert.a])
    out.verify(F, blocks, tol)
    return out


def _from_dual(F, blocks, cfg, dual):
    if dual is None:
        _, dual = distance_dual(F, blocks, cfg)
    if dual is None:
        return math.inf, None
    cert = _rank_one_from_dual(F, blocks, dual, SAMPLED_VERIFY_TOL)
    return cert.value, cert


def _rank_one_from_dual(F, blocks, dual: DualCertificate, tol: float) -> RankOneCertificate:
    """``Delta_i = -n_i (z_i u_i*)^T / ||P_i^T y*||`` with ``n_i`` norming ``P_i^T y*``."""
    v, a = [], []
    for b, u, z in zip(blocks, dual.u_star, dual.z):
        g = b.P.T @ dual.y_star
        d = dual_norm(b.norm_V, g)
        if z <= ZERO_TOL or d <= ZERO_TOL:
            v.append(np.zeros(b.v_dim))
            a.append(np.zeros(b.u_dim))
            continue
        v.append(-norming_functional(b.norm_V.dual, g))
        a.append(z * np.asarray(u) / d)
    return _settle(F, blocks, RankOneCertificate.build(F, blocks, dual.y_star, v, a), tol)


def _random_direction(rng, blocks) -> PerturbationAssignment:
    T = [rng.standard_normal((b.v_dim, b.u_dim)) for b in blocks]
    P = PerturbationAssignment(T, blocks)
    return P.scaled(1.0 / P.size) if P.size > 0 else P


def threshold_along(F, blocks, direction: PerturbationAssignment, upper: float = math.inf,
                    hint: Optional[float] = None, rel_tol: float = 1e-10, min_exponent: int = -30,
                    max_exponent: int = 24, tol: float = 1e-11) -> float:
    """A small ``c`` with ``F + c * direction`` nonsurjective (``inf`` if none below ``upper``).

    The first breaking point of an ascending geometric grid (``hint`` tried
    first), found with the fast spanning test, is refined by bisection with
    the witness-based surjectivity test against the largest grid point below
    it that still leaves ``F`` surjective.  Both ends are checked, so the
    result is always a breaking size even when the breaking set is not an
    interval.
    The grid stops at ``2**max_exponent``: beyond that the rank test cannot
    separate ``A`` from rounding in ``c * direction``.  For a full cone and
    square ``A`` the exact threshold comes from generalized eigenvalues.
    """
    M = direction.matrix()
    if F.K.is_full and F.A.shape[0] == F.A.shape[1]:
        return _square_threshold(F.A, M, upper)

    def process(c):
        return ConicProcess(F.A + c * M, F.K, F.x_norm, F.y_norm)

    def breaks(c):
        return not images_span(process(c), tol)

    def certified(c):
        return not is_surjective(process(c), CERTIFIED_TOL)[0]

    lo, hi = 0.0, None
    if hint is not None and hint < upper and breaks(hint):
        hi = hint
    grid = [2.0 ** e for e in range(min_exponent, max_exponent + 1)]
    for c in grid:
        if c >= (hi if hi is not None else upper):
            break
        if breaks(c):
            hi = c
            break
        lo = c
    if hi is None:
        return math.inf
    # near the threshold the spanning LP is ill-conditioned and reports a
    # break slightly early; refine with the witness-based test instead
    if not certified(hi):
        for step in (1e-10, 1e-9, 1e-8, 1e-7, 1e-6):
            if certified(hi * (1 + step)):
                lo, hi = hi, hi * (1 + step)
                break
        else:
            return hi
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if certified(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _square_threshold(A: np.ndarray, M: np.ndarray, upper: float) -> float:
    """Smallest ``c > 0`` with ``A + c M`` singular, from generalized eigenvalues.

    With ``K`` the whole space and ``A`` square, surjectivity is invertibility
    and the breaking sizes are the positive real solutions of
    ``det(A + c M) = 0``, isolated points a grid would miss.
    """
    lam = scipy.linalg.eigvals(A, -M)
    lam = lam[np.isfinite(lam)]
    real = lam[np.abs(lam.imag) <= 1e-9 * np.maximum(1.0, np.abs(lam))].real
    real = real[real > 0]
    c = float(real.min()) if real.size else math.inf
    return c if c < upper else math.inf


def general_search(
    F: ConicProcess,
    blocks: Sequence[StructureBlock],
    config: Optional[SolverConfig] = None,
    seeds: Sequence[PerturbationAssignment] = (),
) -> tuple[float, Optional[PerturbationAssignment]]:
    """Upper bound on the distance over general (not necessarily rank-one) ``T_i``.

    Directions are the normalized ``seeds``, noisy copies of them, and random
    Gaussian matrices; along each, :func:`threshold_along` finds a breaking
    size.  The best perturbation is re-checked with the certified
    (witness-producing) surjectivity test.
    """
    cfg = config or SolverConfig()
    check_blocks(F, blocks)
    surj, _ = is_surjective(F)
    if not surj:
        return 0.0, PerturbationAssignment.zeros(blocks)
    rng = np.random.default_rng(cfg.seed)
    dirs, hints = [], []
    for s in seeds:
        if s is not None and s.size > 0:
            base = s.scaled(1.0 / s.size)
            dirs.append(base)
            hints.append(s.size)
            noise = _random_direction(rng, blocks)
            mixed = PerturbationAssignment([t + 0.1 * n for t, n in zip(base.T, noise.T)], blocks)
            if mixed.size > 0:
                dirs.append(mixed.scaled(1.0 / mixed.size))
                hints.append(None)
    dirs += [_random_direction(rng, blocks) for _ in range(cfg.general_directions)]
    hints += [None] * cfg.general_directions
    best, best_T = math.inf, None
    for d, h in zip(dirs, hints):
        if d.size == 0:
            continue
        c = threshold_along(F, blocks, d, best, h)
        if c < best:
            best, best_T = c, d.scaled(c)
    if best_T is None:
        return math.inf, None
    return best_T.size, best_T


def breaks_surjectivity(F, blocks, T: PerturbationAssignment, tol: float = 1e-9) -> bool:
    """Certified check that ``F + sum P_i T_i Q_i`` is not surjective."""
    surj, _ = is_surjective(perturb(F, blocks, T), tol)
    return not surj
