"""Distance to nonsurjectivity through the adjoint-side formula.

``alpha = inf max_i ||s_i|| / ||P_i^T y*||`` over ``y* != 0`` and ``s_i`` with
``sum_i Q_i^T s_i in A^T y* + K*``.  In exact mode the dual norm in the
denominator is a maximum over vertices of the ``V_i`` ball, so each choice of
vertex gives one ratio cell (:mod:`.cells`) on the adjoint graph.
"""

from __future__ import annotations

import itertools
import math
from typing import Optional, Sequence

import numpy as np

from .. import lp_core
from ..cones import cone_rows
from ..numerics import ball_extreme_points, dual_ball_extreme_points, norm
from ..process import (
    ConicProcess,
    PerturbationAssignment,
    StructureBlock,
    adjoint,
    is_singular,
    is_surjective,
)
from . import sampled
from .cells import CellProblem
from .certificates import DualCertificate, PrimalRankOneCertificate, build_rank_one
from .config import EXACT, ModeError, SolverConfig, check_blocks, resolve_mode

MAX_CELLS = 50_000


def _unique_rows(M: np.ndarray) -> np.ndarray:
    out = []
    for r in M:
        if not any(np.array_equal(r, q) for q in out):
            out.append(r)
    return np.array(out)


def vertex_combinations(vectors: Sequence[np.ndarray]):
    """All choices of one row from each block's candidate list."""
    total = math.prod(len(v) for v in vectors)
    if total > MAX_CELLS:
        raise ModeError(f"exact enumeration needs {total} cells (limit {MAX_CELLS})")
    return itertools.product(*vectors)


def adjoint_cells(F: ConicProcess, blocks: Sequence[StructureBlock]) -> CellProblem:
    """Cells for ``sum_i Q_i^T s_i in G*(a)``, ``||s_i||_{U_i*} <= t <D_i, a>``."""
    graph = adjoint(F).graph_rows()
    return CellProblem(
        graph,
        [b.Q.T for b in blocks],
        [ball_extreme_points(b.norm_U, b.u_dim) for b in blocks],
    )


def _denominators(blocks: Sequence[StructureBlock]) -> list:
    """Per block, the vectors ``P_i n`` for vertices ``n`` of the ``V_i`` ball."""
    return [_unique_rows((b.P @ ball_extreme_points(b.norm_V, b.v_dim).T).T) for b in blocks]


def _nonsurjective_certificate(F, blocks, y) -> DualCertificate:
    return DualCertificate(
        y_star=y,
        u_star=[np.zeros(b.u_dim) for b in blocks],
        z=[0.0] * len(blocks),
        value=0.0,
        residual=0.0,
    )


def distance_dual(
    F: ConicProcess,
    blocks: Sequence[StructureBlock],
    config: Optional[SolverConfig] = None,
) -> tuple[float, Optional[DualCertificate]]:
    """Structured distance to nonsurjectivity from the adjoint-side formula.

    Returns ``(alpha, certificate)``.  A nonsurjective ``F`` gives ``alpha = 0``
    with its witness; ``alpha = inf`` (no certificate) when no structured
    perturbation can break surjectivity.
    """
    cfg = config or SolverConfig()
    check_blocks(F, blocks)
    mode = resolve_mode(blocks, cfg.mode)
    surj, y = is_surjective(F)
    if not surj:
        return 0.0, _nonsurjective_certificate(F, blocks, y)
    if mode != EXACT:
        return sampled.distance_dual_sampled(F, blocks, cfg)
    cells = adjoint_cells(F, blocks)
    value, idx, sol = cells.search([np.vstack(c) for c in vertex_combinations(_denominators(blocks))], cfg.bisection)
    if idx is None:
        return math.inf, None
    # The cell point satisfies the ratio rows only up to the LP tolerance,
    # which a small denominator amplifies; re-solve the inner problem at the
    # witness direction for a certificate whose measured value is accurate.
    inner_value, s = sampled.AdjointInner(F, blocks).solve(sol.a)
    cert = DualCertificate.from_solution(F, blocks, sol.a, s if math.isfinite(inner_value) else sol.w)
    return value, cert


def singular_cells(F: ConicProcess, blocks: Sequence[StructureBlock]) -> CellProblem:
    """Cells for ``sum_i P_i w_i in F(a)``, ``||w_i||_{V_i} <= t <D_i, a>``."""
    return CellProblem(
        F.graph_rows(),
        [b.P for b in blocks],
        [dual_ball_extreme_points(b.norm_V, b.v_dim) for b in blocks],
    )


def distance_singular(
    F: ConicProcess,
    blocks: Sequence[StructureBlock],
    config: Optional[SolverConfig] = None,
) -> tuple[float, Optional[PrimalRankOneCertificate]]:
    """Structured distance to singularity, ``inf max_i z_i / ||Q_i x||``.

    The infimum runs over ``x != 0`` and ``v_i`` in the unit balls with
    ``sum_i z_i P_i v_i in F(x)``.  For a conic process this is in general a
    different number from the distance to nonsurjectivity; the two agree
    when ``K`` is the whole space and ``A`` is square.  Exact mode only.
    """
    cfg = config or SolverConfig()
    check_blocks(F, blocks)
    if not all(b.polyhedral for b in blocks):
        raise ModeError("exact mode requires polyhedral norms")
    sing, x = is_singular(F)
    if sing:
        cert = PrimalRankOneCertificate(
            x, [np.zeros(b.v_dim) for b in blocks], [0.0] * len(blocks),
            PerturbationAssignment.zeros(blocks), 0.0,
        )
        return 0.0, cert
    D = [_unique_rows((b.Q.T @ dual_ball_extreme_points(b.norm_U, b.u_dim).T).T) for b in blocks]
    cells = singular_cells(F, blocks)
    value, idx, sol = cells.search([np.vstack(c) for c in vertex_combinations(D)], cfg.bisection)
    if idx is None:
        return math.inf, None
    x = sol.a / np.abs(sol.a).max()
    scale = 1.0 / np.abs(sol.a).max()
    w = [scale * wi for wi in sol.w]
    z = [norm(b.norm_V, wi) for b, wi in zip(blocks, w)]
    v = [wi / zi if zi > 0 else np.zeros_like(wi) for wi, zi in zip(w, z)]
    T = []
    for b, wi, zi in zip(blocks, w, z):
        if zi > 0 and norm(b.norm_U, b.Q @ x) > 0:
            T.append(-build_rank_one(x, wi, b))
        else:
            T.append(np.zeros((b.v_dim, b.u_dim)))
    pert = PerturbationAssignment(T, blocks)
    lhs = sum((b.P @ wi for b, wi in zip(blocks, w)), np.zeros(F.y_dim))
    res = float(np.abs(lhs - F.A @ x).max()) if F.y_dim else 0.0
    return pert.size, PrimalRankOneCertificate(x, v, z, pert, pert.size, res)


def reciprocal_sup(F: ConicProcess, block: StructureBlock) -> tuple[float, Optional[np.ndarray], Optional[np.ndarray]]:
    """``sup { ||Q x|| : P v in F(x), ||v|| <= 1 }`` for a single block.

    One LP per vertex ``e`` of the dual ``U`` ball maximizing ``<e, Q x>``;
    returns ``(value, x, v)`` with ``value = inf`` when unbounded.
    """
    if not block.polyhedral:
        raise ModeError("exact mode requires polyhedral norms")
    n, p = F.x_dim, block.v_dim
    Ke, Ku = _cone_rows(F)
    A_eq = np.vstack([np.hstack([F.A, -block.P]), np.hstack([Ke, np.zeros((Ke.shape[0], p))])])
    Fv = dual_ball_extreme_points(block.norm_V, p)
    A_ub = np.vstack([np.hstack([Ku, np.zeros((Ku.shape[0], p))]), np.hstack([np.zeros((Fv.shape[0], n)), Fv])])
    b_ub = np.concatenate([np.zeros(Ku.shape[0]), np.ones(Fv.shape[0])])
    best, bx, bv = 0.0, np.zeros(n), np.zeros(p)
    for e in dual_ball_extreme_points(block.norm_U, block.u_dim):
        c = np.concatenate([-(block.Q.T @ e), np.zeros(p)])
        out = lp_core.solve(lp_core.LinearProgram(c, A_eq, np.zeros(A_eq.shape[0]), A_ub, b_ub, [(None, None)] * (n + p)))
        if out.status is lp_core.Status.UNBOUNDED:
            return math.inf, None, None
        if out.optimal and -out.value > best:
            best, bx, bv = -out.value, out.x[:n], out.x[n:]
    return best, bx, bv


def reciprocal_sup_sampled(F: ConicProcess, block: StructureBlock, budget: int = 200, seed: int = 0) -> float:
    """Lower bound on :func:`reciprocal_sup` from random ``v`` on the unit sphere of ``V``."""
    if not block.polyhedral:
        raise ModeError("exact mode requires polyhedral norms")
    rng = np.random.default_rng(seed)
    n = F.x_dim
    Ke, Ku = _cone_rows(F)
    A_eq = np.vstack([F.A, Ke])
    E = dual_ball_extreme_points(block.norm_U, block.u_dim)
    best = 0.0
    for _ in range(budget):
        v = rng.standard_normal(block.v_dim)
        nv = norm(block.norm_V, v)
        if nv == 0:
            continue
        b_eq = np.concatenate([block.P @ (v / nv), np.zeros(Ke.shape[0])])
        for e in E:
            out = lp_core.solve(lp_core.LinearProgram(-(block.Q.T @ e), A_eq, b_eq, Ku,
                                                      np.zeros(Ku.shape[0]), [(None, None)] * n))
            if out.status is lp_core.Status.UNBOUNDED:
                return math.inf
            if out.optimal:
                best = max(best, -out.value)
    return best


def _cone_rows(F: ConicProcess):
    return cone_rows(F.K)
