"""The inf-sup function ``Phi``, its minimization over unit-ball directions, and
the two-system alternative it is built on.

``Phi((y_i)) = sup { min_i w_i / ||Q_i x|| : x, w_i > 0, sum_i w_i y_i in F(x) }``.

Two independent evaluations are provided.  The dual route computes
``Psi((y_i)) = inf max_i ||s_i|| / <y*, y_i>`` over ``y* != 0`` with
``sum_i Q_i^T s_i in A^T(-y*) + K*``, as one ratio cell on the adjoint graph.
The primal route works on ``Phi`` directly: ``Phi >= 1/r`` iff some ``x`` in
``K`` and ``0 < w <= 1`` satisfy ``sum_i w_i y_i = A x`` and
``||Q_i x|| <= r w_i``, an LP in ``(x, w)`` for polyhedral norms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import cones, lp_core
from ..numerics import NormKind, ZERO_TOL, ball_extreme_points, dual_ball_extreme_points, norm, sphere_angles, \
    sphere_point
from ..process import ConicProcess, StructureBlock, adjoint
from .cells import BisectionConfig, CellProblem
from .certificates import PhiEvaluation, phi_dual_residual
from .config import AUTO, EXACT, SAMPLED, ModeError, SolverConfig, check_blocks, resolve_mode
from .dual import adjoint_cells, vertex_combinations
from .sampled import AdjointInner, polish_angles, sphere_search

MARGIN_TOL = 1e-9


class DichotomyError(RuntimeError):
    """Both or neither of the two alternative systems appear solvable."""

    def __init__(self, message: str, residuals: dict):
        super().__init__(f"{message}: {residuals}")
        self.residuals = residuals


def _ylist(y_list) -> list:
    return [np.asarray(y, dtype=float).ravel() for y in y_list]


# dual route ---------------------------------------------------------------


def _dual_witness(y_list, a, s_list) -> tuple[np.ndarray, list]:
    y_star = -np.asarray(a, dtype=float)
    u = []
    for y, s in zip(y_list, s_list):
        d = float(y_star @ y)
        u.append(s / d if d > ZERO_TOL else np.zeros_like(s))
    return y_star, u


class _PsiInner(AdjointInner):
    """Inner problem of ``Psi`` for a fixed adjoint point ``a = -y*``."""

    def __init__(self, F, blocks, y_list):
        super().__init__(F, blocks)
        self.fast = False
        self.y_list = y_list

    def denominators(self, a):
        return np.array([-float(np.asarray(a) @ y) for y in self.y_list])

    def solve(self, a):
        d = self.denominators(a)
        if (d < -ZERO_TOL).any():
            return math.inf, None
        return super().solve(a)


def phi(
    F: ConicProcess,
    blocks: Sequence[StructureBlock],
    y_list,
    config: Optional[SolverConfig] = None,
) -> PhiEvaluation:
    """``Phi`` at ``(y_i)`` through the dual expression, with its witness.

    Exact mode solves one ratio cell (a single LP for one block, bisection
    otherwise).  Sampled mode searches ``y*`` over the sphere.  Only the
    ``Q_i`` and ``norm_U`` parts of the blocks are used.
    """
    cfg = config or SolverConfig()
    y_list = _ylist(y_list)
    mode = _phi_mode(blocks, cfg.mode)
    if mode == EXACT:
        cells = adjoint_cells(F, blocks)
        D = np.vstack([-y for y in y_list])
        sol = cells.min_ratio(D, cfg.bisection)
        if not math.isfinite(sol.value):
            return PhiEvaluation(y_list, math.inf, route="dual")
        # re-solve the inner problem at the witness direction, as for the
        # distance itself, so the witness carries no bisection slack
        inner_value, s = _PsiInner(F, blocks, y_list).solve(sol.a)
        y_star, u = _dual_witness(y_list, sol.a, s if math.isfinite(inner_value) else sol.w)
        res = phi_dual_residual(F, blocks, y_list, y_star, u)
        return PhiEvaluation(y_list, sol.value, y_star, u, route="dual", residual=res)
    inner = _PsiInner(F, blocks, y_list)
    rng = np.random.default_rng(cfg.seed)
    count = min(cfg.budget, cfg.slow_budget) if inner.expensive else cfg.budget
    a, value = sphere_search(lambda a: inner.solve(a)[0], None, F.y_dim, count, rng, cfg.polish,
                             cfg.polish_sweeps)
    if not math.isfinite(value):
        return PhiEvaluation(y_list, math.inf, route="dual")
    _, s = inner.solve(a)
    y_star, u = _dual_witness(y_list, a, s)
    res = phi_dual_residual(F, blocks, y_list, y_star, u)
    return PhiEvaluation(y_list, value, y_star, u, route="dual", residual=res)


def _phi_mode(blocks, mode: str) -> str:
    # Phi does not involve P_i or the V_i norms
    if mode == EXACT and not all(b.norm_U.polyhedral for b in blocks):
        raise ModeError("exact mode requires polyhedral norms")
    if mode == AUTO:
        return EXACT if all(b.norm_U.polyhedral for b in blocks) else SAMPLED
    return mode


# primal route -------------------------------------------------------------


class PrimalPhi:
    """Evaluates ``Phi`` on the primal side for fixed ``Q`` blocks."""

    def __init__(self, F: ConicProcess, blocks: Sequence[StructureBlock], bisection: Optional[BisectionConfig] = None):
        self.F = F
        self.blocks = list(blocks)
        self.k = len(self.blocks)
        self.cfg = bisection or BisectionConfig()
        self.Ke, self.Ku = cones.cone_rows(F.K)
        self.polyhedral = all(b.norm_U.polyhedral for b in self.blocks)
        self._E = [dual_ball_extreme_points(b.norm_U, b.u_dim) if b.norm_U.polyhedral else None
                   for b in self.blocks]

    # single block: Phi = 1 / min { ||Q x|| : A x = y, x in K }

    def _min_norm(self, y):
        F, b = self.F, self.blocks[0]
        n = F.x_dim
        if self._E[0] is not None:
            E = self._E[0] @ b.Q
            A_eq = np.vstack([np.hstack([F.A, np.zeros((F.y_dim, 1))]), np.hstack([self.Ke, np.zeros((self.Ke.shape[0], 1))])])
            b_eq = np.concatenate([y, np.zeros(self.Ke.shape[0])])
            A_ub = np.vstack([np.hstack([self.Ku, np.zeros((self.Ku.shape[0], 1))]), np.hstack([E, -np.ones((E.shape[0], 1))])])
            c = np.zeros(n + 1)
            c[-1] = 1.0
            out = lp_core.solve(lp_core.LinearProgram(c, A_eq, b_eq, A_ub, np.zeros(A_ub.shape[0]),
                                                      [(None, None)] * n + [(0.0, None)]),
                                tol=self.cfg.lp_tol)
            if not out.optimal:
                return None, None
            return max(out.value, 0.0), out.x[:n]
        if self.F.K.is_full:
            x0, *_ = np.linalg.lstsq(F.A, y, rcond=None)
            if np.abs(F.A @ x0 - y).max(initial=0.0) > 1e-9 * max(1.0, np.abs(y).max(initial=0.0)):
                return None, None
            N = _null(F.A)
            if N.shape[1]:
                z, *_ = np.linalg.lstsq(b.Q @ N, -(b.Q @ x0), rcond=None)
                x0 = x0 + N @ z
            return float(np.linalg.norm(b.Q @ x0)), x0
        return self._min_norm_conic(y)

    def _min_norm_conic(self, y):
        import cvxpy as cp

        b = self.blocks[0]
        x = cp.Variable(self.F.x_dim)
        cons = [self.F.A @ x == y] + self._cvx_cone(x)
        prob = cp.Problem(cp.Minimize(cp.norm(b.Q @ x, _order(b.norm_U))), cons)
        prob.solve(solver=cp.CLARABEL)
        if prob.status not in ("optimal", "optimal_inaccurate"):
            return None, None
        return float(prob.value), np.asarray(x.value, dtype=float)

    def _cvx_cone(self, x):
        cons = []
        if self.Ke.size:
            cons.append(self.Ke @ x == 0)
        if self.Ku.size:
            cons.append(self.Ku @ x <= 0)
        return cons

    # several blocks: bisection on r with the margin LP

    def margin(self, y_list, r: float):
        """``(delta, x, w)`` maximizing ``min_i w_i`` with ``w <= 1`` at ratio ``r``."""
        if not self.polyhedral:
            return self._margin_conic(y_list, r)
        F, k, n = self.F, self.k, self.F.x_dim
        nv = n + k + 1
        Y = np.column_stack(y_list)
        A_eq = np.vstack([
            np.hstack([-F.A, Y, np.zeros((F.y_dim, 1))]),
            np.hstack([self.Ke, np.zeros((self.Ke.shape[0], k + 1))]),
        ])
        rows = [np.hstack([self.Ku, np.zeros((self.Ku.shape[0], k + 1))])]
        for i, b in enumerate(self.blocks):
            E = self._E[i] @ b.Q
            r_rows = np.zeros((E.shape[0], nv))
            # divide by r when it is large to keep the coefficients bounded
            sc = max(r, 1.0)
            r_rows[:, :n] = E / sc
            r_rows[:, n + i] = -r / sc
            rows.append(r_rows)
        dl = np.zeros((k, nv))
        dl[:, n:n + k] = -np.eye(k)
        dl[:, -1] = 1.0
        rows.append(dl)
        A_ub = np.vstack(rows)
        c = np.zeros(nv)
        c[-1] = -1.0
        out = lp_core.solve(lp_core.LinearProgram(
            c, A_eq, np.zeros(A_eq.shape[0]), A_ub, np.zeros(A_ub.shape[0]),
            [(None, None)] * n + [(None, 1.0)] * k + [(None, 1.0)]), tol=self.cfg.lp_tol)
        if not out.optimal:
            return -math.inf, None, None
        return -out.value, out.x[:n], out.x[n:n + k]

    def _margin_conic(self, y_list, r):
        import cvxpy as cp

        x = cp.Variable(self.F.x_dim)
        w = cp.Variable(self.k)
        delta = cp.Variable()
        cons = [self.F.A @ x == sum(w[i] * y for i, y in enumerate(y_list)), w <= 1, delta <= w]
        cons += self._cvx_cone(x)
        for i, b in enumerate(self.blocks):
            cons.append(cp.norm(b.Q @ x, _order(b.norm_U)) <= r * w[i])
        prob = cp.Problem(cp.Maximize(delta), cons)
        prob.solve(solver=cp.CLARABEL)
        if prob.status not in ("optimal", "optimal_inaccurate"):
            return -math.inf, None, None
        return float(delta.value), np.asarray(x.value, dtype=float), np.asarray(w.value, dtype=float)

    def _ok(self, y_list, r):
        d, x, w = self.margin(y_list, r)
        return d > MARGIN_TOL, x, w

    def evaluate(self, y_list, upper: float = math.inf):
        """``(Phi, x, w)``; when ``Phi`` is not below ``upper`` returns ``(inf, None, None)``
        if ``upper`` is finite, so callers can prune.
        """
        y_list = _ylist(y_list)
        if self.k == 1:
            m, x = self._min_norm(y_list[0])
            if m is None:
                val, x, w = 0.0, None, None
            else:
                val, w = (1.0 / m if m > ZERO_TOL else math.inf), np.ones(1)
            if math.isfinite(upper) and val >= upper * (1 - 1e-12):
                return math.inf, None, None
            return val, x, w
        cfg = self.cfg
        top = 2.0 ** cfg.max_exponent
        if math.isfinite(upper):
            r0 = (1.0 / upper) * (1 + 1e-9)
            ok, x, w = self._ok(y_list, r0)
            if ok:
                return math.inf, None, None
            lo = r0
        else:
            ok, x, w = self._ok(y_list, 0.0)
            if ok:
                return math.inf, x, w
            lo = 0.0
        hi = max(1.0, 2.0 * lo)
        while True:
            ok, x, w = self._ok(y_list, hi)
            if ok:
                break
            lo, hi = hi, 2.0 * hi
            if hi > top:
                return 0.0, None, None
        if lo == 0.0:
            # bracket from below geometrically so tiny r keeps relative accuracy
            lo = hi / 2.0
            while lo > 1.0 / top:
                ok2, x2, w2 = self._ok(y_list, lo)
                if not ok2:
                    break
                hi, x, w = lo, x2, w2
                lo /= 2.0
            else:
                return math.inf, x, w
        n = 0
        while hi - lo > cfg.rel_tol * hi and n < cfg.max_iter:
            mid = 0.5 * (lo + hi)
            ok, x2, w2 = self._ok(y_list, mid)
            n += 1
            if ok:
                hi, x, w = mid, x2, w2
            else:
                lo = mid
        return 1.0 / hi, x, w


def _null(A):
    import scipy.linalg

    return scipy.linalg.null_space(A)


def _order(kind: NormKind):
    return {NormKind.L1: 1, NormKind.L2: 2, NormKind.LINF: "inf"}[kind]


def phi_primal(
    F: ConicProcess,
    blocks: Sequence[StructureBlock],
    y_list,
    config: Optional[SolverConfig] = None,
) -> PhiEvaluation:
    """``Phi`` at ``(y_i)`` evaluated on the primal side, with the maximizing ``(x, w)``."""
    cfg = config or SolverConfig()
    y_list = _ylist(y_list)
    val, x, w = PrimalPhi(F, blocks, cfg.bisection).evaluate(y_list)
    return PhiEvaluation(y_list, val, x=x, w=w, route="primal",
                         residual=primal_residual(F, y_list, x, w) if x is not None else 0.0)


def primal_residual(F, y_list, x, w) -> float:
    lhs = sum((wi * y for wi, y in zip(w, y_list)), np.zeros(F.y_dim))
    return max(float(np.abs(lhs - F.A @ x).max(initial=0.0)), cones.violation(F.K, x))


# minimization over unit-ball directions -----------------------------------


@dataclass
class Quantity4Result:
    value: float
    v: list
    evaluation: Optional[PhiEvaluation]
    evaluations: int = 0
    extras: dict = field(default_factory=dict)


def _unit_samples(rng, kind: NormKind, dim: int, count: int) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    n = np.array([norm(kind, r) for r in g])
    n[n == 0] = 1.0
    return g / n[:, None]


def quantity4(
    F: ConicProcess,
    blocks: Sequence[StructureBlock],
    config: Optional[SolverConfig] = None,
    seed_v: Optional[Sequence[np.ndarray]] = None,
) -> Quantity4Result:
    """``inf_{v_i in B_{V_i}} Phi((P_i v_i))`` by the primal route.

    Exact mode enumerates vertex choices of the ``V_i`` balls, starting from
    ``seed_v`` so later cells are pruned by one LP each.  Sampled mode uses
    ``seed_v`` plus random unit vectors and polishes Euclidean ``v_i`` on
    their spheres.  The dual witness of the minimizer is attached when the
    dual route can produce it.
    """
    cfg = config or SolverConfig()
    check_blocks(F, blocks)
    mode = resolve_mode(blocks, cfg.mode)
    ev = PrimalPhi(F, blocks, cfg.bisection)
    best, best_v, best_xw = math.inf, None, (None, None)
    count = 0

    def consider(v):
        nonlocal best, best_v, best_xw, count
        y = [b.P @ vi for b, vi in zip(blocks, v)]
        count += 1
        val, x, w = ev.evaluate(y, best)
        if val < best:
            best, best_v, best_xw = val, [np.array(vi) for vi in v], (x, w)
        return val

    if seed_v is not None:
        consider([np.asarray(vi, dtype=float) for vi in seed_v])
    if mode == EXACT:
        seen = set()
        for combo in itertools.product(*[ball_extreme_points(b.norm_V, b.v_dim) for b in blocks]):
            key = tuple(np.round(np.concatenate([b.P @ v for b, v in zip(blocks, combo)]), 14))
            if key in seen:
                continue
            seen.add(key)
            consider(list(combo))
    else:
        rng = np.random.default_rng(cfg.seed)
        samples = [_unit_samples(rng, b.norm_V, b.v_dim, cfg.q4_samples) for b in blocks]
        for j in range(cfg.q4_samples):
            consider([s[j] for s in samples])
        if cfg.polish and best_v is not None and math.isfinite(best):
            best, best_v, best_xw = _polish_v(ev, blocks, best_v, best, cfg)
    if best_v is None:
        return Quantity4Result(best, [np.zeros(b.v_dim) for b in blocks], None, count)
    y = [b.P @ vi for b, vi in zip(blocks, best_v)]
    x, w = best_xw
    evaluation = PhiEvaluation(y, best, x=x, w=w, route="primal",
                               residual=primal_residual(F, y, x, w) if x is not None else 0.0)
    if mode == EXACT and math.isfinite(best):
        dual = phi(F, blocks, y, SolverConfig(mode=EXACT, bisection=cfg.bisection))
        evaluation.y_star, evaluation.u_star = dual.y_star, dual.u_star
        evaluation.extras["dual_value"] = dual.value
        evaluation.extras["dual_residual"] = dual.residual
    return Quantity4Result(best, best_v, evaluation, count)


def _polish_v(ev: PrimalPhi, blocks, v, value, cfg: SolverConfig):
    """Angle polish of the Euclidean ``v_i`` (others held fixed)."""
    idx = [i for i, b in enumerate(blocks) if b.norm_V is NormKind.L2 and b.v_dim >= 2]
    if not idx:
        x, w = ev.evaluate([b.P @ vi for b, vi in zip(blocks, v)])[1:]
        return value, v, (x, w)
    sizes = [blocks[i].v_dim - 1 for i in idx]
    theta0 = np.concatenate([sphere_angles(v[i]) for i in idx])

    def unpack(theta):
        out = [np.array(vi) for vi in v]
        o = 0
        for i, s in zip(idx, sizes):
            out[i] = sphere_point(theta[o:o + s])
            o += s
        return out

    def f(theta):
        vv = unpack(theta)
        return ev.evaluate([b.P @ vi for b, vi in zip(blocks, vv)])[0]

    theta, value = polish_angles(f, theta0, value, 0.1, cfg.polish_sweeps)
    v = unpack(theta)
    _, x, w = ev.evaluate([b.P @ vi for b, vi in zip(blocks, v)])
    return value, v, (x, w)


# theorem of the alternative ------------------------------------------------


@dataclass
class AlternativeResult:
    """Which system is solvable, its witness, and the verification residual."""

    which: str
    witness: dict
    residual: float
    margin: float


SYSTEM_I = "SystemI"
SYSTEM_II = "SystemII"


def _system_one(F, blocks, y_list, tol):
    """Max margin ``delta`` with ``||Q_i x|| + delta <= w_i``, ``sum w = 1``."""
    k, n = len(blocks), F.x_dim
    nv = n + k + 1
    Ke, Ku = cones.cone_rows(F.K)
    Y = np.column_stack(y_list)
    sum_row = np.zeros((1, nv))
    sum_row[0, n:n + k] = 1.0
    A_eq = np.vstack([
        np.hstack([-F.A, Y, np.zeros((F.y_dim, 1))]),
        np.hstack([Ke, np.zeros((Ke.shape[0], k + 1))]),
        sum_row,
    ])
    b_eq = np.zeros(A_eq.shape[0])
    b_eq[-1] = 1.0
    rows = [np.hstack([Ku, np.zeros((Ku.shape[0], k + 1))])]
    for i, b in enumerate(blocks):
        E = dual_ball_extreme_points(b.norm_U, b.u_dim) @ b.Q
        r = np.zeros((E.shape[0], nv))
        r[:, :n] = E
        r[:, n + i] = -1.0
        r[:, -1] = 1.0
        rows.append(r)
    A_ub = np.vstack(rows)
    c = np.zeros(nv)
    c[-1] = -1.0
    out = lp_core.solve(lp_core.LinearProgram(c, A_eq, b_eq, A_ub, np.zeros(A_ub.shape[0]),
                                              [(None, None)] * n + [(0.0, None)] * k + [(None, 1.0)]), tol=tol)
    if not out.optimal:
        return -math.inf, None, None
    return -out.value, out.x[:n], out.x[n:n + k]


def alternative_check(
    F: ConicProcess,
    blocks: Sequence[StructureBlock],
    y_list,
    tol: float = 1e-9,
) -> AlternativeResult:
    """Decide which of the two alternative systems is solvable.

    System I: ``sum_i w_i y_i in F(x)`` with ``||Q_i x|| < w_i``.
    System II: ``y* != 0`` and ``u_i*`` with ``||u_i*|| <= 1``,
    ``<y*, y_i> >= 0`` and ``sum_i <y*, y_i> Q_i^T u_i* in F*(-y*)``.
    Exactly one holds when ``F`` is surjective; finding both or neither
    raises :class:`DichotomyError`.  Polyhedral ``U_i`` norms only.
    """
    y_list = _ylist(y_list)
    if not all(b.norm_U.polyhedral for b in blocks):
        raise ValueError("exact mode requires polyhedral norms")
    delta, x, w = _system_one(F, blocks, y_list, lp_core.FEAS_TOL)
    one = delta > MARGIN_TOL
    cells = adjoint_cells(F, blocks)
    D = np.vstack([-y for y in y_list])
    two, z = cells.feasible(D, 1.0, BisectionConfig().lp_tol)
    res_two = None
    if two:
        a, s = cells.split(z)
        y_star, u = _dual_witness(y_list, a, s)
        y_star, u = _normalize_witness(y_star, u)
        res_two = max(phi_dual_residual(F, blocks, y_list, y_star, u),
                      max((norm(b.norm_U.dual, ui) - 1.0 for b, ui in zip(blocks, u)), default=0.0))
    res_one = None
    if one:
        margins = [wi - norm(b.norm_U, b.Q @ x) for b, wi in zip(blocks, w)]
        res_one = primal_residual(F, y_list, x, w)
    if one and two:
        raise DichotomyError("both systems solvable", {"margin": delta, "system_II_residual": res_two})
    if not one and not two:
        raise DichotomyError("neither system solvable", {"margin": delta})
    if one:
        return AlternativeResult(SYSTEM_I, {"x": x, "w": w}, res_one, float(min(margins)))
    return AlternativeResult(SYSTEM_II, {"y_star": y_star, "u_star": u}, res_two, 0.0)


def _normalize_witness(y_star, u):
    # scaling y* keeps u_i* (a ratio) unchanged
    c = np.abs(y_star).max()
    return (y_star / c if c > 0 else y_star), u
