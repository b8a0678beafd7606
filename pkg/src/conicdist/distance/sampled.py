"""Sampled evaluation of the adjoint-side formula when some norm is Euclidean.

For a fixed direction ``y*`` the inner problem
``min_s max_i ||s_i|| / ||P_i^T y*||`` subject to
``sum_i Q_i^T s_i - A^T y* in K*`` is convex.  It is an LP when every ``U_i``
norm is polyhedral, a least-squares or least-distance problem for a single
Euclidean block, and a small second-order cone program otherwise.  The outer
minimization over the sphere uses seeded random directions followed by a
coordinate golden-section polish on the hyperspherical angles.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .. import cones, lp_core
from ..numerics import (
    NormKind,
    ZERO_TOL,
    ball_extreme_points,
    dual_norm,
    sphere_angles,
    sphere_point,
    unit_sphere_samples,
)
from ..process import ConicProcess, StructureBlock, adjoint
from .certificates import DualCertificate
from .config import SolverConfig

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_RANGE_TOL = 1e-10


class AdjointInner:
    """Inner problem of the adjoint-side formula for fixed ``y*``."""

    def __init__(self, F: ConicProcess, blocks: Sequence[StructureBlock]):
        self.F = F
        self.blocks = list(blocks)
        self.At = F.A.T
        self.Ke, self.Ku = cones.cone_rows(adjoint(F).K_polar)
        self.fast = (
            len(self.blocks) == 1
            and self.blocks[0].norm_U is NormKind.L2
            and F.K.is_full
        )
        if self.fast:
            Qt = self.blocks[0].Q.T
            self._pinv = np.linalg.pinv(Qt)
            self._Qt = Qt
        self.polyhedral = all(b.norm_U.polyhedral for b in self.blocks)
        self._E = [ball_extreme_points(b.norm_U, b.u_dim) if b.norm_U.polyhedral else None for b in self.blocks]
        self.expensive = not (self.fast or self.polyhedral or self._ldp_ok())
        self._ldp = {}

    def _ldp_ok(self) -> bool:
        return len(self.blocks) == 1 and self.blocks[0].norm_U is NormKind.L2

    def denominators(self, y) -> np.ndarray:
        return np.array([dual_norm(b.norm_V, b.P.T @ y) for b in self.blocks])

    def values(self, Y: np.ndarray) -> np.ndarray:
        """Inner values for the rows of ``Y`` (vectorized on the least-squares path)."""
        if not self.fast:
            return np.array([self.solve(y)[0] for y in Y])
        b = self.blocks[0]
        rhs = Y @ self.F.A  # rows are (A^T y)^T
        S = rhs @ self._pinv.T
        res = np.abs(S @ self._Qt.T - rhs).max(axis=1) if rhs.size else np.zeros(len(Y))
        d = np.linalg.norm(Y @ b.P, axis=1) if b.norm_V is NormKind.L2 else \
            np.array([dual_norm(b.norm_V, b.P.T @ y) for y in Y])
        num = np.linalg.norm(S, axis=1)
        out = np.full(len(Y), math.inf)
        ok = res <= _RANGE_TOL * np.maximum(1.0, np.abs(rhs).max(axis=1))
        pos = ok & (d > ZERO_TOL)
        out[pos] = num[pos] / d[pos]
        out[ok & (d <= ZERO_TOL) & (num <= ZERO_TOL)] = 0.0
        return out

    def solve(self, y) -> tuple[float, Optional[list]]:
        """``(value, [s_i])`` for one direction ``y``."""
        y = np.asarray(y, dtype=float)
        d = self.denominators(y)
        active = d > ZERO_TOL
        if self.fast:
            b = self.blocks[0]
            rhs = self.At @ y
            s = self._pinv @ rhs
            if np.abs(self._Qt @ s - rhs).max(initial=0.0) > _RANGE_TOL * max(1.0, np.abs(rhs).max(initial=0.0)):
                return math.inf, None
            num = float(np.linalg.norm(s))
            if not active[0]:
                return (0.0, [s]) if num <= ZERO_TOL else (math.inf, None)
            return num / d[0], [s]
        if all(self._E[i] is not None for i in range(len(self.blocks)) if active[i]):
            return self._solve_lp(y, d, active)
        idx = np.flatnonzero(active)
        if idx.size == 1 and self.blocks[idx[0]].norm_U is NormKind.L2:
            return self._solve_ldp(y, d, int(idx[0]))
        return self._solve_conic(y, d, active)

    def _ldp_data(self, i):
        if i not in self._ldp:
            M = self.blocks[i].Q.T
            Me = self.Ke @ M
            pinv = np.linalg.pinv(Me) if Me.size else np.zeros((M.shape[1], 0))
            N = scipy.linalg.null_space(Me) if Me.size else np.eye(M.shape[1])
            self._ldp[i] = (M, Me, pinv, N)
        return self._ldp[i]

    def _solve_ldp(self, y, d, i):
        """One Euclidean block: least-distance problem solved by nonnegative least squares.

        ``s = s0 + N z`` parametrizes the equality rows with ``s0`` orthogonal
        to ``range(N)``, leaving ``min ||z||`` subject to ``G z <= h``.
        """
        M, Me, pinv, N = self._ldp_data(i)
        rhs = self.At @ y
        be = self.Ke @ rhs
        s0 = pinv @ be
        if Me.size and np.abs(Me @ s0 - be).max() > _RANGE_TOL * max(1.0, np.abs(be).max()):
            return math.inf, None
        G = self.Ku @ M @ N
        h = self.Ku @ rhs - self.Ku @ (M @ s0)
        z = np.zeros(N.shape[1])
        if G.size and (h < 0).any():
            # min ||z|| s.t. -G z >= -h, via the Lawson-Hanson reduction
            E = np.vstack([-G.T, -h[None, :]])
            f = np.zeros(E.shape[0])
            f[-1] = 1.0
            u, _ = scipy.optimize.nnls(E, f)
            r = E @ u - f
            if abs(r[-1]) <= 1e-12:
                return math.inf, None
            z = -r[:-1] / r[-1]
        s = [np.zeros(b.u_dim) for b in self.blocks]
        s[i] = s0 + N @ z
        return float(np.linalg.norm(s[i])) / d[i], s

    def _solve_lp(self, y, d, active):
        dims = [b.u_dim for b in self.blocks]
        ns = sum(dims)
        nv = ns + 1
        offs = np.cumsum([0] + dims)
        Qt = np.hstack([b.Q.T for b in self.blocks]) if ns else np.zeros((self.F.x_dim, 0))
        rhs = self.At @ y
        A_eq = np.hstack([self.Ke @ Qt, np.zeros((self.Ke.shape[0], 1))])
        b_eq = self.Ke @ rhs
        rows, b_ub = [np.hstack([self.Ku @ Qt, np.zeros((self.Ku.shape[0], 1))])], [self.Ku @ rhs]
        bounds = [(None, None)] * ns + [(0.0, None)]
        for i, b in enumerate(self.blocks):
            if not active[i]:
                for j in range(offs[i], offs[i + 1]):
                    bounds[j] = (0.0, 0.0)
                continue
            # ||s_i|| / d_i <= t, divided through so small d_i is not amplified
            E = self._E[i]
            r = np.zeros((E.shape[0], nv))
            r[:, offs[i]:offs[i + 1]] = E / d[i]
            r[:, -1] = -1.0
            rows.append(r)
            b_ub.append(np.zeros(E.shape[0]))
        c = np.zeros(nv)
        c[-1] = 1.0
        out = lp_core.solve(lp_core.LinearProgram(c, A_eq, b_eq, np.vstack(rows), np.concatenate(b_ub), bounds))
        if not out.optimal:
            return math.inf, None
        s = [out.x[offs[i]:offs[i + 1]] for i in range(len(self.blocks))]
        return max(out.value, 0.0), s

    def _solve_conic(self, y, d, active):
        import cvxpy as cp

        s = [cp.Variable(b.u_dim) for b in self.blocks]
        t = cp.Variable(nonneg=True)
        xs = sum(b.Q.T @ si for b, si in zip(self.blocks, s)) - self.At @ y
        cons = []
        if self.Ke.size:
            cons.append(self.Ke @ xs == 0)
        if self.Ku.size:
            cons.append(self.Ku @ xs <= 0)
        for i, (b, si) in enumerate(zip(self.blocks, s)):
            if not active[i]:
                cons.append(si == 0)
            else:
                cons.append(cp.norm(si, _cvx_order(b.norm_U.dual)) <= t * d[i])
        prob = cp.Problem(cp.Minimize(t), cons)
        try:
            prob.solve(solver=cp.CLARABEL)
        except cp.error.SolverError:
            return math.inf, None
        if prob.status not in ("optimal", "optimal_inaccurate"):
            return math.inf, None
        return float(t.value), [np.asarray(si.value, dtype=float) for si in s]


def _cvx_order(kind: NormKind):
    return {NormKind.L1: 1, NormKind.L2: 2, NormKind.LINF: "inf"}[kind]


def golden_section(f: Callable[[float], float], lo: float, hi: float, iters: int = 40) -> tuple[float, float]:
    """Minimize a unimodal ``f`` on ``[lo, hi]``; returns ``(argmin, value)``."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def polish_angles(f: Callable[[np.ndarray], float], theta: np.ndarray, value: float,
                  width: float, sweeps: int, min_width: float = 1e-10) -> tuple[np.ndarray, float]:
    """Coordinate-wise golden-section descent on an angle vector.

    Each sweep searches every coordinate on ``[theta_j - width, theta_j + width]``
    and then line-searches along the displacement of the whole sweep, which
    carries the iterate along narrow valleys.  ``width`` is halved after a
    sweep whose coordinate steps all stayed below ``width / 2``.
    """
    theta = np.array(theta, dtype=float)
    for _ in range(sweeps):
        if width < min_width:
            break
        start = theta.copy()
        for j in range(theta.size):
            base = theta.copy()

            def g(a, j=j, base=base):
                base[j] = a
                return f(base)

            a, v = golden_section(g, theta[j] - width, theta[j] + width)
            if v < value:
                theta[j], value = a, v
        step = theta - start
        if np.any(step):
            s, v = golden_section(lambda s: f(start + s * step), 1.0, 8.0)
            if v < value:
                theta, value = start + s * step, v
        if np.abs(step).max(initial=0.0) < 0.5 * width:
            width *= 0.5
    return theta, value


def sphere_search(f: Callable[[np.ndarray], float], batch: Optional[Callable[[np.ndarray], np.ndarray]],
                  dim: int, count: int, rng: np.random.Generator, polish: bool, sweeps: int,
                  seeds: Sequence[np.ndarray] = ()) -> tuple[np.ndarray, float]:
    """Best-of-``count`` random unit vectors (plus ``seeds``), then angle polish."""
    if dim == 1:
        cands = np.array([[1.0], [-1.0]])
    else:
        cands = unit_sphere_samples(rng, dim, count)
        if len(seeds):
            cands = np.vstack([np.array([s / np.linalg.norm(s) for s in seeds]), cands])
    vals = batch(cands) if batch is not None else np.array([f(c) for c in cands])
    i = int(np.argmin(vals))
    y, best = cands[i], float(vals[i])
    if dim == 1 or not polish or not math.isfinite(best):
        return y, best
    width = 2.0 * math.pi / max(4.0, count ** (1.0 / max(dim - 1, 1)))
    theta, best = polish_angles(lambda th: f(sphere_point(th)), sphere_angles(y), best, width, sweeps)
    return sphere_point(theta), best


def distance_dual_sampled(F: ConicProcess, blocks: Sequence[StructureBlock],
                          cfg: SolverConfig) -> tuple[float, Optional[DualCertificate]]:
    """Sampled upper bound on the adjoint-side formula with its certificate."""
    inner = AdjointInner(F, blocks)
    rng = np.random.default_rng(cfg.seed)
    count = min(cfg.budget, cfg.slow_budget) if inner.expensive else cfg.budget
    y, value = sphere_search(
        lambda y: inner.solve(y)[0],
        inner.values if inner.fast else None,
        F.y_dim, count, rng, cfg.polish, cfg.polish_sweeps,
    )
    if not math.isfinite(value):
        return math.inf, None
    _, s = inner.solve(y)
    cert = DualCertificate.from_solution(F, blocks, y, s)
    return cert.value, cert
