"""Ratio-minimization cells shared by the exact-mode solvers.

Every exact computation in :mod:`conicdist.distance` and :mod:`conicdist.phi`
reduces to the following question about a process ``G`` given by graph rows:
for fixed denominator rows ``D_i``, how small can ``max_i ||w_i|| / <D_i, a>``
be subject to ``sum_i L_i w_i in G(a)``?  Fixing ``t`` turns the constraint
``||w_i|| <= t <D_i, a>`` into linear rows (the norm is polyhedral, written as
a maximum over dual-ball vertices), and ``a != 0`` is enforced by
``sum_i <D_i, a> = 1``.  That normalization is exact whenever ``G`` is
nonsingular, which callers check beforehand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .. import lp_core
from ..process import GraphRows


@dataclass
class BisectionConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_iter: int = 100
    lp_tol: float = 1e-11
    max_exponent: int = 60


@dataclass
class CellSolution:
    value: float
    a: Optional[np.ndarray] = None
    w: Optional[list] = None
    iterations: int = 0


class CellProblem:
    """Feasibility LPs for ``sum_i L_i w_i in G(a)`` with ratio rows.

    ``norm_rows[i]`` lists the vertices ``e`` of the dual unit ball of the
    norm measuring ``w_i``, so ``||w_i|| = max_e <e, w_i>``.
    """

    def __init__(self, graph: GraphRows, L: Sequence[np.ndarray], norm_rows: Sequence[np.ndarray]):
        self.graph = graph
        self.L = [np.atleast_2d(np.asarray(l, dtype=float)) for l in L]
        self.norm_rows = [np.atleast_2d(np.asarray(e, dtype=float)) for e in norm_rows]
        self.na = graph.a_dim
        self.dims = [l.shape[1] for l in self.L]
        self.nvar = self.na + sum(self.dims)
        self._offsets = np.cumsum([self.na] + self.dims)[:-1]
        g = graph
        self._eq = np.hstack([g.Ea] + [g.Eb @ l for l in self.L])
        self._ub = np.hstack([g.Ia] + [g.Ib @ l for l in self.L])
        # norm rows without the t * D part
        blocks = []
        for i, E in enumerate(self.norm_rows):
            rows = np.zeros((E.shape[0], self.nvar))
            o = self._offsets[i]
            rows[:, o:o + self.dims[i]] = E
            blocks.append(rows)
        self._norm = blocks

    @property
    def k(self) -> int:
        return len(self.L)

    def split(self, z: np.ndarray) -> tuple[np.ndarray, list]:
        a = z[: self.na]
        w = [z[o:o + d] for o, d in zip(self._offsets, self.dims)]
        return a, w

    def _base(self, D: np.ndarray, pin=None):
        """Equality rows plus the normalization ``sum_i <D_i, a> = 1``.

        ``pin = (j, s)`` replaces it with the coordinate normalization ``a_j = s``.
        """
        D = np.atleast_2d(D)
        norm_row = np.zeros(self.nvar)
        rhs = 1.0
        if pin is None:
            norm_row[: self.na] = D.sum(axis=0)
        else:
            norm_row[pin[0]] = 1.0
            rhs = pin[1]
        A_eq = np.vstack([self._eq, norm_row])
        b_eq = np.zeros(A_eq.shape[0])
        b_eq[-1] = rhs
        return A_eq, b_eq

    def feasible(self, D: np.ndarray, t: float, tol: float = 1e-11, pin=None):
        D = np.atleast_2d(D)
        A_eq, b_eq = self._base(D, pin)
        rows = [self._ub]
        for i, blk in enumerate(self._norm):
            # divide by the size of t * D_i when large so the coefficients stay
            # bounded; a zero D_i keeps w_i = 0 exact
            s = max(1.0, t * float(np.abs(D[i]).max(initial=0.0)))
            r = blk / s
            r[:, : self.na] -= (t / s) * D[i]
            rows.append(r)
        A_ub = np.vstack(rows)
        out = lp_core.solve(
            lp_core.LinearProgram(np.zeros(self.nvar), A_eq, b_eq, A_ub, np.zeros(A_ub.shape[0]),
                                  [(None, None)] * self.nvar),
            tol=tol,
        )
        return out.optimal, (out.x if out.optimal else None)

    def solve_single(self, D: np.ndarray, tol: float = 1e-11) -> CellSolution:
        """Direct LP when ``k == 1``: the normalization pins the denominator to 1."""
        D = np.atleast_2d(D)
        A_eq, b_eq = self._base(D)
        A_eq = np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))])
        ub = np.hstack([self._ub, np.zeros((self._ub.shape[0], 1))])
        nr = np.hstack([self._norm[0], -np.ones((self._norm[0].shape[0], 1))])
        A_ub = np.vstack([ub, nr])
        c = np.zeros(self.nvar + 1)
        c[-1] = 1.0
        out = lp_core.solve(
            lp_core.LinearProgram(c, A_eq, b_eq, A_ub, np.zeros(A_ub.shape[0]),
                                  [(None, None)] * self.nvar + [(0.0, None)]),
            tol=tol,
        )
        if not out.optimal:
            return CellSolution(math.inf)
        a, w = self.split(out.x[:-1])
        return CellSolution(max(out.value, 0.0), a, w, out.iterations)

    def min_ratio(self, D: np.ndarray, cfg: BisectionConfig, upper: float = math.inf,
                  pin=None) -> CellSolution:
        """Smallest feasible ``t`` for denominators ``D``.

        With a finite ``upper`` the cell is skipped (value ``inf``) unless it
        beats ``upper`` by a relative ``1e-9``.  A coordinate ``pin`` always
        goes through bisection.
        """
        if self.k == 1 and pin is None:
            sol = self.solve_single(D, cfg.lp_tol)
            return sol if sol.value < upper else CellSolution(math.inf)
        n = 0
        if math.isfinite(upper):
            ok, z = self.feasible(D, upper * (1 - 1e-9), cfg.lp_tol, pin)
            if not ok:
                return CellSolution(math.inf)
            lo, hi, best = 0.0, upper * (1 - 1e-9), z
        ok, z = self.feasible(D, 0.0, cfg.lp_tol, pin)
        if ok:
            return CellSolution(0.0, *self.split(z))
        if not math.isfinite(upper):
            lo, hi = 0.0, 1.0
            while True:
                ok, z = self.feasible(D, hi, cfg.lp_tol, pin)
                n += 1
                if ok:
                    best = z
                    break
                lo = hi
                hi *= 2.0
                if hi > 2.0 ** cfg.max_exponent:
                    return CellSolution(math.inf, iterations=n)
        while hi - lo > cfg.abs_tol + cfg.rel_tol * hi and n < cfg.max_iter:
            mid = 0.5 * (lo + hi)
            ok, z = self.feasible(D, mid, cfg.lp_tol, pin)
            n += 1
            if ok:
                hi, best = mid, z
            else:
                lo = mid
        a, w = self.split(best)
        return CellSolution(hi, a, w, n)

    def search(self, D_list, cfg: BisectionConfig, upper: float = math.inf, pins=(None,)):
        """Minimize over denominator choices (and normalizations) with pruning.

        Returns ``(value, index, solution)`` where ``index`` is the position
        in ``D_list``; it is ``None`` when every cell is infeasible.
        """
        best_val, best_idx, best_sol = upper, None, None
        for idx, D in enumerate(D_list):
            for pin in pins:
                sol = self.min_ratio(D, cfg, best_val, pin)
                if sol.value < best_val:
                    best_val, best_idx, best_sol = sol.value, idx, sol
        if best_idx is None:
            return math.inf, None, None
        return best_val, best_idx, best_sol
