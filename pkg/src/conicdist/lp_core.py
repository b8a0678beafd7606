"""Dense two-phase tableau simplex with Bland's rule.

Built for desk-scale problems (a few dozen variables) that arise as cells of
the distance solvers.  Deterministic: a fixed pivot rule and no randomness, so
identical inputs give identical witnesses.

Highly degenerate programs can force pivots on tiny elements and leave the
basis numerically singular.  The simplex detects this (ill-conditioned basis,
or a returned point that violates the constraints) and, unless
``fallback=False``, re-solves with the HiGHS solver shipped with SciPy.  If
HiGHS fails as well the simplex point is returned with its residual; when
there is no simplex point either, the interior-point solver Clarabel (through
cvxpy) gets the last word.  ``STATS`` counts the fallbacks.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

FEAS_TOL = 1e-9
_PIV_TOL = 1e-9
_REFACTOR_EVERY = 16
_HARRIS_TOL = 1e-12
_GOOD_PIVOT = 1e-4
_DEGENERATE_STREAK = 50
_RC_TOL = 1e-11
_RAY_RC = 1e-9
_CLEAN_TOL = 1e-13
_REPAIR_PIVOT = 1e-6
_HIGHS_SECONDS = 0.5
_ROUNDS = 5
_MAX_COND = 1e14
_CHECK_TOL = 1e-8

STATS = {"solved": 0, "fallback": 0}


class _Breakdown(ArithmeticError):
    """The tableau lost too much accuracy to trust its verdict."""


class LpConfigError(ValueError):
    """Inconsistent dimensions or bounds in a :class:`LinearProgram`."""


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


Bound = tuple[Optional[float], Optional[float]]


@dataclass
class LinearProgram:
    """``minimize c @ x`` s.t. ``A_eq x = b_eq``, ``A_ub x <= b_ub``, bounds.

    ``bounds`` defaults to ``x >= 0`` for every variable; a ``None`` entry in a
    bound pair means that side is unbounded.
    """

    c: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    bounds: Optional[Sequence[Bound]] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "eq")
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, n, "ub")
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        elif len(self.bounds) != n:
            raise LpConfigError(f"bounds: expected {n} pairs, got {len(self.bounds)}")
        for j, (lo, hi) in enumerate(self.bounds):
            if lo is not None and hi is not None and lo > hi:
                raise LpConfigError(f"bounds[{j}]: lower {lo} exceeds upper {hi}")
        for name in ("c", "A_eq", "b_eq", "A_ub", "b_ub"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise LpConfigError(f"{name}: non-finite coefficient")

    @property
    def n(self) -> int:
        return self.c.size

    def violation(self, x) -> float:
        """Largest constraint violation of ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        v = 0.0
        if len(self.b_eq):
            v = max(v, float(np.abs(self.A_eq @ x - self.b_eq).max()))
        if len(self.b_ub):
            v = max(v, float((self.A_ub @ x - self.b_ub).max()))
        for j, (lo, hi) in enumerate(self.bounds):
            if lo is not None:
                v = max(v, lo - x[j])
            if hi is not None:
                v = max(v, x[j] - hi)
        return v


def _rows(A, b, n, name):
    if A is None or (np.size(A) == 0 and (b is None or np.size(b) == 0)):
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[1] != n:
        raise LpConfigError(f"A_{name}: expected {n} columns, got {A.shape[1]}")
    if A.shape[0] != b.size:
        raise LpConfigError(f"b_{name}: expected {A.shape[0]} entries, got {b.size}")
    return A, b


@dataclass
class LpOutcome:
    status: Status
    x: Optional[np.ndarray] = None
    value: float = float("nan")
    residual: float = float("nan")
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class _Standard:
    """``min cs @ p`` s.t. ``As p = bs``, ``p >= 0`` with ``x = offset + M p``."""

    As: np.ndarray
    bs: np.ndarray
    cs: np.ndarray
    M: np.ndarray
    offset: np.ndarray
    slack_rows: list = field(default_factory=list)  # (row, column) of +1 slacks


def _standardize(lp: LinearProgram) -> _Standard:
    n = lp.n
    cols = []  # (orig index, sign) per standard column
    offset = np.zeros(n)
    extra_ub = []  # (column, width) for doubly bounded variables
    for j, (lo, hi) in enumerate(lp.bounds):
        if lo is not None:
            offset[j] = lo
            cols.append((j, 1.0))
            if hi is not None:
                extra_ub.append((len(cols) - 1, hi - lo))
        elif hi is not None:
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nv = len(cols)
    M = np.zeros((n, nv))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s

    Aeq = lp.A_eq @ M
    beq = lp.b_eq - lp.A_eq @ offset
    Aub = lp.A_ub @ M
    bub = lp.b_ub - lp.A_ub @ offset
    if extra_ub:
        rows = np.zeros((len(extra_ub), nv))
        for r, (k, w) in enumerate(extra_ub):
            rows[r, k] = 1.0
        Aub = np.vstack([Aub, rows])
        bub = np.concatenate([bub, [w for _, w in extra_ub]])

    m_eq, m_ub = Aeq.shape[0], Aub.shape[0]
    As = np.zeros((m_eq + m_ub, nv + m_ub))
    As[:m_eq, :nv] = Aeq
    As[m_eq:, :nv] = Aub
    As[m_eq:, nv:] = np.eye(m_ub)
    bs = np.concatenate([beq, bub])
    cs = np.concatenate([lp.c @ M, np.zeros(m_ub)])
    M_full = np.hstack([M, np.zeros((n, m_ub))])

    # row equilibration keeps the phase-one threshold meaningful
    scale = np.abs(As).max(axis=1) if As.size else np.zeros(0)
    scale[scale == 0] = 1.0
    As = As / scale[:, None]
    bs = bs / scale
    neg = bs < 0
    As[neg] *= -1
    bs[neg] *= -1
    slack_rows = [(m_eq + r, nv + r) for r in range(m_ub) if not neg[m_eq + r]]
    return _Standard(As, bs, cs, M_full, offset, slack_rows)


def _pivot(T, basis, r, e):
    T[r] /= T[r, e]
    col = T[:, e].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    basis[r] = e


def _refactor(T, A0, b0, basis, cost):
    """Rebuild tableau ``T`` from the original rows for the current basis.

    Pivoting accumulates rounding error; recomputing ``B^{-1} [A | b]`` and
    the reduced costs from scratch every few iterations keeps it bounded.
    """
    m = len(basis)
    B = A0[:, basis]
    try:
        Binv = np.linalg.inv(B)
    except np.linalg.LinAlgError as exc:
        raise _Breakdown("singular basis") from exc
    # 1-norm condition number from the explicit inverse
    if np.abs(B).sum(axis=0).max() * np.abs(Binv).sum(axis=0).max() > _MAX_COND:
        raise _Breakdown("ill-conditioned basis")
    T[:m, :-1] = Binv @ A0
    T[:m, -1] = Binv @ b0
    cb = cost[basis]
    T[-1, :-1] = cost - cb @ T[:m, :-1]
    T[-1, -1] = -cb @ T[:m, -1]


def _leaving_row(T, basis, e, m, strict):
    """Leaving row for entering column ``e`` (``None`` if the column is unbounded)."""
    colv = T[:m, e]
    pos = colv > _PIV_TOL * max(1.0, float(np.abs(colv).max()))
    if not pos.any():
        return None
    rhs = np.maximum(T[:m, -1], 0.0)
    idx = np.flatnonzero(pos)
    if not strict:
        bound = ((rhs[idx] + _HARRIS_TOL) / colv[idx]).min()
        ok = idx[rhs[idx] / colv[idx] <= bound]
        return int(ok[np.argmax(colv[ok])])
    ratios = rhs[idx] / colv[idx]
    best = ratios.min()
    ties = idx[ratios <= best + 1e-12 * max(1.0, best)]
    return int(min(ties, key=lambda i: basis[i]))


def _bland(T, basis, allowed, max_iter, A0=None, b0=None, cost=None):
    """Simplex iterations on tableau ``T`` (objective in the last row).

    Entering column: lowest index with negative reduced cost (Bland), except
    that a column whose pivot would be tiny relative to the column is passed
    over while a better-conditioned candidate exists.  Leaving row: a two-pass
    ratio test that relaxes the ratios by ``_HARRIS_TOL`` and takes the
    largest pivot among rows within the relaxed bound.  After
    ``_DEGENERATE_STREAK`` pivots without progress both choices revert to
    Bland's lowest-index rule so cycling is impossible.
    """
    m = T.shape[0] - 1
    it = 0
    stall = 0
    refreshed = False
    since = 0  # pivots since the tableau was last rebuilt
    nonbasic = allowed.copy()
    nonbasic[basis] = False
    while it < max_iter:
        if A0 is not None and since >= _REFACTOR_EVERY:
            _refactor(T, A0, b0, basis, cost)
            since = 0
        rc = T[-1, :-1]
        cand = np.flatnonzero((rc < -_RC_TOL) & nonbasic)
        if cand.size == 0:
            return "optimal", it
        strict = stall >= _DEGENERATE_STREAK
        choice = None
        ray = False
        for e in cand:
            r = _leaving_row(T, basis, int(e), m, strict)
            if r is None:
                # a ray whose cost decrease is at rounding level is noise
                if rc[e] > -_RAY_RC:
                    continue
                ray = True
                break
            if choice is None:
                choice = (int(e), r)
            if strict or abs(T[r, e]) >= _GOOD_PIVOT * np.abs(T[:m, e]).max():
                choice = (int(e), r)
                break
        if ray:
            # confirm on a freshly factored tableau before reporting it
            if A0 is not None and not refreshed:
                _refactor(T, A0, b0, basis, cost)
                refreshed, since = True, 0
                continue
            return "unbounded", it
        if choice is None:
            return "optimal", it
        e, r = choice
        refreshed = False
        stall = stall + 1 if T[r, -1] <= _HARRIS_TOL else 0
        nonbasic[basis[r]] = allowed[basis[r]]
        nonbasic[e] = False
        _pivot(T, basis, r, e)
        it += 1
        since += 1
    raise _Breakdown("simplex iteration limit reached")


def _cleanup(T, basis, allowed, A0, b0, cost, max_iter: int = 100) -> int:
    """Repair small negative basic values left by ignored tiny pivots.

    At the end of a phase the reduced costs are nonnegative, so dual simplex
    pivots (most negative row leaves, dual ratio test picks the entering
    column) restore primal feasibility without losing optimality.  Returns the
    number of pivots.  Rows with no admissible entering column are left as
    they are; the caller's residual check judges the outcome.
    """
    m = len(basis)
    it = 0
    while it < max_iter:
        _refactor(T, A0, b0, basis, cost)
        if not m:
            return it
        rhs = T[:m, -1]
        scale = max(1.0, float(np.abs(rhs).max()))
        nonbasic = allowed.copy()
        nonbasic[basis] = False
        move = None
        for r in np.argsort(rhs):
            if rhs[r] >= -_CLEAN_TOL * scale:
                break
            row = T[r, :-1]
            cand = np.flatnonzero(nonbasic & (row < -_REPAIR_PIVOT * max(1.0, float(np.abs(row).max()))))
            if cand.size == 0:
                # nothing can raise this row without a tiny pivot; the final
                # residual check decides
                continue
            rc = np.maximum(T[-1, cand], 0.0)
            ratios = rc / -row[cand]
            best = ratios.min()
            ties = cand[ratios <= best + 1e-12 * max(1.0, best)]
            move = (int(r), int(ties[np.argmax(-row[ties])]))
            break
        if move is None:
            return it
        _pivot(T, basis, *move)
        it += 1
    raise _Breakdown("cleanup iteration limit reached")


def solve(lp: LinearProgram, tol: float = FEAS_TOL, max_iter: int = 5000,
          fallback: bool = True) -> LpOutcome:
    """Solve ``lp`` by two-phase simplex with Bland's anti-cycling rule.

    With ``fallback=False`` a numerical breakdown raises ``ArithmeticError``
    instead of handing the program to HiGHS.
    """
    STATS["solved"] += 1
    out = None
    try:
        out = _simplex(lp, tol, max_iter)
    except _Breakdown:
        if not fallback:
            raise
    if out is not None:
        scale = max(1.0, float(np.abs(lp.b_eq).max(initial=0.0)), float(np.abs(lp.b_ub).max(initial=0.0)))
        if not out.optimal or out.residual <= _CHECK_TOL * scale:
            return out
        if not fallback:
            raise _Breakdown(f"solution violates constraints by {out.residual:.3g}")
    STATS["fallback"] += 1
    alt = _highs(lp)
    if out is None or (alt is not None and (not alt.optimal or alt.residual <= out.residual)):
        if alt is not None:
            return alt
    if out is not None:
        # both solvers struggle; keep the point with the smaller residual
        return out
    STATS["conic"] = STATS.get("conic", 0) + 1
    alt = _interior(lp)
    if alt is not None:
        return alt
    raise RuntimeError("linear program could not be solved reliably")


def _highs(lp: LinearProgram) -> Optional[LpOutcome]:
    import scipy.optimize

    loose = {"time_limit": _HIGHS_SECONDS}
    tight = dict(loose, primal_feasibility_tolerance=1e-10, dual_feasibility_tolerance=1e-10)
    for method, options in (("highs-ds", tight), ("highs-ipm", tight), ("highs-ds", loose), ("highs-ipm", loose)):
        r = scipy.optimize.linprog(
            lp.c,
            A_ub=lp.A_ub if len(lp.b_ub) else None,
            b_ub=lp.b_ub if len(lp.b_ub) else None,
            A_eq=lp.A_eq if len(lp.b_eq) else None,
            b_eq=lp.b_eq if len(lp.b_eq) else None,
            bounds=list(lp.bounds),
            method=method,
            options=options,
        )
        if r.status in (0, 2, 3):
            break
    if r.status == 0:
        x = np.asarray(r.x, dtype=float)
        return LpOutcome(Status.OPTIMAL, x, float(lp.c @ x), lp.violation(x), int(r.nit))
    if r.status == 2:
        return LpOutcome(Status.INFEASIBLE)
    if r.status == 3:
        return LpOutcome(Status.UNBOUNDED)
    return None


def _interior(lp: LinearProgram) -> Optional[LpOutcome]:
    """Last resort for degenerate programs both simplex codes give up on."""
    import cvxpy as cp

    x = cp.Variable(lp.n)
    cons = []
    if len(lp.b_eq):
        cons.append(lp.A_eq @ x == lp.b_eq)
    if len(lp.b_ub):
        cons.append(lp.A_ub @ x <= lp.b_ub)
    lo = [j for j, (a, _) in enumerate(lp.bounds) if a is not None]
    hi = [j for j, (_, b) in enumerate(lp.bounds) if b is not None]
    if lo:
        cons.append(x[lo] >= np.array([lp.bounds[j][0] for j in lo]))
    if hi:
        cons.append(x[hi] <= np.array([lp.bounds[j][1] for j in hi]))
    prob = cp.Problem(cp.Minimize(lp.c @ x), cons)
    try:
        prob.solve(solver=cp.CLARABEL)
    except cp.SolverError:
        return None
    if prob.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        xv = np.asarray(x.value, dtype=float)
        return LpOutcome(Status.OPTIMAL, xv, float(lp.c @ xv), lp.violation(xv))
    if prob.status == cp.INFEASIBLE:
        return LpOutcome(Status.INFEASIBLE)
    if prob.status == cp.UNBOUNDED:
        return LpOutcome(Status.UNBOUNDED)
    return None


def _simplex(lp: LinearProgram, tol: float, max_iter: int) -> LpOutcome:
    st = _standardize(lp)
    m, nv = st.As.shape
    if m == 0:
        x0 = st.offset.copy()
        if np.any(st.cs < -_RC_TOL):
            return LpOutcome(Status.UNBOUNDED)
        return LpOutcome(Status.OPTIMAL, x0, float(lp.c @ x0), lp.violation(x0))

    basis = [-1] * m
    for r, k in st.slack_rows:
        basis[r] = k
    art_rows = [r for r in range(m) if basis[r] < 0]
    na = len(art_rows)
    A0 = np.zeros((m, nv + na))
    A0[:, :nv] = st.As
    for a, r in enumerate(art_rows):
        A0[r, nv + a] = 1.0
        basis[r] = nv + a
    T = np.zeros((m + 1, nv + na + 1))
    T[:m, :-1] = A0
    T[:m, -1] = st.bs
    iters = 0
    rows = list(range(m))

    if na:
        cost1 = np.zeros(nv + na)
        cost1[nv:] = 1.0
        _refactor(T, A0, st.bs, basis, cost1)
        all1 = np.ones(nv + na, dtype=bool)
        _, k = _bland(T, basis, all1, max_iter, A0, st.bs, cost1)
        iters += k + _cleanup(T, basis, all1, A0, st.bs, cost1)
        if -T[-1, -1] > tol:
            return LpOutcome(Status.INFEASIBLE, iterations=iters)
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for r in range(m):
            if basis[r] >= nv:
                row = T[r, :nv]
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                if nz.size == 0:
                    continue
                j = int(nz[np.argmax(np.abs(row[nz]))])
                _pivot(T, basis, r, j)
            keep.append(r)
        basis = [basis[r] for r in keep]
        if len(keep) < m:
            # tableau rows mix original rows; keep original rows that make the basis nonsingular
            _, _, piv = scipy.linalg.qr(st.As[:, basis].T, pivoting=True)
            rows = sorted(int(i) for i in piv[:len(keep)])
        m = len(keep)
        T = np.vstack([T[keep][:, list(range(nv)) + [-1]], np.zeros((1, nv + 1))])

    A2, b2 = st.As[rows], st.bs[rows]
    if m:
        _refactor(T, A2, b2, basis, st.cs)
    else:
        T[-1, :nv] = st.cs
    all2 = np.ones(nv, dtype=bool)
    for _ in range(_ROUNDS):
        status, k = _bland(T, basis, all2, max_iter, A2, b2, st.cs)
        iters += k
        if status == "unbounded":
            return LpOutcome(Status.UNBOUNDED, iterations=iters)
        if not m:
            break
        k = _cleanup(T, basis, all2, A2, b2, st.cs)
        iters += k
        if k == 0:
            break
    else:
        raise _Breakdown("primal and repair passes did not settle")

    p = np.zeros(nv)
    if m:
        # basic values from the original data to shed pivot drift
        try:
            xb = np.linalg.solve(A2[:, basis], b2)
        except np.linalg.LinAlgError as exc:
            raise _Breakdown("singular final basis") from exc
        p[basis] = np.maximum(xb, 0.0)
    x = st.offset + st.M @ p
    return LpOutcome(Status.OPTIMAL, x, float(lp.c @ x), lp.violation(x), iters)


def feasible(
    A_eq=None,
    b_eq=None,
    A_ub=None,
    b_ub=None,
    bounds=None,
    n: Optional[int] = None,
    tol: float = FEAS_TOL,
    fallback: bool = True,
) -> tuple[bool, Optional[np.ndarray]]:
    """Phase-one feasibility check; returns ``(is_feasible, witness)``.

    Variables are free unless ``bounds`` says otherwise.
    """
    if n is None:
        for A in (A_eq, A_ub):
            if A is not None and np.size(A):
                n = np.atleast_2d(A).shape[1]
                break
        else:
            n = len(bounds) if bounds is not None else 0
    if bounds is None:
        bounds = [(None, None)] * n
    out = solve(LinearProgram(np.zeros(n), A_eq, b_eq, A_ub, b_ub, bounds), tol=tol, fallback=fallback)
    if out.optimal:
        return True, out.x
    return False, None
