"""Polyhedral convex cones in generator and inequality form.

A cone is stored as generators (rays, nonnegative combinations) and, once
computed, as constraints ``E x = 0``, ``H x >= 0``.  Conversion between the
two forms is a brute-force double description over active sets, which is
fine for the small dimensions this package targets.
"""

from __future__ import annotations

import itertools
from typing import Optional

import numpy as np
import scipy.linalg

from . import lp_core

MEMBER_TOL = 1e-9
_RANK_TOL = 1e-10


def _normalize_rows(R: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Scale rows to unit 2-norm, drop zero rows and duplicates (order kept)."""
    R = np.atleast_2d(np.asarray(R, dtype=float))
    out = []
    for r in R:
        n = np.linalg.norm(r)
        if n <= tol:
            continue
        r = r / n
        if not any(np.allclose(r, q, atol=1e-12) for q in out):
            out.append(r)
    if not out:
        return np.zeros((0, R.shape[1]))
    return np.array(out)


def _null_space(M: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal null-space basis of ``M`` (columns), ``n`` ambient columns."""
    if M.size == 0:
        return np.eye(n)
    return scipy.linalg.null_space(M, rcond=_RANK_TOL)


def _constraint_generators(E: np.ndarray, H: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Lineality basis and extreme rays of ``{x : E x = 0, H x >= 0}``."""
    both = np.vstack([E, H]) if H.size else E
    lin = _null_space(both, n).T  # rows
    # pointed part lives in null(E) intersected with lin-perp
    B = _null_space(np.vstack([E, lin]) if lin.size else E, n)
    d = B.shape[1]
    if d == 0:
        return lin, np.zeros((0, n))
    Hz = H @ B if H.size else np.zeros((0, d))
    rays = []
    for S in itertools.combinations(range(Hz.shape[0]), d - 1):
        sub = Hz[list(S)] if S else np.zeros((0, d))
        rank = np.linalg.matrix_rank(sub, tol=_RANK_TOL) if sub.size else 0
        if rank != d - 1:
            continue
        z = _null_space(sub, d)
        if z.shape[1] != 1:
            continue
        z = z[:, 0]
        for s in (1.0, -1.0):
            cand = s * z
            if Hz.shape[0] == 0 or np.all(Hz @ cand >= -1e-10):
                rays.append(B @ cand)
    return lin, _normalize_rows(np.array(rays)) if rays else np.zeros((0, n))


class PolyhedralCone:
    """Convex polyhedral cone in ``R^dim``.

    Build with :meth:`from_rays`, :meth:`from_halfspaces` or one of the named
    constructors (:meth:`full`, :meth:`zero`, :meth:`nonneg`, :meth:`nonpos`).
    Instances are treated as immutable.
    """

    def __init__(self, dim: int, rays=None, eq=None, ineq=None, tag: str = "general"):
        self.dim = int(dim)
        self.tag = tag
        self._rays = None if rays is None else _normalize_rows(np.reshape(rays, (-1, self.dim)))
        if eq is None and ineq is None:
            self._eq = self._ineq = None
        else:
            self._eq = _normalize_rows(np.reshape(eq if eq is not None else [], (-1, self.dim)))
            self._ineq = _normalize_rows(np.reshape(ineq if ineq is not None else [], (-1, self.dim)))

    # constructors

    @classmethod
    def from_rays(cls, rays, dim: Optional[int] = None) -> "PolyhedralCone":
        rays = np.asarray(rays, dtype=float)
        if dim is None:
            dim = rays.shape[-1]
        return cls(dim, rays=np.reshape(rays, (-1, dim)))

    @classmethod
    def from_halfspaces(cls, ineq, eq=None, dim: Optional[int] = None) -> "PolyhedralCone":
        ineq = np.asarray(ineq, dtype=float)
        if dim is None:
            dim = ineq.shape[-1]
        return cls(dim, eq=eq, ineq=np.reshape(ineq, (-1, dim)))

    @classmethod
    def full(cls, dim: int) -> "PolyhedralCone":
        eye = np.eye(dim)
        rays = np.vstack([row for j in range(dim) for row in (eye[j], -eye[j])]) if dim else None
        return cls(dim, rays=rays if dim else np.zeros((0, 0)), eq=np.zeros((0, dim)),
                   ineq=np.zeros((0, dim)), tag="full")

    @classmethod
    def zero(cls, dim: int) -> "PolyhedralCone":
        return cls(dim, rays=np.zeros((0, dim)), eq=np.eye(dim), ineq=np.zeros((0, dim)), tag="zero")

    @classmethod
    def nonneg(cls, dim: int) -> "PolyhedralCone":
        return cls(dim, rays=np.eye(dim), eq=np.zeros((0, dim)), ineq=np.eye(dim), tag="nonneg")

    @classmethod
    def nonpos(cls, dim: int) -> "PolyhedralCone":
        return cls(dim, rays=-np.eye(dim), eq=np.zeros((0, dim)), ineq=-np.eye(dim), tag="nonpos")

    # representations

    @property
    def rays(self) -> np.ndarray:
        """Generators: the cone is their nonnegative hull."""
        if self._rays is None:
            lin, ext = _constraint_generators(self._eq, self._ineq, self.dim)
            self._rays = _normalize_rows(np.vstack([lin, -lin, ext])) if (lin.size or ext.size) \
                else np.zeros((0, self.dim))
        return self._rays

    def _ensure_halfspaces(self):
        if self._ineq is None:
            # the cone is the polar of its own polar, whose generators are -rays' facets
            polar_lin, polar_ext = _constraint_generators(np.zeros((0, self.dim)), -self._rays, self.dim) \
                if self._rays.size else (np.eye(self.dim), np.zeros((0, self.dim)))
            self._eq = _normalize_rows(polar_lin) if polar_lin.size else np.zeros((0, self.dim))
            self._ineq = _normalize_rows(-polar_ext) if polar_ext.size else np.zeros((0, self.dim))

    @property
    def eq(self) -> np.ndarray:
        """Rows ``e`` with ``<e, x> = 0`` on the cone."""
        self._ensure_halfspaces()
        return self._eq

    @property
    def ineq(self) -> np.ndarray:
        """Rows ``h`` with ``<h, x> >= 0`` on the cone."""
        self._ensure_halfspaces()
        return self._ineq

    @property
    def is_full(self) -> bool:
        return self.tag == "full" or (self.eq.size == 0 and self.ineq.size == 0)

    @property
    def is_zero(self) -> bool:
        return self.tag == "zero" or self.rays.size == 0

    def __repr__(self):
        if self.tag != "general":
            return f"PolyhedralCone.{self.tag}({self.dim})"
        return f"PolyhedralCone(dim={self.dim}, rays={self.rays.tolist()})"

    def to_dict(self) -> dict:
        if self.tag in ("full", "nonneg", "zero", "nonpos"):
            return {"type": self.tag}
        return {"type": "rays", "rays": self.rays.tolist()}


def polar(K: PolyhedralCone) -> PolyhedralCone:
    """Negative polar ``{y : <y, x> <= 0 for all x in K}`` in both forms."""
    n = K.dim
    tag = {"full": "zero", "zero": "full", "nonneg": "nonpos", "nonpos": "nonneg"}.get(K.tag, "general")
    if tag == "zero":
        return PolyhedralCone.zero(n)
    if tag == "full":
        return PolyhedralCone.full(n)
    rays = np.vstack([-K.ineq, K.eq, -K.eq]) if (K.ineq.size or K.eq.size) else np.zeros((0, n))
    return PolyhedralCone(n, rays=rays, eq=np.zeros((0, n)), ineq=-K.rays, tag=tag)


def member(K: PolyhedralCone, x, tol: float = MEMBER_TOL, method: str = "halfspace") -> bool:
    """Whether ``x`` lies in ``K`` up to ``tol``.

    ``method="halfspace"`` checks constraint signs; ``method="generator"``
    solves the nonnegative-combination LP over the rays.
    """
    x = np.asarray(x, dtype=float)
    if method == "halfspace":
        if K.eq.size and np.abs(K.eq @ x).max() > tol:
            return False
        if K.ineq.size and (K.ineq @ x).min() < -tol:
            return False
        return True
    R = K.rays
    if R.size == 0:
        return bool(np.abs(x).max(initial=0.0) <= tol)
    ok, _ = lp_core.feasible(A_eq=R.T, b_eq=x, bounds=[(0.0, None)] * R.shape[0], tol=tol)
    return ok


def violation(K: PolyhedralCone, x) -> float:
    """How far ``x`` is from satisfying the constraints of ``K`` (0 inside)."""
    x = np.asarray(x, dtype=float)
    v = 0.0
    if K.eq.size:
        v = max(v, float(np.abs(K.eq @ x).max()))
    if K.ineq.size:
        v = max(v, float(-(K.ineq @ x).min()))
    return v


def cone_rows(K: PolyhedralCone) -> tuple[np.ndarray, np.ndarray]:
    """``(A_eq, A_ub)`` such that ``x in K`` iff ``A_eq x = 0`` and ``A_ub x <= 0``."""
    return K.eq, -K.ineq


def nonzero_element_with(
    K: PolyhedralCone,
    A_eq: Optional[np.ndarray] = None,
    A_ub: Optional[np.ndarray] = None,
    tol: float = lp_core.FEAS_TOL,
) -> Optional[np.ndarray]:
    """A nonzero ``x`` in ``K`` with ``A_eq x = 0`` and ``A_ub x <= 0``, or ``None``.

    The feasible set is a cone, so it holds a nonzero point iff one of the
    ``2 * dim`` normalizations ``x_j = +-1`` is feasible; they are tried in
    order ``(0,+), (0,-), (1,+), ...`` and the first hit is returned.
    """
    n = K.dim
    Ae, Au = cone_rows(K)
    if A_eq is not None and np.size(A_eq):
        Ae = np.vstack([Ae, np.reshape(A_eq, (-1, n))])
    if A_ub is not None and np.size(A_ub):
        Au = np.vstack([Au, np.reshape(A_ub, (-1, n))])
    for j in range(n):
        for s in (1.0, -1.0):
            bounds = [(None, None)] * n
            bounds[j] = (s, s)
            ok, x = lp_core.feasible(
                A_eq=Ae if Ae.size else None,
                b_eq=np.zeros(Ae.shape[0]) if Ae.size else None,
                A_ub=Au if Au.size else None,
                b_ub=np.zeros(Au.shape[0]) if Au.size else None,
                bounds=bounds,
                n=n,
                tol=tol,
            )
            if ok:
                return x
    return None
