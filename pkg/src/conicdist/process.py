"""Conic processes ``F(x) = {Ax}`` on a cone ``K``, their adjoints and perturbations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import cones, lp_core
from .cones import PolyhedralCone
from .numerics import NormKind, ball_extreme_points, norm

ENUM_DIM_CAP = 12


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class GraphRows:
    """Linear description of ``b in G(a)``: ``Ea a + Eb b = 0``, ``Ia a + Ib b <= 0``."""

    Ea: np.ndarray
    Eb: np.ndarray
    Ia: np.ndarray
    Ib: np.ndarray

    @property
    def a_dim(self) -> int:
        return self.Ea.shape[1]

    @property
    def b_dim(self) -> int:
        return self.Eb.shape[1]


@dataclass
class ConicProcess:
    """``F(x) = {A x}`` for ``x`` in ``K``, empty otherwise."""

    A: np.ndarray
    K: PolyhedralCone
    x_norm: NormKind = NormKind.L2
    y_norm: NormKind = NormKind.L2

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if self.K.dim != self.A.shape[1]:
            raise DimensionError(f"cone dimension {self.K.dim} does not match A with {self.A.shape[1]} columns")
        self.x_norm = NormKind.parse(self.x_norm)
        self.y_norm = NormKind.parse(self.y_norm)

    @property
    def x_dim(self) -> int:
        return self.A.shape[1]

    @property
    def y_dim(self) -> int:
        return self.A.shape[0]

    def contains(self, x, y, tol: float = cones.MEMBER_TOL) -> bool:
        """Whether ``y`` is in ``F(x)``."""
        x = np.asarray(x, dtype=float)
        return cones.member(self.K, x, tol) and float(np.abs(self.A @ x - np.asarray(y)).max(initial=0.0)) <= tol

    def graph_rows(self) -> GraphRows:
        n, m = self.x_dim, self.y_dim
        Ke, Ku = cones.cone_rows(self.K)
        Ea = np.vstack([-self.A, Ke])
        Eb = np.vstack([np.eye(m), np.zeros((Ke.shape[0], m))])
        return GraphRows(Ea, Eb, Ku, np.zeros((Ku.shape[0], m)))

    def scaled(self, c: float) -> "ConicProcess":
        return ConicProcess(c * self.A, self.K, self.x_norm, self.y_norm)


@dataclass
class AdjointData:
    """``F*(y*) = A^T y* + K*`` with ``K*`` the negative polar of ``K``."""

    A_transpose: np.ndarray
    K_polar: PolyhedralCone

    def contains(self, y_star, x_star, tol: float = cones.MEMBER_TOL) -> bool:
        """Whether ``x_star`` is in ``F*(y_star)``."""
        r = np.asarray(x_star, dtype=float) - self.A_transpose @ np.asarray(y_star, dtype=float)
        return cones.member(self.K_polar, r, tol)

    def graph_rows(self) -> GraphRows:
        # x* - A^T y* in K*
        Ke, Ku = cones.cone_rows(self.K_polar)
        At = self.A_transpose
        return GraphRows(-Ke @ At, Ke, -Ku @ At, Ku)


def adjoint(F: ConicProcess) -> AdjointData:
    return AdjointData(F.A.T.copy(), cones.polar(F.K))


def is_singular(F: ConicProcess, tol: float = cones.MEMBER_TOL) -> tuple[bool, Optional[np.ndarray]]:
    """Whether some ``x != 0`` in ``K`` has ``A x = 0``; returns the witness when so."""
    x = cones.nonzero_element_with(F.K, A_eq=F.A, tol=tol)
    if x is None:
        return False, None
    return True, x / np.abs(x).max()


def images_span(F: ConicProcess, tol: float = cones.MEMBER_TOL) -> bool:
    """Whether the images ``A r`` of the rays of ``K`` positively span ``Y``.

    A finite set positively spans iff it spans linearly and admits a strictly
    positive linear dependence, found by one LP with ``lambda >= 1``.  This is
    the fast surjectivity test; it yields no certificate.
    """
    m = F.y_dim
    if m == 0:
        return True
    R = F.K.rays
    if R.size == 0:
        return False
    G = F.A @ R.T
    if np.linalg.matrix_rank(G, tol=1e-10 * max(1.0, np.abs(G).max())) < m:
        return False
    ok, _ = lp_core.feasible(A_eq=G, b_eq=np.zeros(m), bounds=[(1.0, None)] * G.shape[1], tol=tol)
    return ok


def is_surjective(F: ConicProcess, tol: float = cones.MEMBER_TOL) -> tuple[bool, Optional[np.ndarray]]:
    """Surjectivity of ``F`` through nonsingularity of its adjoint.

    When ``F`` is not surjective the returned ``y*`` (with ``||y*||_inf = 1``)
    satisfies ``-A^T y* in K*``, i.e. ``<y*, A x> >= 0`` on ``K``.
    """
    m = F.y_dim
    if m == 0:
        return True, None
    R = F.K.rays
    A_ub = -(R @ F.A.T) if R.size else None
    y = cones.nonzero_element_with(PolyhedralCone.full(m), A_ub=A_ub, tol=tol)
    if y is None:
        return True, None
    return False, y / np.abs(y).max()


@dataclass
class StructureBlock:
    """One perturbation channel ``P T Q`` with ``T: U -> V``.

    ``P`` maps ``V`` into ``Y`` (``y_dim x v_dim``); ``Q`` maps ``X`` into ``U``
    (``u_dim x x_dim``).
    """

    P: np.ndarray
    Q: np.ndarray
    norm_U: NormKind = NormKind.L2
    norm_V: NormKind = NormKind.L2

    def __post_init__(self):
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.norm_U = NormKind.parse(self.norm_U)
        self.norm_V = NormKind.parse(self.norm_V)

    @property
    def u_dim(self) -> int:
        return self.Q.shape[0]

    @property
    def v_dim(self) -> int:
        return self.P.shape[1]

    @property
    def polyhedral(self) -> bool:
        return self.norm_U.polyhedral and self.norm_V.polyhedral

    def check(self, F: ConicProcess, index: int = 0):
        if self.P.shape[0] != F.y_dim:
            raise DimensionError(f"blocks[{index}].P: expected {F.y_dim} rows, got {self.P.shape[0]}")
        if self.Q.shape[1] != F.x_dim:
            raise DimensionError(f"blocks[{index}].Q: expected {F.x_dim} columns, got {self.Q.shape[1]}")

    def adjoint(self) -> "StructureBlock":
        """The block acting on the adjoint: ``Q^T T^T P^T`` with dual norms."""
        return StructureBlock(self.Q.T, self.P.T, self.norm_V.dual, self.norm_U.dual)


def operator_norm(T, source: NormKind, target: NormKind, cap: int = ENUM_DIM_CAP) -> float:
    """Induced norm ``max ||T u||_target`` over the unit ball of ``source``.

    Polyhedral source: maximum over unit-ball vertices.  L2 source with a
    polyhedral target: the same on the transpose, using vertices of the dual
    target ball.  L2 to L2: largest singular value.
    """
    T = np.atleast_2d(np.asarray(T, dtype=float))
    source, target = NormKind.parse(source), NormKind.parse(target)
    if T.size == 0:
        return 0.0
    if source.polyhedral:
        _cap_check(source, T.shape[1], cap)
        E = ball_extreme_points(source, T.shape[1])
        return max(norm(target, T @ e) for e in E)
    if target.polyhedral:
        _cap_check(target.dual, T.shape[0], cap)
        E = ball_extreme_points(target.dual, T.shape[0])
        return max(norm(NormKind.L2, T.T @ e) for e in E)
    return float(np.linalg.svd(T, compute_uv=False)[0])


def _cap_check(kind: NormKind, dim: int, cap: int):
    if kind is NormKind.LINF and dim > cap:
        raise ValueError(f"operator norm over {2 ** dim} sign vectors exceeds the dimension cap {cap}")


@dataclass
class PerturbationAssignment:
    """Matrices ``T_i: U_i -> V_i``, one per block."""

    T: list
    blocks: Sequence[StructureBlock]
    norms: list = field(init=False)

    def __post_init__(self):
        self.T = [np.atleast_2d(np.asarray(t, dtype=float)) for t in self.T]
        if len(self.T) != len(self.blocks):
            raise DimensionError(f"expected {len(self.blocks)} perturbation matrices, got {len(self.T)}")
        for i, (t, b) in enumerate(zip(self.T, self.blocks)):
            if t.shape != (b.v_dim, b.u_dim):
                raise DimensionError(f"T[{i}]: expected shape {(b.v_dim, b.u_dim)}, got {t.shape}")
        self.norms = [operator_norm(t, b.norm_U, b.norm_V) for t, b in zip(self.T, self.blocks)]

    @property
    def size(self) -> float:
        return max(self.norms, default=0.0)

    @property
    def rank_one(self) -> list:
        return [bool(np.linalg.matrix_rank(t, tol=1e-10) <= 1) for t in self.T]

    def scaled(self, c: float) -> "PerturbationAssignment":
        return PerturbationAssignment([c * t for t in self.T], self.blocks)

    def matrix(self) -> np.ndarray:
        """``sum_i P_i T_i Q_i``."""
        return sum(b.P @ t @ b.Q for t, b in zip(self.T, self.blocks))

    @classmethod
    def zeros(cls, blocks: Sequence[StructureBlock]) -> "PerturbationAssignment":
        return cls([np.zeros((b.v_dim, b.u_dim)) for b in blocks], blocks)


def perturb(F: ConicProcess, blocks: Sequence[StructureBlock], T: PerturbationAssignment) -> ConicProcess:
    """``F + sum_i P_i T_i Q_i``, keeping the domain cone ``K``."""
    for i, b in enumerate(blocks):
        b.check(F, i)
    if len(T.T) != len(blocks):
        raise DimensionError(f"expected {len(blocks)} perturbation matrices, got {len(T.T)}")
    delta = sum((b.P @ t @ b.Q for t, b in zip(T.T, blocks)), np.zeros_like(F.A))
    return ConicProcess(F.A + delta, F.K, F.x_norm, F.y_norm)
