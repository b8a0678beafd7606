"""Certificates produced by the distance solvers and the rank-one construction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import cones
from ..numerics import NormKind, dual_norm, norm, norming_functional, ratio, ZERO_TOL
from ..process import (
    ConicProcess,
    PerturbationAssignment,
    StructureBlock,
    adjoint,
    is_surjective,
    perturb,
)


def build_rank_one(x, v, block: StructureBlock, tol: float = ZERO_TOL) -> np.ndarray:
    """Rank-one ``T`` with ``T u = <u*, u> / ||Q x|| * v`` where ``u*`` norms ``Q x``.

    ``T (Q x) = v`` and ``||T|| = ||v|| / ||Q x||``.  Combined with
    ``P v in F(x)`` this gives ``0 in (F - P T Q)(x)``.
    """
    qx = block.Q @ np.asarray(x, dtype=float)
    nqx = norm(block.norm_U, qx)
    if nqx <= tol:
        raise ValueError("Qx = 0: the block cannot act on x")
    u_star = norming_functional(block.norm_U, qx, tol)
    return np.outer(np.asarray(v, dtype=float), u_star) / nqx


def dual_residual(F: ConicProcess, blocks, y_star, u_star, z) -> float:
    """Violation of ``sum_i z_i Q_i^T u_i* in A^T y* + K*``."""
    r = -F.A.T @ y_star
    for b, u, zi in zip(blocks, u_star, z):
        r = r + zi * (b.Q.T @ u)
    return cones.violation(adjoint(F).K_polar, r)


@dataclass
class DualCertificate:
    """Feasible point of the adjoint-side formula.

    ``sum_i z_i Q_i^T u_i* in A^T y* + K*`` with ``||u_i*|| <= 1``; its value
    is ``max_i z_i / ||P_i^T y*||`` under the ``z/0`` convention.
    """

    y_star: np.ndarray
    u_star: list
    z: list
    value: float
    residual: float = 0.0

    @classmethod
    def from_solution(cls, F: ConicProcess, blocks, y, s_list) -> "DualCertificate":
        y = np.asarray(y, dtype=float)
        c = 1.0 / np.abs(y).max()
        y = c * y
        s_list = [c * np.asarray(s, dtype=float) for s in s_list]
        z, u = [], []
        for b, s in zip(blocks, s_list):
            zi = dual_norm(b.norm_U, s)
            z.append(zi)
            u.append(s / zi if zi > ZERO_TOL else np.zeros_like(s))
        value = max((ratio(zi, dual_norm(b.norm_V, b.P.T @ y)) for zi, b in zip(z, blocks)), default=math.inf)
        return cls(y, u, z, value, dual_residual(F, blocks, y, u, z))

    def perturbation(self, blocks: Sequence[StructureBlock]) -> PerturbationAssignment:
        """Rank-one ``Delta_i`` with ``F + sum P_i Delta_i Q_i`` nonsurjective.

        Built on the adjoint side: ``y*`` plays the point, ``z_i u_i*`` the
        image vectors, and the adjoint blocks ``(Q_i^T, P_i^T)`` the structure.
        """
        T = []
        for b, u, zi in zip(blocks, self.u_star, self.z):
            adj = b.adjoint()
            if zi <= ZERO_TOL or norm(adj.norm_U, adj.Q @ self.y_star) <= ZERO_TOL:
                T.append(np.zeros((b.v_dim, b.u_dim)))
                continue
            T.append(-build_rank_one(self.y_star, zi * u, adj).T)
        return PerturbationAssignment(T, blocks)

    def to_dict(self) -> dict:
        return {
            "y_star": self.y_star.tolist(),
            "u_star": [u.tolist() for u in self.u_star],
            "z": list(map(float, self.z)),
            "value": self.value,
            "residual": self.residual,
        }


@dataclass
class RankOneCertificate:
    """Explicit rank-one perturbation ``Delta_i = v_i a_i^T`` making ``F`` nonsurjective.

    ``y_star`` witnesses nonsurjectivity of the perturbed process:
    ``-(A + sum P_i Delta_i Q_i)^T y* in K*``.
    """

    y_star: np.ndarray
    v: list
    a: list
    perturbation: PerturbationAssignment
    value: float
    verified: Optional[bool] = None
    residual: float = 0.0

    @classmethod
    def build(cls, F: ConicProcess, blocks, y_star, v, a) -> "RankOneCertificate":
        y_star = np.asarray(y_star, dtype=float)
        scale = np.abs(y_star).max()
        y_star = y_star / scale if scale > 0 else y_star
        v = [np.asarray(x, dtype=float) for x in v]
        a = [np.asarray(x, dtype=float) for x in a]
        T = PerturbationAssignment([np.outer(vi, ai) for vi, ai in zip(v, a)], blocks)
        G = perturb(F, blocks, T)
        res = cones.violation(adjoint(G).K_polar, -G.A.T @ y_star)
        return cls(y_star, v, a, T, T.size, residual=res)

    def verify(self, F: ConicProcess, blocks, tol: float = cones.MEMBER_TOL) -> bool:
        surj, _ = is_surjective(perturb(F, blocks, self.perturbation), tol)
        self.verified = not surj
        return self.verified

    def to_dict(self) -> dict:
        return {
            "y_star": self.y_star.tolist(),
            "v": [x.tolist() for x in self.v],
            "a": [x.tolist() for x in self.a],
            "T": [t.tolist() for t in self.perturbation.T],
            "block_norms": list(map(float, self.perturbation.norms)),
            "value": self.value,
            "verified": self.verified,
            "residual": self.residual,
        }


@dataclass
class PrimalRankOneCertificate:
    """Singularity certificate: ``sum_i z_i P_i v_i in F(x)`` with ``x != 0``.

    ``perturbation`` holds ``Delta_i = -T_i`` from :func:`build_rank_one`, so
    ``x`` lies in the kernel of ``F + sum P_i Delta_i Q_i``.
    """

    x: np.ndarray
    v: list
    z: list
    perturbation: Optional[PerturbationAssignment]
    value: float
    residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "x": self.x.tolist(),
            "v": [x.tolist() for x in self.v],
            "z": list(map(float, self.z)),
            "T": None if self.perturbation is None else [t.tolist() for t in self.perturbation.T],
            "value": self.value,
            "residual": self.residual,
        }


@dataclass
class PhiEvaluation:
    """Value of the inf-sup function at ``(y_i)`` with its dual witness.

    The witness satisfies ``sum_i <y*, y_i> Q_i^T u_i* in F*(-y*)``,
    ``<y*, y_i> >= 0`` and ``||u_i*|| <= value``.
    """

    y_list: list
    value: float
    y_star: Optional[np.ndarray] = None
    u_star: Optional[list] = None
    x: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    route: str = "dual"
    residual: float = 0.0
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"y_list": [np.asarray(y).tolist() for y in self.y_list], "value": self.value, "route": self.route}
        if self.y_star is not None:
            out["y_star"] = self.y_star.tolist()
            out["u_star"] = [u.tolist() for u in self.u_star]
        if self.x is not None:
            out["x"] = self.x.tolist()
            out["w"] = np.asarray(self.w).tolist()
        out["residual"] = self.residual
        return out


def phi_dual_residual(F: ConicProcess, blocks, y_list, y_star, u_star) -> float:
    """Violation of the dual witness constraints at ``(y_i)``."""
    d = [float(y_star @ y) for y in y_list]
    r = F.A.T @ y_star  # x* in F*(-y*) means x* + A^T y* in K*
    for b, di, u in zip(blocks, d, u_star):
        r = r + di * (b.Q.T @ u)
    v = cones.violation(adjoint(F).K_polar, r)
    return max([v] + [-di for di in d])
