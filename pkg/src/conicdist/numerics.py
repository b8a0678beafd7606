"""Norms, dual norms, norming functionals and extended-ratio arithmetic."""

from __future__ import annotations

import enum
import itertools
import math

import numpy as np

ZERO_TOL = 1e-12


class NormKind(str, enum.Enum):
    L1 = "L1"
    L2 = "L2"
    LINF = "LINF"

    @property
    def dual(self) -> "NormKind":
        return _DUAL[self]

    @property
    def polyhedral(self) -> bool:
        return self is not NormKind.L2

    @classmethod
    def parse(cls, tag) -> "NormKind":
        if isinstance(tag, NormKind):
            return tag
        key = str(tag).strip().upper().replace("INFINITY", "INF")
        aliases = {"1": "L1", "2": "L2", "INF": "LINF", "L_INF": "LINF", "LI": "LINF"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown norm tag {tag!r} (expected L1, L2 or LINF)") from None


_DUAL = {NormKind.L1: NormKind.LINF, NormKind.LINF: NormKind.L1, NormKind.L2: NormKind.L2}


class NonPolyhedralNormError(ValueError):
    pass


def norm(kind: NormKind, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return 0.0
    kind = NormKind.parse(kind)
    if kind is NormKind.L1:
        return float(np.abs(x).sum())
    if kind is NormKind.LINF:
        return float(np.abs(x).max())
    return float(np.linalg.norm(x))


def dual_norm(kind: NormKind, x) -> float:
    """Norm of ``x`` viewed as a functional on a space normed by ``kind``."""
    return norm(NormKind.parse(kind).dual, x)


def norming_functional(kind: NormKind, x, tol: float = ZERO_TOL) -> np.ndarray:
    """Unit dual functional ``u`` with ``<u, x> = ||x||``.

    Ties (LINF with several maximal coordinates) go to the lowest index.
    """
    kind = NormKind.parse(kind)
    x = np.asarray(x, dtype=float)
    nx = norm(kind, x)
    if nx <= tol:
        raise ValueError("norming functional undefined at the zero vector")
    if kind is NormKind.L2:
        return x / nx
    if kind is NormKind.L1:
        # any sign choice works on zero coordinates; +1 keeps the dual norm at 1
        return np.where(x < 0, -1.0, 1.0)
    u = np.zeros_like(x)
    j = int(np.argmax(np.abs(x)))
    u[j] = math.copysign(1.0, x[j])
    return u


def ball_extreme_points(kind: NormKind, dim: int) -> np.ndarray:
    """Vertices of the closed unit ball, one per row.

    L1 gives the ``2*dim`` signed unit vectors (positive first, by index);
    LINF gives all ``2**dim`` sign vectors in lexicographic order.
    """
    kind = NormKind.parse(kind)
    if kind is NormKind.L2:
        raise NonPolyhedralNormError("non-polyhedral norm: L2 unit ball has no finite vertex set")
    if dim == 0:
        return np.zeros((1, 0))
    if kind is NormKind.L1:
        eye = np.eye(dim)
        return np.vstack([row for j in range(dim) for row in (eye[j], -eye[j])])
    return np.array(list(itertools.product((1.0, -1.0), repeat=dim)))


def dual_ball_extreme_points(kind: NormKind, dim: int) -> np.ndarray:
    """Vertices of the dual unit ball: ``||x|| = max_e <e, x>`` over these rows."""
    return ball_extreme_points(NormKind.parse(kind).dual, dim)


def ratio(z: float, d: float, tol: float = ZERO_TOL) -> float:
    """``z / d`` for ``z >= 0`` with ``z/0 = inf`` (``z > 0``), ``0/0 = 0`` and ``z/inf = 0``."""
    if math.isinf(d):
        return 0.0 if not math.isinf(z) else math.inf
    if abs(d) <= tol:
        return 0.0 if abs(z) <= tol else math.inf
    return z / d


def reciprocal(a: float) -> float:
    if a == 0:
        return math.inf
    if math.isinf(a):
        return 0.0
    return 1.0 / a


def smallest_singular_value(A) -> float:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        return 0.0
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def unit_sphere_samples(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    n = np.linalg.norm(g, axis=1, keepdims=True)
    n[n == 0] = 1.0
    return g / n


def sphere_point(angles) -> np.ndarray:
    """Hyperspherical coordinates to a unit vector in ``len(angles) + 1`` dims."""
    angles = np.asarray(angles, dtype=float)
    d = angles.size + 1
    out = np.ones(d)
    for j, a in enumerate(angles):
        out[j] *= math.cos(a)
        out[j + 1:] *= math.sin(a)
    return out


def sphere_angles(x) -> np.ndarray:
    """Inverse of :func:`sphere_point` for a nonzero vector (normalized first)."""
    x = np.asarray(x, dtype=float)
    x = x / np.linalg.norm(x)
    d = x.size
    angles = np.zeros(d - 1)
    for j in range(d - 1):
        tail = np.linalg.norm(x[j + 1:])
        angles[j] = math.atan2(tail, x[j])
    if d >= 2 and x[-1] < 0:
        angles[-1] = -angles[-1]
    return angles
