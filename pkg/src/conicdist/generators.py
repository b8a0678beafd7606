"""Seeded random instances for tests and experiment scripts.

Draws are rejected when they are close to degenerate: the images of the cone
generators must positively span the target with some room to spare, and the
matrices must be reasonably conditioned.  This keeps the LP tolerances
meaningful; it does not bias the distance values themselves beyond excluding
tiny ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cones import PolyhedralCone
from .numerics import NormKind, smallest_singular_value
from .process import ConicProcess, StructureBlock, images_span

POLYHEDRAL = (NormKind.L1, NormKind.LINF)


@dataclass
class Instance:
    """A conic process with its perturbation structure."""

    F: ConicProcess
    blocks: list
    name: str = ""


def _random_block(rng, m, n, norms: Sequence[NormKind], max_dim: int) -> StructureBlock:
    p = int(rng.integers(1, max_dim + 1))
    q = int(rng.integers(1, max_dim + 1))
    return StructureBlock(
        rng.standard_normal((m, p)),
        rng.standard_normal((q, n)),
        norms[int(rng.integers(len(norms)))],
        norms[int(rng.integers(len(norms)))],
    )


def _spans_robustly(F: ConicProcess, margin: float) -> bool:
    if not images_span(F):
        return False
    G = F.A @ F.K.rays.T
    if smallest_singular_value(G.T @ G if G.shape[0] > G.shape[1] else G) < margin:
        return False
    # still spanning after dropping the weakest generator direction by a nudge
    rng = np.random.default_rng(0)
    for _ in range(3):
        E = rng.standard_normal(F.A.shape)
        E *= margin / np.linalg.norm(E, 2)
        if not images_span(ConicProcess(F.A + E, F.K)):
            return False
    return True


def random_exact_instance(
    rng: np.random.Generator,
    max_dim: int = 3,
    max_blocks: int = 2,
    max_rays: int = 4,
    norms: Sequence[NormKind] = POLYHEDRAL,
    margin: float = 0.05,
    max_tries: int = 1000,
) -> Instance:
    """Surjective conic process with ``K`` generated by at most ``max_rays`` rays.

    Dimensions are at most ``max_dim``; there are ``1..max_blocks`` blocks
    with norms drawn from ``norms``.
    """
    for _ in range(max_tries):
        m = int(rng.integers(1, max_dim + 1))
        n = int(rng.integers(1, max_dim + 1))
        r = int(rng.integers(m + 1, max_rays + 1)) if m + 1 <= max_rays else max_rays
        rays = rng.standard_normal((r, n))
        K = PolyhedralCone.from_rays(rays)
        A = rng.standard_normal((m, n))
        F = ConicProcess(A, K)
        if not _spans_robustly(F, margin):
            continue
        k = int(rng.integers(1, max_blocks + 1))
        blocks = [_random_block(rng, m, n, norms, max_dim) for _ in range(k)]
        return Instance(F, blocks, "random-exact")
    raise RuntimeError("no acceptable instance drawn")


def random_square_instance(
    rng: np.random.Generator,
    dims: Sequence[int] = (2, 3, 4),
    norms: Sequence[NormKind] = POLYHEDRAL,
    max_dim: int = 3,
    min_sigma: float = 0.05,
    unstructured: bool = False,
    norm_kind: Optional[NormKind] = None,
) -> Instance:
    """Full cone with a square, well-conditioned ``A`` and one block.

    ``unstructured`` uses ``P = Q = I`` with ``norm_kind`` on both sides.
    """
    while True:
        m = int(dims[int(rng.integers(len(dims)))])
        A = rng.standard_normal((m, m))
        if smallest_singular_value(A) < min_sigma:
            continue
        F = ConicProcess(A, PolyhedralCone.full(m))
        if unstructured:
            kind = norm_kind or NormKind.L2
            return Instance(F, [StructureBlock(np.eye(m), np.eye(m), kind, kind)], "random-square")
        return Instance(F, [_random_block(rng, m, m, norms, max_dim)], "random-square")


def random_y_list(rng: np.random.Generator, inst: Instance) -> list:
    return [rng.standard_normal(inst.F.y_dim) for _ in inst.blocks]
