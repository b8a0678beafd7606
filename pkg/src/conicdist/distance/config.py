from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from ..process import ConicProcess, StructureBlock
from .cells import BisectionConfig

EXACT = "exact"
SAMPLED = "sampled"
AUTO = "auto"


class ModeError(ValueError):
    pass


@dataclass
class SolverConfig:
    """Knobs shared by the distance solvers.

    ``tol`` is the gap tolerance used when comparing the four quantities;
    ``verify_tol`` bounds certificate residuals.  ``budget`` counts random
    directions in sampled mode; when the inner problem needs a conic solver
    the count is capped at ``slow_budget``.
    """

    mode: str = AUTO
    tol: float = 1e-6
    budget: int = 10_000
    slow_budget: int = 300
    seed: int = 0
    verify_tol: float = 1e-9
    polish: bool = True
    polish_sweeps: int = 40
    general_directions: int = 4
    q4_samples: int = 16
    bisection: BisectionConfig = field(default_factory=BisectionConfig)


def resolve_mode(blocks: Sequence[StructureBlock], mode: str) -> str:
    polyhedral = all(b.polyhedral for b in blocks)
    if mode == AUTO:
        return EXACT if polyhedral else SAMPLED
    if mode == EXACT and not polyhedral:
        raise ModeError("exact mode requires polyhedral norms")
    if mode not in (EXACT, SAMPLED):
        raise ModeError(f"unknown mode {mode!r}")
    return mode


def check_blocks(F: ConicProcess, blocks: Sequence[StructureBlock]):
    for i, b in enumerate(blocks):
        b.check(F, i)
