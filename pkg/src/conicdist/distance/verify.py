"""Cross-check of the four characterizations of the distance to nonsurjectivity.

The quantities are numbered as in the report:

1. ``q1``: smallest general (not necessarily rank-one) structured perturbation
   found by random search, an upper bound only;
2. ``q2``: smallest rank-one structured perturbation;
3. ``q3``: the adjoint-side formula;
4. ``q4``: the infimum of ``Phi`` over the unit balls of the ``V_i``.

In exact mode ``q2``, ``q3`` and ``q4`` must agree within ``tol`` and ``q1``
may not undercut them.  Sampled mode reports gaps without asserting them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..process import ConicProcess, PerturbationAssignment, StructureBlock, is_surjective, perturb
from .certificates import DualCertificate, RankOneCertificate
from .config import EXACT, SolverConfig, check_blocks, resolve_mode
from .dual import distance_dual
from .phi import SYSTEM_I, SYSTEM_II, DichotomyError, Quantity4Result, alternative_check, quantity4
from .rank_one import general_search, distance_rank_one_search

QUANTITIES = ("q1", "q2", "q3", "q4")
SCALE_BACK = 1e-3
DICHOTOMY_SHIFT = 1e-3

NOTES = (
    "adjoint-side denominators are ||P_i^T y*|| for the common functional y*",
    "adjoint witnesses use the convention -A^T y* in K* (y* and -y* give the same ratios)",
    "reported perturbations Delta_i act as F + sum_i P_i Delta_i Q_i",
    "q1 is an upper bound from random general directions, not an exact value",
)


@dataclass
class DichotomyCheck:
    """Alternative check on ``y_i = rho * q * P_i v_i`` for the minimizing ``v_i``."""

    rho: float
    expected: str
    found: Optional[str]
    residual: float
    margin: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.found == self.expected and not self.error


@dataclass
class DistanceReport:
    """The four quantity estimates with their certificates and the checks run on them."""

    mode: str
    seed: int
    tol: float
    values: dict
    dual: Optional[DualCertificate] = None
    rank_one: Optional[RankOneCertificate] = None
    general: Optional[PerturbationAssignment] = None
    phi_min: Optional[Quantity4Result] = None
    surjective: bool = True
    witness: Optional[np.ndarray] = None
    scaled_back_surjective: Optional[bool] = None
    dichotomy: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    notes: tuple = NOTES

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def gaps(self) -> dict:
        q = self.values
        return {
            "q2-q3": _gap(q["q2"], q["q3"]),
            "q4-q3": _gap(q["q4"], q["q3"]),
            "q1-q3": _gap(q["q1"], q["q3"]),
        }

    def gap_table(self) -> str:
        lines = [f"{'quantity':<10}{'value':>24}{'minus q3':>24}"]
        for name in QUANTITIES:
            lines.append(f"{name:<10}{self.values[name]:>24.17g}{_gap(self.values[name], self.values['q3']):>24.6g}")
        lines += [f"FAIL {f}" for f in self.failures]
        return "\n".join(lines)


def _gap(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b) and (a > 0) == (b > 0):
        return 0.0
    return a - b


def verify_equalities(
    F: ConicProcess,
    blocks: Sequence[StructureBlock],
    config: Optional[SolverConfig] = None,
) -> DistanceReport:
    """Compute all four quantities and check them against each other.

    A nonsurjective ``F`` gives zero for every quantity.  Failures are
    collected in ``report.failures`` rather than raised.
    """
    cfg = config or SolverConfig()
    check_blocks(F, blocks)
    mode = resolve_mode(blocks, cfg.mode)
    exact = mode == EXACT
    timings = {}

    t0 = time.perf_counter()
    surj, y = is_surjective(F)
    timings["check"] = time.perf_counter() - t0
    if not surj:
        q3, dual = distance_dual(F, blocks, cfg)
        q2, rank = distance_rank_one_search(F, blocks, cfg)
        return DistanceReport(mode, cfg.seed, cfg.tol, dict.fromkeys(QUANTITIES, 0.0), dual, rank,
                              PerturbationAssignment.zeros(blocks), None, False, y, timings=timings)

    t0 = time.perf_counter()
    q3, dual = distance_dual(F, blocks, cfg)
    timings["q3"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    q2, rank = distance_rank_one_search(F, blocks, cfg, dual_certificate=dual)
    timings["q2"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    q4 = quantity4(F, blocks, cfg, seed_v=rank.v if rank is not None else None)
    timings["q4"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    q1, general = general_search(F, blocks, cfg, seeds=[rank.perturbation] if rank is not None else [])
    timings["q1"] = time.perf_counter() - t0

    report = DistanceReport(mode, cfg.seed, cfg.tol, {"q1": q1, "q2": q2, "q3": q3, "q4": q4.value},
                            dual, rank, general, q4, timings=timings)
    fails = report.failures
    if exact:
        if not q3 <= q2 + cfg.tol:
            fails.append(f"q3 = {q3:.17g} exceeds q2 = {q2:.17g}")
        if not abs(_gap(q2, q3)) <= cfg.tol:
            fails.append(f"|q2 - q3| = {abs(_gap(q2, q3)):.3g} > {cfg.tol:g}")
        if not q3 <= q1 + cfg.tol:
            fails.append(f"q1 = {q1:.17g} undercuts q3 = {q3:.17g}")
        if not abs(_gap(q4.value, q3)) <= cfg.tol:
            fails.append(f"|q4 - q3| = {abs(_gap(q4.value, q3)):.3g} > {cfg.tol:g}")
    if rank is not None and math.isfinite(q2):
        if exact and not rank.verified:
            fails.append("rank-one perturbation leaves F surjective")
        if q2 > 0:
            report.scaled_back_surjective = is_surjective(
                perturb(F, blocks, rank.perturbation.scaled(1.0 - SCALE_BACK)))[0]
            if exact and not report.scaled_back_surjective:
                fails.append(f"rank-one perturbation scaled by {1 - SCALE_BACK:g} already breaks F")
    if all(b.norm_U.polyhedral for b in blocks):
        t0 = time.perf_counter()
        report.dichotomy = dichotomy_checks(F, blocks, q4)
        timings["dichotomy"] = time.perf_counter() - t0
        fails += [f"alternative check at rho = {c.rho:g}: expected {c.expected}, found {c.found} {c.error}".rstrip()
                  for c in report.dichotomy if not c.ok]
    return report


def dichotomy_checks(F: ConicProcess, blocks: Sequence[StructureBlock], q4: Quantity4Result) -> list:
    """Alternative checks on ``y_i = rho * q * P_i v_i`` around the minimizer of ``Phi``.

    ``Phi`` is homogeneous of degree -1 and equals ``q`` at ``(P_i v_i)``, so
    ``rho < 1`` puts ``Phi`` above 1 (first system solvable) and ``rho > 1``
    below 1 (second system solvable).
    """
    if not (math.isfinite(q4.value) and q4.value > 0):
        return []
    out = []
    for rho, expected in ((1.0 - DICHOTOMY_SHIFT, SYSTEM_I), (1.0 + DICHOTOMY_SHIFT, SYSTEM_II)):
        y_list = [rho * q4.value * (b.P @ v) for b, v in zip(blocks, q4.v)]
        try:
            res = alternative_check(F, blocks, y_list)
            out.append(DichotomyCheck(rho, expected, res.which, res.residual, res.margin))
        except DichotomyError as exc:
            out.append(DichotomyCheck(rho, expected, None, math.nan, math.nan, str(exc)))
    return out
