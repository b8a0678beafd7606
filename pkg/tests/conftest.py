import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from conicdist.cones import PolyhedralCone
from conicdist.numerics import NormKind
from conicdist.process import ConicProcess, StructureBlock

# fixed example sequence for reproducible runs; "stress" draws fresh seeds
settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile(
    "stress",
    deadline=None,
    max_examples=300,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def eckart_young(kind=NormKind.L2):
    """``diag(3, 1)`` on the full cone with one unstructured block."""
    F = ConicProcess(np.diag([3.0, 1.0]), PolyhedralCone.full(2))
    return F, [StructureBlock(np.eye(2), np.eye(2), kind, kind)]


def masked_entry(kind=NormKind.LINF):
    """``diag(3, 1)`` where only the (1, 1) entry may move."""
    F = ConicProcess(np.diag([3.0, 1.0]), PolyhedralCone.full(2))
    return F, [StructureBlock([[1.0], [0.0]], [[1.0, 0.0]], kind, kind)]


def scalar_process(cone="full"):
    K = PolyhedralCone.full(1) if cone == "full" else PolyhedralCone.nonneg(1)
    return ConicProcess([[1.0]], K)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
