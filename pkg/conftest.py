"""Shared fixtures: seeded generators and default tolerances."""

import numpy as np
import pytest

from linalg_core import Tolerances, max_abs


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def tol():
    return Tolerances()


@pytest.fixture(autouse=True)
def _no_tol_override(monkeypatch):
    monkeypatch.delenv("QFN_TOL", raising=False)


def scaled(bound: float, *arrays) -> float:
    """bound * max(1, largest entry among arrays)."""
    return bound * max([1.0] + [max_abs(np.asarray(a)) for a in arrays])
