"""
Seeded random models for the property suites.

Every sampler takes a numpy Generator so runs are reproducible. Rejection
sampling keeps pivots of interest away from zero (min_pivot, relative).
"""

import logging
from typing import Sequence

import numpy as np

from block_algebra import LabeledBlockMatrix, sub_block
from errors import InvariantViolation
from linalg_core import Tolerances, relative_pivot
from models import ZERO, SLHModel, StratGenerator
from network_calculus import ChannelSplit, script_e_ii

logger = logging.getLogger(__name__)

DEFAULT_MIN_PIVOT = 1e-6
MAX_TRIES = 200


def random_operator(rng: np.random.Generator, rows: int, cols: int = None, scale: float = 1.0) -> np.ndarray:
    cols = rows if cols is None else cols
    return scale * (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_hermitian(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    X = random_operator(rng, n, scale=scale)
    return 0.5 * (X + X.conj().T)


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar unitary: QR of a Ginibre matrix with the phases of diag(R) divided out."""
    Q, R = np.linalg.qr(random_operator(rng, n))
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases


def random_density_matrix(rng: np.random.Generator, d: int) -> np.ndarray:
    A = random_operator(rng, d)
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def channel_labels(prefix: str, n: int) -> tuple:
    return tuple(f"{prefix}{k + 1}" for k in range(n))


def random_split(rng: np.random.Generator, n_external: int, n_internal: int) -> tuple:
    """(channels, split) with the internal labels scattered among the external ones."""
    external = channel_labels("e", n_external)
    internal = channel_labels("i", n_internal)
    channels = tuple(rng.permutation(external + internal).tolist())
    return channels, ChannelSplit.from_internal(channels, [c for c in channels if c in internal])


def random_slh(rng: np.random.Generator, channels: Sequence[str], dim: int, scale: float = 1.0,
               representable: bool = False, min_pivot: float = DEFAULT_MIN_PIVOT) -> SLHModel:
    """Random valid SLH model; with representable=True, I + S is kept invertible."""
    channels = tuple(channels)
    n = len(channels) * dim
    for _ in range(MAX_TRIES):
        S = random_unitary(rng, n)
        if representable and relative_pivot(np.eye(n) + S) < min_pivot:
            continue
        L = random_operator(rng, n, dim, scale=scale)
        H = random_hermitian(rng, dim, scale=scale)
        return SLHModel.from_arrays(channels, S, L, H)
    raise InvariantViolation(f"No representable SLH sample after {MAX_TRIES} draws")


def random_strat(rng: np.random.Generator, channels: Sequence[str], dim: int, scale: float = 1.0,
                 split: ChannelSplit = None, min_pivot: float = DEFAULT_MIN_PIVOT,
                 tol: Tolerances = None) -> StratGenerator:
    """
    Random Hermitian-structured E.

    With a split, E_ii and script E_ii are kept invertible so the
    Stratonovich and SLH feedback rules are both defined.
    """
    tol = tol or Tolerances()
    labels = (ZERO,) + tuple(channels)
    n = len(labels) * dim
    for attempt in range(MAX_TRIES):
        gen = StratGenerator(LabeledBlockMatrix(labels, labels, dim, random_hermitian(rng, n, scale=scale)))
        if split is None:
            return gen
        if relative_pivot(sub_block(gen.E, split.internal, split.internal).data) < min_pivot:
            continue
        if relative_pivot(script_e_ii(gen, split, tol).data) < min_pivot:
            continue
        if attempt:
            logger.debug(f"random_strat accepted after {attempt + 1} draws")
        return gen
    raise InvariantViolation(f"No well-conditioned Stratonovich sample after {MAX_TRIES} draws")
