"""
Network rules: concatenation, series product and feedback reduction.

Every rule is available in SLH form and in Stratonovich form, and feedback
additionally through the Belavkin-Holevo V matrix (Mobius form) and as a
Schur complement of G. The forms are independent computations of the same
network, which is what the cross-checks in reduce_network rely on.

Feedback always assumes the adjacency has been absorbed into S, i.e. internal
output j feeds internal input j. Use absorb_adjacency / route_channels first.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from pydantic import BaseModel

from block_algebra import LabeledBlockMatrix, block_diag, block_inverse, label_set, schur_complement, sub_block
from errors import (
    DimMismatch,
    EvenCycle,
    IllPosed,
    InvariantViolation,
    LabelCollision,
    SchurUndefined,
    SeriesNotRepresentable,
    SizeMismatch,
    Singular,
)
from linalg_core import Tolerances, identity, imag_part, is_invertible, op_adjoint, relative_pivot
from models import (
    ZERO,
    BHMatrix,
    SLHModel,
    StratGenerator,
    bh_embed,
    bh_labels,
    bh_unembed,
    ito_from_slh,
    slh_from_strat,
    strat_from_slh,
)

logger = logging.getLogger(__name__)


# ============================================
# TYPES
# ============================================

@dataclass(frozen=True)
class ChannelSplit:
    """k = external ∪ internal, disjoint."""

    external: tuple
    internal: tuple

    def __post_init__(self):
        ext = label_set(self.external)
        intl = label_set(self.internal)
        both = set(ext) & set(intl)
        if both:
            raise LabelCollision(f"Channels {sorted(both)} are both external and internal", block=",".join(sorted(both)))
        object.__setattr__(self, "external", ext)
        object.__setattr__(self, "internal", intl)

    @classmethod
    def from_internal(cls, channels: Sequence[str], internal: Sequence[str]) -> "ChannelSplit":
        """External channels keep the order they have in `channels`."""
        internal = tuple(internal)
        return cls(tuple(c for c in channels if c not in internal), internal)

    def check(self, channels: Sequence[str]) -> "ChannelSplit":
        if set(self.external) | set(self.internal) != set(channels) \
                or len(self.external) + len(self.internal) != len(channels):
            raise SizeMismatch(
                f"Split {self.external} | {self.internal} does not partition the channels {tuple(channels)}"
            )
        return self


@dataclass(frozen=True)
class Permutation:
    """0-based permutation: image[k] = σ(k)."""

    image: tuple

    def __post_init__(self):
        image = tuple(int(x) for x in self.image)
        if sorted(image) != list(range(len(image))):
            raise InvariantViolation(f"{image} is not a permutation of 0..{len(image) - 1}")
        object.__setattr__(self, "image", image)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_cycles(cls, n: int, cycles: Sequence[Sequence[int]]) -> "Permutation":
        """from_cycles(3, [(0, 1, 2)]) maps 0 -> 1 -> 2 -> 0."""
        image = list(range(n))
        for cycle in cycles:
            for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
                image[a] = b
        return cls(tuple(image))

    @property
    def size(self) -> int:
        return len(self.image)

    @property
    def is_identity(self) -> bool:
        return all(k == v for k, v in enumerate(self.image))

    def __call__(self, k: int) -> int:
        return self.image[k]

    def compose(self, other: "Permutation") -> "Permutation":
        """(self ∘ other)(k) = self(other(k))."""
        if other.size != self.size:
            raise SizeMismatch(f"Cannot compose permutations of size {self.size} and {other.size}")
        return Permutation(tuple(self.image[other.image[k]] for k in range(self.size)))

    def inverse(self) -> "Permutation":
        image = [0] * self.size
        for k, v in enumerate(self.image):
            image[v] = k
        return Permutation(tuple(image))

    def restrict(self, positions: Sequence[int]) -> "Permutation":
        """σ on a σ-invariant subset, renumbered 0..len(positions)-1 in the given order."""
        index = {p: n for n, p in enumerate(positions)}
        try:
            return Permutation(tuple(index[self.image[p]] for p in positions))
        except KeyError as e:
            raise InvariantViolation(f"Positions {tuple(positions)} are not closed under {self.image}") from e

    def cycles(self) -> list:
        """Cycle decomposition, fixed points included, each cycle starting at its smallest element."""
        seen = set()
        out = []
        for start in range(self.size):
            if start in seen:
                continue
            cycle = [start]
            seen.add(start)
            k = self.image[start]
            while k != start:
                cycle.append(k)
                seen.add(k)
                k = self.image[k]
            out.append(tuple(cycle))
        return out

    def cycle_type(self) -> dict:
        """{cycle length: number of cycles of that length}."""
        counts = {}
        for cycle in self.cycles():
            counts[len(cycle)] = counts.get(len(cycle), 0) + 1
        return dict(sorted(counts.items()))

    @property
    def has_even_cycle(self) -> bool:
        return any(length % 2 == 0 for length in self.cycle_type())


class WellPosednessReport(BaseModel):
    """Invertibility of E_ii (Schur rule), script E_ii and I - S_ii (well-posedness)."""

    e_ii_invertible: bool
    script_e_ii_invertible: bool
    i_minus_s_ii_invertible: bool
    smallest_pivot: float
    e_ii_pivot: float
    script_e_ii_pivot: float
    i_minus_s_ii_pivot: float


# ============================================
# CONCATENATION
# ============================================

def _check_parallel(dims: Sequence[int], channel_sets: Sequence[Sequence[str]]):
    if not dims:
        raise SizeMismatch("Nothing to concatenate")
    if len(set(dims)) != 1:
        raise DimMismatch(f"Components disagree on the Hilbert space dimension: {sorted(set(dims))}")
    seen = set()
    for channels in channel_sets:
        clash = seen.intersection(channels)
        if clash:
            raise LabelCollision(f"Channel labels {sorted(clash)} used by more than one component",
                                 block=",".join(sorted(clash)))
        seen.update(channels)


def concat_slh(models: Sequence[SLHModel]) -> SLHModel:
    """(S1 ⊕ ... ⊕ Sm, [L1; ...; Lm], H1 + ... + Hm)."""
    _check_parallel([m.dim for m in models], [m.channels for m in models])
    channels = tuple(c for m in models for c in m.channels)
    S = block_diag([m.S for m in models])
    L = LabeledBlockMatrix.from_grid([[m.L] for m in models])
    H = sum((m.H for m in models), np.zeros_like(models[0].H))
    return SLHModel(channels, S, L, H)


def concat_strat(gens: Sequence[StratGenerator]) -> StratGenerator:
    """E00 summed, field couplings stacked per component, E_kk block diagonal."""
    _check_parallel([g.dim for g in gens], [g.channels for g in gens])
    d = gens[0].dim
    e00 = sum((g.e00 for g in gens), np.zeros((d, d), dtype=np.complex128))
    E = LabeledBlockMatrix.from_grid([
        [LabeledBlockMatrix((ZERO,), (ZERO,), d, e00), LabeledBlockMatrix.from_grid([[g.e0k for g in gens]])],
        [LabeledBlockMatrix.from_grid([[g.ek0] for g in gens]), block_diag([g.ekk for g in gens])],
    ])
    return StratGenerator(E)


# ============================================
# SERIES PRODUCT
# ============================================

def _check_series(n2: int, d2: int, n1: int, d1: int):
    if n2 != n1 or d2 != d1:
        raise DimMismatch(f"Series product needs equal channel counts and dimensions ({n2}, d={d2}) vs ({n1}, d={d1})")


def series_slh(second: SLHModel, first: SLHModel) -> SLHModel:
    """second ◁ first: the output of `first` drives `second`. Channels carry second's labels."""
    _check_series(second.n, second.dim, first.n, first.dim)
    first = first.with_channels(second.channels)
    S2, L2 = second.S, second.L
    S = S2 @ first.S
    L = L2 + S2 @ first.L
    H = first.H + second.H + imag_part((L2.adjoint() @ S2 @ first.L).data)
    return SLHModel(second.channels, S, L, H)


def series_chain(models: Sequence[SLHModel]) -> SLHModel:
    """models[-1] ◁ ... ◁ models[0], i.e. listed in signal order."""
    result = models[0]
    for m in models[1:]:
        result = series_slh(m, result)
    return result


def series_v(v2: BHMatrix, v1: BHMatrix) -> BHMatrix:
    """V_series = V2 V1."""
    _check_series(len(v2.channels), v2.dim, len(v1.channels), v1.dim)
    labels = bh_labels(v2.channels)
    return v2 @ BHMatrix(v1.entries.with_labels(labels, labels))


def series_strat(e2: StratGenerator, e1: StratGenerator, tol: Tolerances) -> StratGenerator:
    """E_series = (I + i/2 E2)^-1 (E1 + E2) (I - ¼ E2 E1)^-1 (I + i/2 E2), on BH matrices."""
    _check_series(len(e2.channels), e2.dim, len(e1.channels), e1.dim)
    e1 = e1.with_channels(e2.channels)
    k, d = e2.channels, e2.dim
    I = LabeledBlockMatrix.identity(bh_labels(k), d)
    E2 = bh_embed(e2.E).entries
    E1 = bh_embed(e1.E).entries

    try:
        P_inv = block_inverse(I - 0.25 * (E2 @ E1), tol, block="I-(1/4)E2E1")
    except Singular as e:
        raise SeriesNotRepresentable(
            "Series product has no Stratonovich form (-1 in the spectrum of S_series)",
            block="I-(1/4)E2E1",
            smallest_pivot=e.smallest_pivot,
        ) from e
    A2 = I + 0.5j * E2
    A2_inv = block_inverse(A2, tol, block="I+(i/2)E2")
    series = A2_inv @ (E1 + E2) @ P_inv @ A2
    return StratGenerator(bh_unembed(BHMatrix(series), tol))


# ============================================
# ADJACENCY
# ============================================

def adjacency_matrix(sigma: Permutation, labels: Sequence[str] = None, dim: int = 1) -> LabeledBlockMatrix:
    """[η(σ)]_jk = I when j = σ(k), else 0."""
    if labels is None:
        labels = tuple(str(k + 1) for k in range(sigma.size))
    labels = tuple(labels)
    if len(labels) != sigma.size:
        raise SizeMismatch(f"Permutation of size {sigma.size} needs {sigma.size} labels, got {len(labels)}")
    eye = identity(dim)
    blocks = {(labels[sigma(k)], labels[k]): eye for k in range(sigma.size)}
    return LabeledBlockMatrix.from_blocks(labels, labels, dim, blocks)


def route_channels(m: SLHModel, sigma: Permutation) -> SLHModel:
    """Absorb a routing over all channels into S: S -> S η(σ). L and H are unchanged."""
    if sigma.size != m.n:
        raise SizeMismatch(f"Routing of size {sigma.size} does not match {m.n} channels")
    if sigma.is_identity:
        return m
    eta = adjacency_matrix(sigma, m.channels, m.dim)
    return SLHModel(m.channels, m.S @ eta, m.L, m.H)


def absorb_adjacency(m: SLHModel, split: ChannelSplit, sigma: Permutation) -> SLHModel:
    """S_ei -> S_ei η, S_ii -> S_ii η, with η = η(σ) over the internal channels."""
    split.check(m.channels)
    if sigma.size != len(split.internal):
        raise SizeMismatch(f"Adjacency of size {sigma.size} does not match {len(split.internal)} internal channels")
    pos = {c: p for p, c in enumerate(m.channels)}
    image = list(range(m.n))
    for k, label in enumerate(split.internal):
        image[pos[label]] = pos[split.internal[sigma(k)]]
    return route_channels(m, Permutation(tuple(image)))


def adjacency_absorption_explicit(m: SLHModel, split: ChannelSplit, sigma: Permutation,
                                  tol: Tolerances) -> SLHModel:
    """Feedback with the adjacency kept explicit: (I - S_ii η)^-1 and S_ji η in the sums."""
    split.check(m.channels)
    e, i = split.external, split.internal
    d = m.dim
    eta = adjacency_matrix(sigma, i, d)
    S, L = m.S, m.L
    I_i = LabeledBlockMatrix.identity(i, d)
    try:
        F = block_inverse(I_i - sub_block(S, i, i) @ eta, tol, block="I-S_ii·η")
    except Singular as err:
        raise IllPosed("Network is ill-posed: I - S_ii η is singular", block="I-S_ii·η",
                       smallest_pivot=err.smallest_pivot) from err
    S_fb = sub_block(S, e, e) + sub_block(S, e, i) @ eta @ F @ sub_block(S, i, e)
    L_fb = sub_block(L, e, (ZERO,)) + sub_block(S, e, i) @ eta @ F @ sub_block(L, i, (ZERO,))
    H_fb = m.H + imag_part((L.adjoint() @ sub_block(S, m.channels, i) @ eta @ F @ sub_block(L, i, (ZERO,))).data)
    return SLHModel(e, S_fb, L_fb, H_fb)


# ============================================
# FEEDBACK REDUCTION
# ============================================

def _internal_loop_inverse(Sii: LabeledBlockMatrix, tol: Tolerances, block: str) -> LabeledBlockMatrix:
    I_i = LabeledBlockMatrix.identity(Sii.rows, Sii.dim)
    try:
        return block_inverse(I_i - Sii, tol, block=block)
    except Singular as e:
        raise IllPosed(
            f"Network is ill-posed: {block} is singular (relative pivot {e.smallest_pivot:.3e})",
            block=block,
            smallest_pivot=e.smallest_pivot,
        ) from e


def feedback_slh(m: SLHModel, split: ChannelSplit, tol: Tolerances) -> SLHModel:
    """
    S_fb = S_ee + S_ei (I - S_ii)^-1 S_ie
    L_fb = L_e  + S_ei (I - S_ii)^-1 L_i
    H_fb = H + Σ_{j in e,i} Im{L_j† S_ji (I - S_ii)^-1 L_i}
    """
    split.check(m.channels)
    e, i = split.external, split.internal
    S, L = m.S, m.L
    F = _internal_loop_inverse(sub_block(S, i, i), tol, block="I-S_ii")
    Sei = sub_block(S, e, i)
    Li = sub_block(L, i, (ZERO,))
    S_fb = sub_block(S, e, e) + Sei @ F @ sub_block(S, i, e)
    L_fb = sub_block(L, e, (ZERO,)) + Sei @ F @ Li
    H_fb = m.H + imag_part((L.adjoint() @ sub_block(S, m.channels, i) @ F @ Li).data)
    logger.debug(f"Feedback (SLH) eliminated {len(i)} internal channel(s), {len(e)} remain")
    return SLHModel(e, S_fb, L_fb, H_fb)


def feedback_v(V: BHMatrix, split: ChannelSplit, tol: Tolerances) -> BHMatrix:
    """[V_fb]_ab = V_ab + V_ai (I - V_ii)^-1 V_ib over a, b in ō ∪ e ∪ 0̲."""
    split.check(V.channels)
    X = V.entries
    keep = bh_labels(split.external)
    i = split.internal
    F = _internal_loop_inverse(sub_block(X, i, i), tol, block="I-V_ii")
    return BHMatrix(sub_block(X, keep, keep) + sub_block(X, keep, i) @ F @ sub_block(X, i, keep))


def feedback_g_schur(m: SLHModel, split: ChannelSplit, tol: Tolerances) -> BHMatrix:
    """G_fb = Schur_i G, with G the BH matrix of the Ito generator."""
    split.check(m.channels)
    G = bh_embed(ito_from_slh(m).G).entries
    try:
        reduced = schur_complement(G, split.internal, tol, block="G_ii=S_ii-I")
    except Singular as e:
        raise IllPosed(
            f"Network is ill-posed: S_ii - I is singular (relative pivot {e.smallest_pivot:.3e})",
            block="G_ii=S_ii-I",
            smallest_pivot=e.smallest_pivot,
        ) from e
    keep = bh_labels(split.external)
    return BHMatrix(reduced.aligned_to(keep, keep))


def feedback_strat(gen: StratGenerator, split: ChannelSplit, tol: Tolerances) -> StratGenerator:
    """E_fb = Schur_i E. Raises SchurUndefined when E_ii is singular."""
    split.check(gen.channels)
    try:
        reduced = schur_complement(gen.E, split.internal, tol, block="E_ii")
    except Singular as e:
        raise SchurUndefined(
            f"Stratonovich feedback rule undefined: E_ii is singular (relative pivot {e.smallest_pivot:.3e})",
            block="E_ii",
            smallest_pivot=e.smallest_pivot,
        ) from e
    labels = (ZERO,) + split.external
    logger.debug(f"Feedback (Stratonovich) shortened {len(split.internal)} internal channel(s)")
    return StratGenerator(reduced.aligned_to(labels, labels))


# ============================================
# DIAGNOSTICS
# ============================================

def script_e_ii(gen: StratGenerator, split: ChannelSplit, tol: Tolerances) -> LabeledBlockMatrix:
    """E_ii - (i/2) E_ie (I_e + (i/2) E_ee)^-1 E_ei."""
    split.check(gen.channels)
    e, i = split.external, split.internal
    E, d = gen.E, gen.dim
    Ae_inv = block_inverse(LabeledBlockMatrix.identity(e, d) + 0.5j * sub_block(E, e, e), tol,
                           block="I_e+(i/2)E_ee")
    return sub_block(E, i, i) - 0.5j * (sub_block(E, i, e) @ Ae_inv @ sub_block(E, e, i))


def wellposedness(gen: StratGenerator, split: ChannelSplit, tol: Tolerances) -> WellPosednessReport:
    """Report on E_ii, script E_ii and I - S_ii; the last two must agree."""
    script = script_e_ii(gen, split, tol)
    i = split.internal
    p_e = relative_pivot(sub_block(gen.E, i, i).data)
    p_script = relative_pivot(script.data)

    m = slh_from_strat(gen, tol)
    I_i = LabeledBlockMatrix.identity(i, gen.dim)
    p_s = relative_pivot((I_i - sub_block(m.S, i, i)).data)

    report = WellPosednessReport(
        e_ii_invertible=p_e >= tol.sing_tol,
        script_e_ii_invertible=p_script >= tol.sing_tol,
        i_minus_s_ii_invertible=p_s >= tol.sing_tol,
        smallest_pivot=min(p_script, p_s),
        e_ii_pivot=p_e,
        script_e_ii_pivot=p_script,
        i_minus_s_ii_pivot=p_s,
    )
    if report.script_e_ii_invertible != report.i_minus_s_ii_invertible:
        logger.warning(f"Well-posedness tests disagree: script E_ii pivot {p_script:.3e}, I-S_ii pivot {p_s:.3e}")
        raise InvariantViolation(
            "script E_ii and I - S_ii disagree on invertibility",
            block="E_ii/I-S_ii",
            smallest_pivot=min(p_script, p_s),
        )
    return report


def e_ii_representability(m: SLHModel, split: ChannelSplit, tol: Tolerances) -> bool:
    """
    True iff E_ii of the Stratonovich form of m is invertible.

    Cross-checked against I_i - script S_ii with
    script S_ii = S_ii - S_ie (I_e + S_ee)^-1 S_ei, when I_e + S_ee is invertible.
    """
    split.check(m.channels)
    gen = strat_from_slh(m, tol)
    e, i = split.external, split.internal
    d = m.dim
    direct = is_invertible(sub_block(gen.E, i, i).data, tol)

    S = m.S
    Te = LabeledBlockMatrix.identity(e, d) + sub_block(S, e, e)
    if is_invertible(Te.data, tol):
        script_s = sub_block(S, i, i) - sub_block(S, i, e) @ block_inverse(Te, tol, block="I_e+S_ee") @ sub_block(S, e, i)
        shortcut = is_invertible((LabeledBlockMatrix.identity(i, d) - script_s).data, tol)
        if shortcut != direct:
            raise InvariantViolation(
                "E_ii invertibility disagrees with the I_i - script S_ii shortcut",
                block="E_ii",
                smallest_pivot=relative_pivot(sub_block(gen.E, i, i).data),
            )
    else:
        logger.debug("I_e + S_ee singular; skipping the script S_ii shortcut")
    return direct


# ============================================
# PERMUTATIONS
# ============================================

def cycle_type(sigma: Permutation) -> dict:
    return sigma.cycle_type()


def predicted_spectrum(sigma: Permutation) -> np.ndarray:
    """Union over cycles of length k of the k-th roots of unity."""
    roots = []
    for cycle in sigma.cycles():
        k = len(cycle)
        roots.extend(np.exp(2j * np.pi * np.arange(k) / k))
    return np.array(roots, dtype=np.complex128)


def permutation_spectrum(sigma: Permutation) -> np.ndarray:
    return np.linalg.eigvals(adjacency_matrix(sigma).data)


def permutation_strat(sigma: Permutation, tol: Tolerances) -> LabeledBlockMatrix:
    """E_kk = (2/i)(I - η)(I + η)^-1; raises EvenCycle when σ has a cycle of even length."""
    eta = adjacency_matrix(sigma)
    I = LabeledBlockMatrix.identity(eta.rows, 1)
    try:
        inv = block_inverse(I + eta, tol, block="I+η")
    except Singular as e:
        raise EvenCycle(
            f"η(σ) has no Stratonovich form: cycles {sigma.cycles()} include an even cycle",
            block="I+η",
            smallest_pivot=e.smallest_pivot,
        ) from e
    return -2j * ((I - eta) @ inv)


# ============================================
# ORACLES
# ============================================

def lindblad_generator(m: SLHModel, rho: np.ndarray) -> np.ndarray:
    """-i[H, ρ] + Σ_k (L_k ρ L_k† - ½{L_k† L_k, ρ})."""
    rho = np.asarray(rho, dtype=np.complex128)
    d = m.dim
    if rho.shape != (d, d):
        raise DimMismatch(f"ρ must be {d}x{d}, got {rho.shape}")
    H = m.H
    out = -1j * (H @ rho - rho @ H)
    for c in m.channels:
        Lc = m.L.entry(c, ZERO)
        Lcd = op_adjoint(Lc)
        LdL = Lcd @ Lc
        out = out + Lc @ rho @ Lcd - 0.5 * (LdL @ rho + rho @ LdL)
    return out


def beamsplitter_generator(alpha: float, beta: complex, gamma: float, dim: int = 1,
                           channels: Sequence[str] = ("e", "i")) -> StratGenerator:
    """E_kk = [[α, β], [β*, γ]] (α, γ real), no field coupling, E_00 = 0."""
    if abs(np.imag(alpha)) > 0 or abs(np.imag(gamma)) > 0:
        raise InvariantViolation("Beam-splitter α and γ must be real", block="E_kk")
    ekk = np.array([[alpha, beta], [np.conj(beta), gamma]], dtype=np.complex128)
    data = np.zeros((3 * dim, 3 * dim), dtype=np.complex128)
    data[dim:, dim:] = np.kron(ekk, np.eye(dim))
    return StratGenerator.from_array(channels, dim, data)


def beamsplitter_scattering(alpha: float, beta: complex, gamma: float) -> np.ndarray:
    """Closed-form Cayley transform of the beam-splitter E_kk."""
    q = 0.25 * (alpha * gamma - abs(beta) ** 2)
    den = 1 + 0.5j * (alpha + gamma) - q
    return np.array([
        [1 + 0.5j * (gamma - alpha) + q, -1j * beta],
        [-1j * np.conj(beta), 1 + 0.5j * (alpha - gamma) + q],
    ], dtype=np.complex128) / den
