"""
Open system representations and the conversions among them.

One open quantum system can be written as
- an SLH triple (S, L, H),
- an Ito generator matrix G over 0 ∪ k,
- a Stratonovich generator E over 0 ∪ k,
- a Belavkin-Holevo matrix over ō ∪ k ∪ 0̲ (V = I + H(G), or H(E)).

Channel labels are strings; "0", "ō" and "0̲" are reserved for the field
rows/columns and may not be used as channel names.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from block_algebra import LabeledBlockMatrix, block_inverse, label_set, schur_complement, sub_block
from errors import DimMismatch, InvariantViolation, LabelCollision, MalformedV, NotRepresentable, Singular
from linalg_core import Tolerances, identity, imag_part, is_selfadjoint, is_unitary, max_abs, op_adjoint

logger = logging.getLogger(__name__)

ZERO = "0"
TOP = "ō"
BOTTOM = "0̲"
RESERVED_LABELS = frozenset({ZERO, TOP, BOTTOM})

# suffix for the duplicated label set in the Schur form of G
DUPLICATE_SUFFIX = "′"


def _check_channels(channels: Sequence[str]) -> tuple:
    channels = label_set(channels)
    clash = RESERVED_LABELS.intersection(channels)
    if clash:
        raise LabelCollision(f"Channel labels {sorted(clash)} are reserved", block=",".join(sorted(clash)))
    return channels


def _op_block(op: np.ndarray, row: str, col: str, dim: int) -> LabeledBlockMatrix:
    return LabeledBlockMatrix((row,), (col,), dim, op)


# ============================================
# DATA TYPES
# ============================================

@dataclass(frozen=True, eq=False)
class SLHModel:
    """Hudson-Parthasarathy parameters. L is a column over channels x ("0",)."""

    channels: tuple
    S: LabeledBlockMatrix
    L: LabeledBlockMatrix
    H: np.ndarray

    def __post_init__(self):
        channels = _check_channels(self.channels)
        object.__setattr__(self, "channels", channels)
        H = np.array(self.H, dtype=np.complex128)
        H.flags.writeable = False
        object.__setattr__(self, "H", H)
        d = H.shape[0] if H.ndim == 2 else 0
        if H.ndim != 2 or H.shape != (d, d) or d < 1:
            raise DimMismatch(f"H must be a square operator, got shape {H.shape}")
        if self.S.dim != d or self.L.dim != d:
            raise DimMismatch(f"S, L and H disagree on dimension ({self.S.dim}, {self.L.dim}, {d})")
        if self.S.rows != channels or self.S.cols != channels:
            object.__setattr__(self, "S", self.S.aligned_to(channels, channels))
        if self.L.cols != (ZERO,):
            raise DimMismatch(f"L must be a single column labelled {ZERO!r}, got {self.L.cols}")
        if self.L.rows != channels:
            object.__setattr__(self, "L", self.L.aligned_to(channels, (ZERO,)))

    @classmethod
    def from_arrays(cls, channels: Sequence[str], S, L, H) -> "SLHModel":
        """S: (n*d)x(n*d), L: (n*d)xd stacked column, H: dxd."""
        channels = tuple(channels)
        H = np.asarray(H, dtype=np.complex128)
        d = H.shape[0]
        S = np.asarray(S, dtype=np.complex128).reshape(len(channels) * d, len(channels) * d)
        L = np.asarray(L, dtype=np.complex128).reshape(len(channels) * d, d)
        return cls(
            channels,
            LabeledBlockMatrix(channels, channels, d, S),
            LabeledBlockMatrix(channels, (ZERO,), d, L),
            H,
        )

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    @property
    def n(self) -> int:
        return len(self.channels)

    def check_invariants(self, tol: Tolerances) -> "SLHModel":
        if not is_unitary(self.S.data, tol):
            raise InvariantViolation("S is not unitary", block="S")
        if not is_selfadjoint(self.H, tol):
            raise InvariantViolation("H is not self-adjoint", block="H")
        return self

    def with_channels(self, channels: Sequence[str]) -> "SLHModel":
        """Positional relabelling of the channels."""
        channels = tuple(channels)
        if len(channels) != self.n:
            raise DimMismatch(f"Need {self.n} channel labels, got {len(channels)}")
        return SLHModel(
            channels,
            self.S.with_labels(channels, channels),
            self.L.with_labels(channels, (ZERO,)),
            self.H,
        )

    def max_abs_diff(self, other: "SLHModel") -> float:
        """Largest element-wise discrepancy in S, L and H (labels matched by name)."""
        return max(
            self.S.max_abs_diff(other.S),
            self.L.max_abs_diff(other.L),
            max_abs(self.H - other.H),
        )


@dataclass(frozen=True, eq=False)
class ItoGenerator:
    G: LabeledBlockMatrix

    @property
    def channels(self) -> tuple:
        return self.G.rows[1:]

    @property
    def dim(self) -> int:
        return self.G.dim


@dataclass(frozen=True, eq=False)
class StratGenerator:
    """Stratonovich generator E over ("0",) + channels."""

    E: LabeledBlockMatrix

    def __post_init__(self):
        if not self.E.rows or self.E.rows[0] != ZERO:
            raise DimMismatch(f"E must be indexed by {ZERO!r} followed by channels, got {self.E.rows}")
        _check_channels(self.E.rows[1:])
        if self.E.cols != self.E.rows:
            object.__setattr__(self, "E", self.E.aligned_to(self.E.rows, self.E.rows))

    @classmethod
    def from_array(cls, channels: Sequence[str], dim: int, data) -> "StratGenerator":
        labels = (ZERO,) + tuple(channels)
        return cls(LabeledBlockMatrix(labels, labels, dim, data))

    @property
    def channels(self) -> tuple:
        return self.E.rows[1:]

    @property
    def dim(self) -> int:
        return self.E.dim

    @property
    def e00(self) -> np.ndarray:
        return self.E.entry(ZERO, ZERO)

    @property
    def e0k(self) -> LabeledBlockMatrix:
        return sub_block(self.E, (ZERO,), self.channels)

    @property
    def ek0(self) -> LabeledBlockMatrix:
        return sub_block(self.E, self.channels, (ZERO,))

    @property
    def ekk(self) -> LabeledBlockMatrix:
        return sub_block(self.E, self.channels, self.channels)

    def is_hermitian_structured(self, tol: Tolerances) -> bool:
        return max_abs(self.E.data - op_adjoint(self.E.data)) <= tol.eq_tol

    def check_invariants(self, tol: Tolerances) -> "StratGenerator":
        if not self.is_hermitian_structured(tol):
            raise InvariantViolation("E is not Hermitian-structured (E_ab† != E_ba)", block="E")
        return self

    def with_channels(self, channels: Sequence[str]) -> "StratGenerator":
        channels = tuple(channels)
        if len(channels) != len(self.channels):
            raise DimMismatch(f"Need {len(self.channels)} channel labels, got {len(channels)}")
        labels = (ZERO,) + channels
        return StratGenerator(self.E.with_labels(labels, labels))

    def max_abs_diff(self, other: "StratGenerator") -> float:
        return self.E.max_abs_diff(other.E)


@dataclass(frozen=True, eq=False)
class BHMatrix:
    """Belavkin-Holevo matrix over ("ō",) + channels + ("0̲",)."""

    entries: LabeledBlockMatrix

    def __post_init__(self):
        rows = self.entries.rows
        if len(rows) < 2 or rows[0] != TOP or rows[-1] != BOTTOM:
            raise DimMismatch(f"BH matrix must be indexed {TOP!r}, channels, {BOTTOM!r}; got {rows}")
        if self.entries.cols != rows:
            object.__setattr__(self, "entries", self.entries.aligned_to(rows, rows))

    @classmethod
    def identity(cls, channels: Sequence[str], dim: int) -> "BHMatrix":
        return cls(LabeledBlockMatrix.identity(bh_labels(channels), dim))

    @classmethod
    def swap(cls, channels: Sequence[str], dim: int) -> "BHMatrix":
        """J: swaps ō and 0̲, identity on the channels."""
        labels = bh_labels(channels)
        eye = identity(dim)
        blocks = {(TOP, BOTTOM): eye, (BOTTOM, TOP): eye}
        blocks.update({(k, k): eye for k in channels})
        return cls(LabeledBlockMatrix.from_blocks(labels, labels, dim, blocks))

    @property
    def channels(self) -> tuple:
        return self.entries.rows[1:-1]

    @property
    def dim(self) -> int:
        return self.entries.dim

    def __matmul__(self, other: "BHMatrix") -> "BHMatrix":
        return BHMatrix(self.entries @ other.entries)

    def __add__(self, other: "BHMatrix") -> "BHMatrix":
        return BHMatrix(self.entries + other.entries)

    def __sub__(self, other: "BHMatrix") -> "BHMatrix":
        return BHMatrix(self.entries - other.entries)

    def __mul__(self, scalar) -> "BHMatrix":
        return BHMatrix(self.entries * scalar)

    __rmul__ = __mul__

    def star(self) -> "BHMatrix":
        return bh_star(self)

    def star_unitarity_residual(self) -> float:
        """max(‖VV⋆ - I‖, ‖V⋆V - I‖)."""
        eye = BHMatrix.identity(self.channels, self.dim)
        vs = self.star()
        return max(
            (self @ vs).entries.max_abs_diff(eye.entries),
            (vs @ self).entries.max_abs_diff(eye.entries),
        )

    def is_star_unitary(self, tol: Tolerances) -> bool:
        return self.star_unitarity_residual() <= tol.eq_tol

    def max_abs_diff(self, other: "BHMatrix") -> float:
        return self.entries.max_abs_diff(other.entries)


def bh_labels(channels: Sequence[str]) -> tuple:
    return (TOP,) + tuple(channels) + (BOTTOM,)


def ito_labels(channels: Sequence[str]) -> tuple:
    return (ZERO,) + tuple(channels)


# ============================================
# ITO FORM AND BELAVKIN-HOLEVO EMBEDDING
# ============================================

def ito_from_slh(m: SLHModel) -> ItoGenerator:
    """G = [[-(½L†L + iH), -L†S], [L, S - I]]."""
    d, k = m.dim, m.channels
    Ld = m.L.adjoint()
    g00 = -(0.5 * (Ld @ m.L).data + 1j * m.H)
    G = LabeledBlockMatrix.from_grid([
        [_op_block(g00, ZERO, ZERO, d), -(Ld @ m.S)],
        [m.L, m.S - LabeledBlockMatrix.identity(k, d)],
    ])
    return ItoGenerator(G)


def _split_ito(X: LabeledBlockMatrix) -> tuple:
    if not X.rows or X.rows[0] != ZERO or not X.is_square_labeled:
        raise DimMismatch(f"Expected a square matrix over {ZERO!r} + channels, got {X.rows} x {X.cols}")
    k = X.rows[1:]
    X = X.aligned_to(X.rows, X.rows)
    return X, k


def delta_hat(channels: Sequence[str], dim: int) -> LabeledBlockMatrix:
    """δ̂ = [[0, 0], [0, I_k]] over 0 ∪ k."""
    eye = identity(dim)
    return LabeledBlockMatrix.from_blocks(ito_labels(channels), ito_labels(channels), dim,
                                          {(c, c): eye for c in channels})


def bh_embed(X: LabeledBlockMatrix) -> BHMatrix:
    """H(X) = [[0, x0k, x00], [0, xkk, xk0], [0, 0, 0]]."""
    X, k = _split_ito(X)
    d = X.dim
    zero = LabeledBlockMatrix.zeros
    x00 = sub_block(X, (ZERO,), (ZERO,)).with_labels((TOP,), (BOTTOM,))
    x0k = sub_block(X, (ZERO,), k).with_labels((TOP,), k)
    xk0 = sub_block(X, k, (ZERO,)).with_labels(k, (BOTTOM,))
    xkk = sub_block(X, k, k)
    entries = LabeledBlockMatrix.from_grid([
        [zero((TOP,), (TOP,), d), x0k, x00],
        [zero(k, (TOP,), d), xkk, xk0],
        [zero((BOTTOM,), (TOP,), d), zero((BOTTOM,), k, d), zero((BOTTOM,), (BOTTOM,), d)],
    ])
    return BHMatrix(entries)


def bh_unembed(V: BHMatrix, tol: Tolerances = None) -> LabeledBlockMatrix:
    """Inverse of bh_embed; the first block column and last block row must vanish."""
    tol = tol or Tolerances()
    X = V.entries
    k = V.channels
    labels = bh_labels(k)
    first_col = X.block(labels, (TOP,))
    last_row = X.block((BOTTOM,), labels)
    if max_abs(first_col) > tol.eq_tol or max_abs(last_row) > tol.eq_tol:
        raise MalformedV("Not in the image of the Belavkin-Holevo embedding", block=f"{TOP}-column/{BOTTOM}-row")
    return LabeledBlockMatrix.from_grid([
        [sub_block(X, (TOP,), (BOTTOM,)).with_labels((ZERO,), (ZERO,)), sub_block(X, (TOP,), k).with_labels((ZERO,), k)],
        [sub_block(X, k, (BOTTOM,)).with_labels(k, (ZERO,)), sub_block(X, k, k)],
    ])


def ito_delta_product(X: LabeledBlockMatrix, Y: LabeledBlockMatrix) -> LabeledBlockMatrix:
    """X δ̂ Y: block (α, β) = Σ_k x_αk y_kβ."""
    X, k = _split_ito(X)
    Y, k2 = _split_ito(Y)
    if set(k) != set(k2):
        raise DimMismatch(f"Channel sets differ: {k} vs {k2}")
    return sub_block(X, X.rows, k) @ sub_block(Y, k, X.rows)


def bh_star(V: BHMatrix) -> BHMatrix:
    """V⋆ = J V† J."""
    J = BHMatrix.swap(V.channels, V.dim)
    return BHMatrix((J.entries @ V.entries.adjoint()) @ J.entries)


def v_from_slh(m: SLHModel) -> BHMatrix:
    return BHMatrix.identity(m.channels, m.dim) + bh_embed(ito_from_slh(m).G)


def slh_from_v(V: BHMatrix, tol: Tolerances) -> SLHModel:
    """Read (S, L, H) off a V-shaped BH matrix and check it is consistent."""
    X = V.entries
    k = V.channels
    d = V.dim
    eye = identity(d)

    if max_abs(X.entry(TOP, TOP) - eye) > tol.eq_tol or max_abs(X.entry(BOTTOM, BOTTOM) - eye) > tol.eq_tol:
        raise MalformedV("Corner blocks of V must be the identity", block=f"{TOP}{TOP}/{BOTTOM}{BOTTOM}")
    if max_abs(X.block(k + (BOTTOM,), (TOP,))) > tol.eq_tol:
        raise MalformedV(f"First block column of V must vanish below {TOP}", block=f"k{TOP}")
    if max_abs(X.block((BOTTOM,), (TOP,) + k)) > tol.eq_tol:
        raise MalformedV(f"Last block row of V must vanish left of {BOTTOM}", block=f"{BOTTOM}k")

    S = sub_block(X, k, k)
    L = sub_block(X, k, (BOTTOM,)).with_labels(k, (ZERO,))
    K = X.entry(TOP, BOTTOM)
    H = 0.5j * (K - op_adjoint(K))

    Ld = L.adjoint()
    if sub_block(X, (TOP,), k).with_labels((ZERO,), k).max_abs_diff(-(Ld @ S)) > tol.eq_tol:
        raise MalformedV(f"V_{TOP}k does not equal -L†S", block=f"{TOP}k")
    if max_abs(K + op_adjoint(K) + (Ld @ L).data) > tol.eq_tol:
        raise MalformedV(f"Hermitian part of V_{TOP}{BOTTOM} does not equal -½L†L", block=f"{TOP}{BOTTOM}")
    return SLHModel(k, S, L, H)


# ============================================
# STRATONOVICH FORM
# ============================================

def slh_from_strat(gen: StratGenerator, tol: Tolerances) -> SLHModel:
    """
    S = (I - i/2 E_kk)(I + i/2 E_kk)^-1
    L = -i (I + i/2 E_kk)^-1 E_k0
    H = E_00 + ½ Im{E_0k (I + i/2 E_kk)^-1 E_k0}
    """
    k, d = gen.channels, gen.dim
    I = LabeledBlockMatrix.identity(k, d)
    Ekk = gen.ekk
    A_inv = block_inverse(I + 0.5j * Ekk, tol, block="I+(i/2)E_kk")
    S = (I - 0.5j * Ekk) @ A_inv
    L = -1j * (A_inv @ gen.ek0)
    H = gen.e00 + 0.5 * imag_part((gen.e0k @ A_inv @ gen.ek0).data)
    return SLHModel(k, S, L, H)


def strat_from_slh(m: SLHModel, tol: Tolerances) -> StratGenerator:
    """Inverse Cayley transform; raises NotRepresentable when I + S is singular."""
    k, d = m.channels, m.dim
    I = LabeledBlockMatrix.identity(k, d)
    try:
        T_inv = block_inverse(I + m.S, tol, block="I+S")
    except Singular as e:
        raise NotRepresentable(
            f"No Stratonovich form: I + S is singular (relative pivot {e.smallest_pivot:.3e})",
            block="I+S",
            smallest_pivot=e.smallest_pivot,
        ) from e

    Ekk = -2j * (T_inv @ (I - m.S))
    A = I + 0.5j * Ekk
    Ek0 = 1j * (A @ m.L)
    E0k = Ek0.adjoint()
    A_inv = block_inverse(A, tol, block="I+(i/2)E_kk")
    E00 = m.H - 0.5 * imag_part((E0k @ A_inv @ Ek0).data)
    E = LabeledBlockMatrix.from_grid([
        [_op_block(E00, ZERO, ZERO, d), E0k],
        [Ek0, Ekk],
    ])
    logger.debug(f"Stratonovich form built over {len(k)} channel(s), d={d}")
    return StratGenerator(E)


def v_from_strat(gen: StratGenerator, tol: Tolerances) -> BHMatrix:
    """V = (I - i/2 E)(I + i/2 E)^-1 on Belavkin-Holevo matrices."""
    k, d = gen.channels, gen.dim
    I = LabeledBlockMatrix.identity(bh_labels(k), d)
    EE = bh_embed(gen.E).entries
    A_inv = block_inverse(I + 0.5j * EE, tol, block="I+(i/2)E")
    return BHMatrix((I - 0.5j * EE) @ A_inv)


def ito_from_strat(gen: StratGenerator, tol: Tolerances) -> ItoGenerator:
    return ito_from_slh(slh_from_strat(gen, tol))


def ito_strat_residual(ito: ItoGenerator, gen: StratGenerator) -> float:
    """‖G - (-iE - (i/2) E δ̂ G)‖_max; zero when both describe the same system."""
    G, E = ito.G, gen.E
    rhs = -1j * E - 0.5j * ito_delta_product(E, G)
    return G.max_abs_diff(rhs)


def ito_from_strat_schur(gen: StratGenerator, tol: Tolerances) -> BHMatrix:
    """
    G (as a BH matrix) by shortening out a duplicated label set:
        G = -Schur_dup [[2I, √2 I], [√2 I, I + (i/2)E]]
    """
    k, d = gen.channels, gen.dim
    labels = bh_labels(k)
    dup = {l: l + DUPLICATE_SUFFIX for l in labels}
    dup_labels = tuple(dup[l] for l in labels)

    I = LabeledBlockMatrix.identity(labels, d)
    EE = bh_embed(gen.E).entries
    r2 = np.sqrt(2.0)
    doubled = LabeledBlockMatrix.from_grid([
        [2.0 * I, (r2 * I).with_labels(labels, dup_labels)],
        [(r2 * I).with_labels(dup_labels, labels), (I + 0.5j * EE).relabel(dup)],
    ])
    return BHMatrix(-schur_complement(doubled, dup_labels, tol, block="I+(i/2)E"))
