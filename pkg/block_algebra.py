"""
Labeled block operator matrices.

A LabeledBlockMatrix is a matrix of d x d operators indexed by ordered label
sets, stored as one dense (|rows|*d) x (|cols|*d) array. Sub-blocks,
whole-block inverses and Schur complements are all taken on that flattened
array, so non-commuting operator entries are handled exactly.
"""

import logging
from typing import Iterable, Mapping, Sequence

import numpy as np

from errors import DimMismatch, InvariantViolation, LabelCollision, SizeMismatch, UnknownLabel
from linalg_core import Tolerances, max_abs, op_inverse

logger = logging.getLogger(__name__)

Label = str
LabelSet = tuple


def label_set(labels: Iterable[str]) -> LabelSet:
    """Ordered, duplicate-free tuple of non-empty string labels."""
    out = tuple(labels)
    for label in out:
        if not isinstance(label, str) or not label:
            raise UnknownLabel(f"Labels must be non-empty strings, got {label!r}")
    if len(set(out)) != len(out):
        dupes = sorted({l for l in out if out.count(l) > 1})
        raise LabelCollision(f"Duplicate labels: {dupes}", block=",".join(dupes))
    return out


class LabeledBlockMatrix:
    """Immutable block matrix of d x d operators over (rows, cols) label sets."""

    __slots__ = ("rows", "cols", "dim", "data", "_row_pos", "_col_pos")

    def __init__(self, rows: Sequence[str], cols: Sequence[str], dim: int, data):
        if dim < 1:
            raise DimMismatch(f"Operator dimension must be positive, got {dim}")
        rows = label_set(rows)
        cols = label_set(cols)
        arr = np.array(data, dtype=np.complex128)
        expected = (len(rows) * dim, len(cols) * dim)
        if arr.shape != expected:
            raise DimMismatch(f"Block data has shape {arr.shape}, expected {expected}")
        if not np.all(np.isfinite(arr)):
            raise InvariantViolation("Block matrix entries must be finite")
        arr.flags.writeable = False
        self.rows = rows
        self.cols = cols
        self.dim = dim
        self.data = arr
        self._row_pos = {label: k for k, label in enumerate(rows)}
        self._col_pos = {label: k for k, label in enumerate(cols)}

    # ---------- constructors ----------

    @classmethod
    def zeros(cls, rows: Sequence[str], cols: Sequence[str], dim: int) -> "LabeledBlockMatrix":
        return cls(rows, cols, dim, np.zeros((len(rows) * dim, len(cols) * dim), dtype=np.complex128))

    @classmethod
    def identity(cls, labels: Sequence[str], dim: int) -> "LabeledBlockMatrix":
        n = len(labels) * dim
        return cls(labels, labels, dim, np.eye(n, dtype=np.complex128))

    @classmethod
    def from_scalars(cls, rows: Sequence[str], cols: Sequence[str], values, dim: int = 1) -> "LabeledBlockMatrix":
        """Scalar entries lifted to scalar * I_d."""
        values = np.array(values, dtype=np.complex128).reshape(len(rows), len(cols))
        return cls(rows, cols, dim, np.kron(values, np.eye(dim)))

    @classmethod
    def from_blocks(cls, rows: Sequence[str], cols: Sequence[str], dim: int,
                    blocks: Mapping[tuple, np.ndarray]) -> "LabeledBlockMatrix":
        """Build from {(row, col): operator}; missing entries are zero."""
        rows = label_set(rows)
        cols = label_set(cols)
        data = np.zeros((len(rows) * dim, len(cols) * dim), dtype=np.complex128)
        rpos = {l: k for k, l in enumerate(rows)}
        cpos = {l: k for k, l in enumerate(cols)}
        for (r, c), op in blocks.items():
            if r not in rpos or c not in cpos:
                raise UnknownLabel(f"Block ({r!r}, {c!r}) is outside the label sets", block=f"{r},{c}")
            op = np.asarray(op, dtype=np.complex128)
            if op.shape != (dim, dim):
                raise DimMismatch(f"Block ({r!r}, {c!r}) has shape {op.shape}, expected ({dim}, {dim})")
            i, j = rpos[r] * dim, cpos[c] * dim
            data[i:i + dim, j:j + dim] = op
        return cls(rows, cols, dim, data)

    @classmethod
    def from_grid(cls, grid: Sequence[Sequence["LabeledBlockMatrix"]]) -> "LabeledBlockMatrix":
        """Assemble a block-of-blocks; each grid row shares rows, each grid column shares cols."""
        dim = grid[0][0].dim
        rows = tuple(l for line in grid for l in line[0].rows)
        cols = tuple(l for part in grid[0] for l in part.cols)
        for line in grid:
            for part, head in zip(line, grid[0]):
                if part.dim != dim:
                    raise DimMismatch(f"Grid mixes operator dimensions {part.dim} and {dim}")
                if part.rows != line[0].rows or part.cols != head.cols:
                    raise SizeMismatch("Grid blocks do not line up")
        data = np.block([[part.data for part in line] for line in grid])
        return cls(rows, cols, dim, data)

    # ---------- access ----------

    @property
    def shape(self) -> tuple:
        return len(self.rows), len(self.cols)

    @property
    def is_square_labeled(self) -> bool:
        return len(self.rows) == len(self.cols) and set(self.rows) == set(self.cols)

    def _index(self, labels: Sequence[str], positions: dict, axis: str) -> np.ndarray:
        d = self.dim
        idx = []
        for label in labels:
            if label not in positions:
                raise UnknownLabel(f"Label {label!r} not among the {axis} labels", block=label)
            p = positions[label]
            idx.extend(range(p * d, (p + 1) * d))
        return np.array(idx, dtype=np.intp)

    def entry(self, r: str, c: str) -> np.ndarray:
        i = self._index([r], self._row_pos, "row")
        j = self._index([c], self._col_pos, "column")
        return self.data[np.ix_(i, j)]

    def block(self, r: Sequence[str], c: Sequence[str]) -> np.ndarray:
        """Raw flattened array of the (r, c) sub-block."""
        i = self._index(r, self._row_pos, "row")
        j = self._index(c, self._col_pos, "column")
        return self.data[np.ix_(i, j)]

    def relabel(self, mapping: Mapping[str, str]) -> "LabeledBlockMatrix":
        """Rename labels on both axes; labels absent from mapping are kept."""
        rows = [mapping.get(l, l) for l in self.rows]
        cols = [mapping.get(l, l) for l in self.cols]
        return LabeledBlockMatrix(rows, cols, self.dim, self.data)

    def with_labels(self, rows: Sequence[str], cols: Sequence[str]) -> "LabeledBlockMatrix":
        return LabeledBlockMatrix(rows, cols, self.dim, self.data)

    def aligned_to(self, rows: Sequence[str], cols: Sequence[str]) -> "LabeledBlockMatrix":
        """Same matrix with rows/cols reordered to the given orders (same label sets)."""
        if set(rows) != set(self.rows) or set(cols) != set(self.cols) \
                or len(rows) != len(self.rows) or len(cols) != len(self.cols):
            raise UnknownLabel(f"Cannot align {self.rows}x{self.cols} to {tuple(rows)}x{tuple(cols)}")
        return sub_block(self, rows, cols)

    # ---------- arithmetic ----------

    def _coerce(self, other: "LabeledBlockMatrix") -> "LabeledBlockMatrix":
        if not isinstance(other, LabeledBlockMatrix):
            raise TypeError(f"Expected LabeledBlockMatrix, got {type(other).__name__}")
        if other.dim != self.dim:
            raise DimMismatch(f"Operator dimensions differ: {self.dim} vs {other.dim}")
        if other.rows == self.rows and other.cols == self.cols:
            return other
        return other.aligned_to(self.rows, self.cols)

    def __add__(self, other):
        other = self._coerce(other)
        return LabeledBlockMatrix(self.rows, self.cols, self.dim, self.data + other.data)

    def __sub__(self, other):
        other = self._coerce(other)
        return LabeledBlockMatrix(self.rows, self.cols, self.dim, self.data - other.data)

    def __neg__(self):
        return LabeledBlockMatrix(self.rows, self.cols, self.dim, -self.data)

    def __mul__(self, scalar):
        if isinstance(scalar, LabeledBlockMatrix):
            return NotImplemented
        return LabeledBlockMatrix(self.rows, self.cols, self.dim, self.data * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, LabeledBlockMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise DimMismatch(f"Operator dimensions differ: {self.dim} vs {other.dim}")
        if other.rows != self.cols:
            if set(other.rows) != set(self.cols) or len(other.rows) != len(self.cols):
                raise UnknownLabel(f"Cannot contract columns {self.cols} with rows {other.rows}")
            other = sub_block(other, self.cols, other.cols)
        return LabeledBlockMatrix(self.rows, other.cols, self.dim, self.data @ other.data)

    def adjoint(self) -> "LabeledBlockMatrix":
        """(X†)_{jk} = (X_{kj})†; rows and cols swap."""
        return LabeledBlockMatrix(self.cols, self.rows, self.dim, np.conj(self.data).T)

    def max_abs_diff(self, other: "LabeledBlockMatrix") -> float:
        other = self._coerce(other)
        return max_abs(self.data - other.data)

    def allclose(self, other: "LabeledBlockMatrix", atol: float) -> bool:
        return self.max_abs_diff(other) <= atol

    def __repr__(self) -> str:
        return f"LabeledBlockMatrix(rows={self.rows}, cols={self.cols}, dim={self.dim})"


# ============================================
# OPERATIONS
# ============================================

def sub_block(X: LabeledBlockMatrix, r: Sequence[str], c: Sequence[str]) -> LabeledBlockMatrix:
    """Entries of X on rows r and cols c, in the order given."""
    r = label_set(r)
    c = label_set(c)
    return LabeledBlockMatrix(r, c, X.dim, X.block(r, c))


def block_inverse(X: LabeledBlockMatrix, tol: Tolerances, block: str = None) -> LabeledBlockMatrix:
    """Inverse through the flattened matrix; the result is indexed cols x rows."""
    if len(X.rows) != len(X.cols):
        raise SizeMismatch(f"Cannot invert a {len(X.rows)}x{len(X.cols)} block matrix")
    inv = op_inverse(X.data, tol, block=block)
    return LabeledBlockMatrix(X.cols, X.rows, X.dim, inv)


def schur_complement(X: LabeledBlockMatrix, short: Sequence[str], tol: Tolerances,
                     block: str = None) -> LabeledBlockMatrix:
    """
    Schur_b X = X_aa - X_ab X_bb^-1 X_ba with b = short, a = the remaining labels.

    The result keeps the row order of X.rows and the column order of X.cols.
    Raises Singular when X_bb is not invertible.
    """
    short = label_set(short)
    if not X.is_square_labeled:
        raise SizeMismatch(f"Schur complement needs rows = cols as sets, got {X.rows} vs {X.cols}")
    missing = [l for l in short if l not in X._row_pos]
    if missing:
        raise UnknownLabel(f"Cannot shorten by labels not present: {missing}", block=",".join(missing))
    if not short:
        return X

    keep_rows = [l for l in X.rows if l not in short]
    keep_cols = [l for l in X.cols if l not in short]
    name = block or f"pivot[{','.join(short)}]"
    pivot = op_inverse(X.block(short, short), tol, block=name)
    data = X.block(keep_rows, keep_cols) - X.block(keep_rows, short) @ pivot @ X.block(short, keep_cols)
    return LabeledBlockMatrix(keep_rows, keep_cols, X.dim, data)


def block_diag(mats: Sequence[LabeledBlockMatrix]) -> LabeledBlockMatrix:
    """Direct sum; label sets must be globally disjoint."""
    if not mats:
        raise SizeMismatch("block_diag needs at least one matrix")
    dim = mats[0].dim
    rows = []
    cols = []
    for m in mats:
        if m.dim != dim:
            raise DimMismatch(f"Operator dimensions differ: {m.dim} vs {dim}")
        rows.extend(m.rows)
        cols.extend(m.cols)
    data = np.zeros((len(rows) * dim, len(cols) * dim), dtype=np.complex128)
    i = j = 0
    for m in mats:
        h, w = m.data.shape
        data[i:i + h, j:j + w] = m.data
        i += h
        j += w
    return LabeledBlockMatrix(rows, cols, dim, data)
