import numpy as np
import pytest

from block_algebra import LabeledBlockMatrix, block_diag, block_inverse, label_set, schur_complement, sub_block
from conftest import scaled
from errors import DimMismatch, LabelCollision, Singular, UnknownLabel
from sampling import random_operator


def scalars(labels, values):
    return LabeledBlockMatrix.from_scalars(labels, labels, values)


class TestLabels:
    def test_duplicates_rejected(self):
        with pytest.raises(LabelCollision):
            label_set(["a", "b", "a"])

    def test_empty_label_rejected(self):
        with pytest.raises(UnknownLabel):
            label_set(["a", ""])

    def test_shape_checked(self):
        with pytest.raises(DimMismatch):
            LabeledBlockMatrix(("a",), ("a",), 2, np.eye(3))


class TestAccess:
    def test_from_scalars_lifts_to_identity(self):
        X = LabeledBlockMatrix.from_scalars(("a", "b"), ("a", "b"), [[1, 2], [3, 4]], dim=2)
        np.testing.assert_array_equal(X.entry("a", "b"), 2 * np.eye(2))
        assert X.data.shape == (4, 4)

    def test_unknown_label(self):
        X = scalars(("a",), [[1]])
        with pytest.raises(UnknownLabel):
            X.entry("a", "z")

    def test_aligned_to_reorders(self):
        X = scalars(("a", "b"), [[1, 2], [3, 4]])
        Y = X.aligned_to(("b", "a"), ("b", "a"))
        np.testing.assert_array_equal(Y.data, [[4, 3], [2, 1]])
        assert Y.max_abs_diff(X) == 0.0

    def test_relabel(self):
        X = scalars(("a", "b"), [[1, 2], [3, 4]]).relabel({"a": "x"})
        assert X.rows == ("x", "b")
        np.testing.assert_array_equal(X.entry("x", "b"), [[2]])

    def test_data_read_only(self):
        X = scalars(("a",), [[1]])
        with pytest.raises(ValueError):
            X.data[0, 0] = 5


class TestArithmetic:
    def test_matmul_matches_labels_not_positions(self):
        A = LabeledBlockMatrix.from_scalars(("r",), ("x", "y"), [[1, 2]])
        B = LabeledBlockMatrix.from_scalars(("y", "x"), ("c",), [[10], [100]])
        np.testing.assert_array_equal((A @ B).data, [[1 * 100 + 2 * 10]])

    def test_add_aligns(self):
        X = scalars(("a", "b"), [[1, 2], [3, 4]])
        Y = X.aligned_to(("b", "a"), ("b", "a"))
        np.testing.assert_array_equal((X + Y).data, 2 * X.data)

    def test_matmul_label_mismatch(self):
        A = LabeledBlockMatrix.from_scalars(("r",), ("x",), [[1]])
        B = LabeledBlockMatrix.from_scalars(("z",), ("c",), [[1]])
        with pytest.raises(UnknownLabel):
            A @ B

    def test_adjoint(self, rng):
        data = random_operator(rng, 4)
        X = LabeledBlockMatrix(("a", "b"), ("c", "d"), 2, data)
        Xd = X.adjoint()
        assert Xd.rows == ("c", "d")
        np.testing.assert_array_equal(Xd.entry("c", "b"), X.entry("b", "c").conj().T)

    def test_scalar_multiplication_both_sides(self):
        X = scalars(("a",), [[2]])
        np.testing.assert_array_equal((1j * X).data, (X * 1j).data)


class TestInverse:
    def test_block_inverse_swaps_labels(self, rng, tol):
        X = LabeledBlockMatrix(("a", "b"), ("c", "d"), 1, random_operator(rng, 2))
        inv = block_inverse(X, tol)
        assert inv.rows == ("c", "d") and inv.cols == ("a", "b")
        np.testing.assert_allclose((X @ inv).data, np.eye(2), atol=1e-12)

    def test_two_by_two_example(self, tol):
        inv = block_inverse(scalars(("a", "b"), [[2, 1], [1, 1]]), tol)
        np.testing.assert_allclose(inv.data, [[1, -1], [-1, 2]], atol=1e-14)

    def test_singular_names_block(self, tol):
        X = scalars(("a", "b"), [[1, 1], [1, 1]])
        with pytest.raises(Singular) as exc:
            block_inverse(X, tol, block="I-S_ii")
        assert exc.value.block == "I-S_ii"


class TestSchur:
    def test_scalar(self, tol):
        X = scalars(("1", "2"), [[4, 2], [1, 1]])
        R = schur_complement(X, ["2"], tol)
        assert R.rows == ("1",)
        np.testing.assert_allclose(R.data, [[2]])

    def test_empty_shortening_is_identity(self, tol):
        X = scalars(("1", "2"), [[4, 2], [1, 1]])
        assert schur_complement(X, [], tol) is X

    def test_unknown_label(self, tol):
        with pytest.raises(UnknownLabel):
            schur_complement(scalars(("1",), [[1]]), ["9"], tol)

    def test_singular_pivot(self, tol):
        X = scalars(("1", "2"), [[4, 2], [1, 0]])
        with pytest.raises(Singular):
            schur_complement(X, ["2"], tol)

    def test_keeps_original_order(self, tol):
        X = scalars(("c", "a", "b"), np.arange(9).reshape(3, 3) + 5 * np.eye(3))
        assert schur_complement(X, ["a"], tol).rows == ("c", "b")

    @pytest.mark.parametrize("seed", range(4))
    def test_shortening_order_independence(self, seed, tol):
        rng = np.random.default_rng(seed)
        labels = ("p", "q", "r", "s")
        for _ in range(50):
            d = int(rng.integers(1, 3))
            X = LabeledBlockMatrix(labels, labels, d, random_operator(rng, 4 * d))
            at_once = schur_complement(X, ["r", "s"], tol)
            r_then_s = schur_complement(schur_complement(X, ["r"], tol), ["s"], tol)
            s_then_r = schur_complement(schur_complement(X, ["s"], tol), ["r"], tol)
            bound = scaled(1e-8, at_once.data)
            assert at_once.max_abs_diff(r_then_s) <= bound
            assert at_once.max_abs_diff(s_then_r) <= bound


class TestBlockDiag:
    def test_direct_sum(self):
        X = block_diag([scalars(("a",), [[1]]), scalars(("b", "c"), [[2, 3], [4, 5]])])
        assert X.rows == ("a", "b", "c")
        np.testing.assert_array_equal(X.data, [[1, 0, 0], [0, 2, 3], [0, 4, 5]])

    def test_collision(self):
        with pytest.raises(LabelCollision):
            block_diag([scalars(("a",), [[1]]), scalars(("a",), [[2]])])

    def test_sub_block_order(self):
        X = scalars(("a", "b"), [[1, 2], [3, 4]])
        np.testing.assert_array_equal(sub_block(X, ["b"], ["a", "b"]).data, [[3, 4]])

    def test_sub_block_composes(self, rng):
        labels = ("a", "b", "c", "d")
        X = LabeledBlockMatrix(labels, labels, 2, random_operator(rng, 8))
        outer = sub_block(X, ["d", "a", "b"], ["c", "b", "a"])
        inner = sub_block(outer, ["b", "d"], ["a", "c"])
        assert inner.max_abs_diff(sub_block(X, ["b", "d"], ["a", "c"])) == 0.0
        assert inner.rows == ("b", "d") and inner.cols == ("a", "c")
