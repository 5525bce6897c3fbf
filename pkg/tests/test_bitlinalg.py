"""Packing, binarization, and the XNOR/popcount kernel."""

import numpy as np
import pytest

from bingcn import bitlinalg as bl

from reference_impl import best_binarization_by_search


class TestPackUnpack:
    def test_roundtrip_small(self):
        v = np.array([1.0, -1.0])
        bv = bl.pack(v)
        assert bv.length == 2
        assert np.array_equal(bl.unpack(bv), v)

    def test_word_count_and_padding_at_65(self):
        v = np.ones(65)
        v[10] = -1
        bv = bl.pack(v)
        assert bv.words.shape == (2,)
        assert np.array_equal(bl.unpack(bv), v)
        # padding must not leak into the dot product
        assert bl.xnor_popcount_dot(bv, bv) == 65

    def test_all_minus_one_word(self):
        bv = bl.pack(-np.ones(64))
        assert bv.words[0] == 0

    def test_padding_is_canonical_ones(self):
        bv = bl.pack(-np.ones(3))
        # bits 3..63 must read as 1
        assert bv.words[0] == np.uint64(0xFFFFFFFFFFFFFFFF) ^ np.uint64(0b111)

    def test_equality_is_wordwise(self):
        a = bl.pack([1, -1, 1])
        b = bl.pack([1, -1, 1])
        c = bl.pack([1, -1, -1])
        assert a == b
        assert a != c

    def test_rejects_non_sign_entries(self):
        with pytest.raises(ValueError):
            bl.pack([1, 0, -1])
        with pytest.raises(ValueError):
            bl.pack([2, 1])

    def test_roundtrip_random_lengths(self):
        rng = np.random.default_rng(7)
        for t in [1, 2, 63, 64, 65, 127, 128, 129, 1000]:
            v = np.where(rng.random(t) < 0.5, 1.0, -1.0)
            assert np.array_equal(bl.unpack(bl.pack(v)), v)


class TestBinarizeVector:
    def test_hand_example(self):
        bv, scalar = bl.binarize_vector([0.5, -1.5, 1.0])
        assert scalar == pytest.approx(1.0)
        assert np.array_equal(bl.unpack(bv), [1.0, -1.0, 1.0])

    def test_zero_vector(self):
        bv, scalar = bl.binarize_vector([0.0, 0.0, 0.0])
        assert scalar == 0.0
        assert np.array_equal(bl.unpack(bv), [1.0, 1.0, 1.0])

    def test_constant_positive(self):
        bv, scalar = bl.binarize_vector(np.full(9, 2.5))
        assert scalar == pytest.approx(2.5)
        assert np.array_equal(bl.unpack(bv), np.ones(9))

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            bl.binarize_vector([])
        with pytest.raises(ValueError):
            bl.binarize_vector([1.0, np.nan])
        with pytest.raises(ValueError):
            bl.binarize_vector([np.inf, 1.0])

    def test_optimal_among_all_sign_patterns(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            t = int(rng.integers(1, 9))
            v = rng.standard_normal(t) * rng.uniform(0.1, 5.0)
            bv, scalar = bl.binarize_vector(v)
            err = float(((v - scalar * bl.unpack(bv)) ** 2).sum())
            assert err <= best_binarization_by_search(v) + 1e-12


class TestBinarizeMatrices:
    def test_columns_hand_example(self):
        w = np.array([[0.5, -0.5], [0.5, 0.5]])
        b = bl.binarize_columns(w)
        assert b.orientation == "col"
        assert np.allclose(b.scalars, [0.5, 0.5])
        assert np.array_equal(b.sign_matrix(), [[1.0, -1.0], [1.0, 1.0]])

    def test_columns_identity(self):
        b = bl.binarize_columns(np.eye(2))
        assert np.allclose(b.scalars, [0.5, 0.5])
        # sign(0) = +1 forces all-plus signs
        assert np.array_equal(b.sign_matrix(), np.ones((2, 2)))

    def test_columns_zero_matrix(self):
        b = bl.binarize_columns(np.zeros((3, 4)))
        assert np.array_equal(b.scalars, np.zeros(4))

    def test_rows_hand_example(self):
        f = bl.binarize_rows(np.array([[1.0, -1.0]]))
        assert f.orientation == "row"
        assert np.allclose(f.scalars, [1.0])
        assert np.array_equal(f.sign_matrix(), [[1.0, -1.0]])

    def test_rows_one_hot(self):
        f = bl.binarize_rows(np.array([[1.0, 0.0, 0.0, 0.0]]))
        assert f.scalars[0] == pytest.approx(0.25)
        assert np.array_equal(f.sign_matrix(), np.ones((1, 4)))

    def test_rows_zero_row(self):
        f = bl.binarize_rows(np.zeros((1, 5)))
        assert f.scalars[0] == 0.0

    def test_scalar_nonnegative_and_zero_iff_zero_bucket(self):
        rng = np.random.default_rng(3)
        h = rng.standard_normal((10, 6))
        h[4] = 0.0
        f = bl.binarize_rows(h)
        assert (f.scalars >= 0).all()
        assert f.scalars[4] == 0.0
        assert (f.scalars[np.arange(10) != 4] > 0).all()

    def test_reconstruct_matches_scaled_signs(self):
        rng = np.random.default_rng(5)
        w = rng.standard_normal((7, 3))
        b = bl.binarize_columns(w)
        expected = np.sign(w + (w == 0)) * np.abs(w).mean(axis=0)[None, :]
        assert np.allclose(b.reconstruct(), expected)

    def test_bucket_accessor(self):
        w = np.array([[0.5, -0.5], [0.5, 0.5]])
        b = bl.binarize_columns(w)
        col1 = b.bucket(1)
        assert np.array_equal(bl.unpack(col1), [-1.0, 1.0])


class TestXnorPopcountDot:
    def test_hand_example(self):
        a = bl.pack([1, -1, 1, 1])
        b = bl.pack([1, 1, -1, 1])
        assert bl.xnor_popcount_dot(a, b) == 0

    def test_identity_and_negation(self):
        a = bl.pack([1, -1, 1, 1])
        neg = bl.pack([-1, 1, -1, -1])
        assert bl.xnor_popcount_dot(a, a) == 4
        assert bl.xnor_popcount_dot(a, neg) == -4

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            bl.xnor_popcount_dot(bl.pack([1, 1]), bl.pack([1, 1, 1]))

    def test_matches_float_dot_and_parity(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            t = int(rng.integers(1, 200))
            sa = np.where(rng.random(t) < 0.5, 1.0, -1.0)
            sb = np.where(rng.random(t) < 0.5, 1.0, -1.0)
            dot = bl.xnor_popcount_dot(bl.pack(sa), bl.pack(sb))
            assert dot == int(sa @ sb)
            assert -t <= dot <= t
            assert (dot - t) % 2 == 0

    def test_padding_never_changes_result(self):
        rng = np.random.default_rng(17)
        for t in [1, 63, 64, 65, 100]:
            sa = np.where(rng.random(t) < 0.5, 1.0, -1.0)
            sb = np.where(rng.random(t) < 0.5, 1.0, -1.0)
            base = bl.xnor_popcount_dot(bl.pack(sa), bl.pack(sb))
            for extra in [1, 7, 64]:
                wider_a = np.concatenate([sa, np.ones(extra)])
                wider_b = np.concatenate([sb, -np.ones(extra)])
                widened = bl.xnor_popcount_dot(bl.pack(wider_a), bl.pack(wider_b))
                assert widened == base - extra  # appended bits all disagree


class TestBinGemm:
    def test_hand_example(self):
        f = bl.binarize_rows(np.array([[2.0, -2.0]]))
        b = bl.binarize_columns(np.array([[0.5], [-0.5]]))
        z = bl.bin_gemm(f, b)
        assert z.shape == (1, 1)
        assert z[0, 0] == pytest.approx(2.0)

    def test_zero_row_scalars_give_zero_matrix(self):
        f = bl.binarize_rows(np.zeros((3, 8)))
        b = bl.binarize_columns(np.random.default_rng(0).standard_normal((8, 2)))
        assert np.array_equal(bl.bin_gemm(f, b), np.zeros((3, 2)))

    def test_matches_reconstructed_float_product(self):
        rng = np.random.default_rng(23)
        h = rng.standard_normal((8, 16))
        w = rng.standard_normal((16, 4))
        f, b = bl.binarize_rows(h), bl.binarize_columns(w)
        ref = f.reconstruct() @ b.reconstruct()
        assert np.allclose(bl.bin_gemm(f, b), ref, atol=1e-9)

    def test_dimension_mismatch(self):
        f = bl.binarize_rows(np.ones((2, 3)))
        b = bl.binarize_columns(np.ones((4, 2)))
        with pytest.raises(ValueError):
            bl.bin_gemm(f, b)

    def test_orientation_checked(self):
        f = bl.binarize_rows(np.ones((2, 3)))
        with pytest.raises(ValueError):
            bl.bin_gemm(f, f)

    def test_kernel_equivalence_random_shapes(self):
        rng = np.random.default_rng(29)
        for _ in range(25):
            n, d, m = (int(x) for x in rng.integers(1, 65, size=3))
            h = rng.standard_normal((n, d)) * rng.uniform(0.1, 3.0)
            w = rng.standard_normal((d, m))
            f, b = bl.binarize_rows(h), bl.binarize_columns(w)
            ref = f.reconstruct() @ b.reconstruct()
            assert np.abs(bl.bin_gemm(f, b) - ref).max() < 1e-6

    def test_spans_word_boundaries(self):
        rng = np.random.default_rng(31)
        for d in [63, 64, 65, 128, 130]:
            h = rng.standard_normal((4, d))
            w = rng.standard_normal((d, 3))
            f, b = bl.binarize_rows(h), bl.binarize_columns(w)
            ref = f.reconstruct() @ b.reconstruct()
            assert np.allclose(bl.bin_gemm(f, b), ref, atol=1e-9)

    def test_concurrent_invocations_agree(self):
        from concurrent.futures import ThreadPoolExecutor

        rng = np.random.default_rng(37)
        f = bl.binarize_rows(rng.standard_normal((64, 200)))
        b = bl.binarize_columns(rng.standard_normal((200, 16)))
        expected = bl.bin_gemm(f, b)
        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(lambda _: bl.bin_gemm(f, b), range(32)))
        for r in results:
            assert np.array_equal(r, expected)
