import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from arh1 import hilbert as hc

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def vectors(d):
    return arrays(float, d, elements=finite)


def e(k, d=3):
    return hc.basis_vector(k, d)


class TestInnerProduct:
    def test_basis(self):
        assert hc.inner_product(e(0), e(0)) == 1
        assert hc.inner_product(e(0), e(1)) == 0

    def test_hand_computed(self):
        assert hc.inner_product([1, 2, 3], [4, 5, 6]) == 32

    def test_dimension_mismatch(self):
        with pytest.raises(hc.DimensionError):
            hc.inner_product([1, 2], [1, 2, 3])

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            hc.inner_product([1, np.nan], [1, 2])

    @given(vectors(4), vectors(4), vectors(4), finite)
    def test_symmetric_bilinear(self, f, g, h, a):
        assert hc.inner_product(f, g) == pytest.approx(hc.inner_product(g, f))
        lhs = hc.inner_product(a * f + h, g)
        assert lhs == pytest.approx(a * hc.inner_product(f, g) + hc.inner_product(h, g), abs=1e-9)

    @given(vectors(5))
    def test_parseval(self, f):
        coeffs = [hc.inner_product(f, hc.basis_vector(k, 5)) for k in range(5)]
        assert hc.norm(f) ** 2 == pytest.approx(sum(c * c for c in coeffs), rel=1e-12, abs=1e-12)


class TestTensorProduct:
    def test_basis_action(self):
        T = hc.tensor_product(e(0), e(1))
        np.testing.assert_array_equal(hc.apply(T, e(0)), e(1))
        np.testing.assert_array_equal(hc.apply(T, e(1)), np.zeros(3))

    def test_hand_computed(self):
        T = hc.tensor_product([1, 1], [2, 0])
        np.testing.assert_array_equal(hc.apply(T, [3, 4]), [14, 0])

    def test_rank_one(self):
        T = hc.tensor_product([1, 2, 3], [0, 1, -1])
        assert np.linalg.matrix_rank(T) == 1

    def test_consistency_random(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            d = rng.integers(1, 12)
            f, g, h = rng.standard_normal((3, d))
            lhs = hc.apply(hc.tensor_product(f, g), h)
            np.testing.assert_allclose(lhs, hc.inner_product(f, h) * g, rtol=0, atol=1e-12)

    def test_mismatch(self):
        with pytest.raises(hc.DimensionError):
            hc.tensor_product([1, 2], [1])


class TestApplyCompose:
    def test_identity_and_zero(self):
        f = np.array([1.5, -2.0, 0.25])
        np.testing.assert_array_equal(hc.apply(hc.identity(3), f), f)
        np.testing.assert_array_equal(hc.apply(hc.zero_operator(3), f), np.zeros(3))

    def test_diag(self):
        np.testing.assert_array_equal(hc.apply(np.diag([2, 3]), [1, 1]), [2, 3])

    def test_apply_basis_gives_column(self):
        A = np.arange(9.0).reshape(3, 3)
        for k in range(3):
            np.testing.assert_array_equal(hc.apply(A, e(k)), A[:, k])

    def test_compose(self):
        A = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(hc.compose(A, hc.identity(2)), A)
        np.testing.assert_array_equal(hc.compose(np.diag([2, 3]), np.diag([5, 7])), np.diag([10, 21]))

    def test_compose_order(self):
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        B = np.array([[1.0, 0.0], [0.0, 2.0]])
        f = np.array([1.0, 1.0])
        np.testing.assert_array_equal(hc.apply(hc.compose(A, B), f), hc.apply(A, hc.apply(B, f)))

    def test_adjoint(self):
        S = np.array([[2.0, 1.0], [1.0, 3.0]])
        np.testing.assert_array_equal(hc.adjoint(S), S)
        A = np.random.default_rng(0).standard_normal((4, 4))
        np.testing.assert_array_equal(hc.adjoint(hc.adjoint(A)), A)

    def test_adjoint_inner_product(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((5, 5))
        f, g = rng.standard_normal((2, 5))
        assert hc.inner_product(hc.apply(A, f), g) == pytest.approx(
            hc.inner_product(f, hc.apply(hc.adjoint(A), g)))

    def test_mismatch(self):
        with pytest.raises(hc.DimensionError):
            hc.apply(np.eye(3), [1, 2])
        with pytest.raises(hc.DimensionError):
            hc.compose(np.eye(3), np.eye(2))
        with pytest.raises(hc.DimensionError):
            hc.as_operator(np.ones((2, 3)))


class TestNorms:
    def test_diag(self):
        A = np.diag([1.0, -2.0, 3.0])
        assert hc.trace_norm(A) == pytest.approx(6)
        assert hc.hs_norm(A) == pytest.approx(math.sqrt(14))
        assert hc.operator_norm(A) == pytest.approx(3)

    def test_zero(self):
        Z = hc.zero_operator(4)
        assert hc.trace_norm(Z) == hc.hs_norm(Z) == hc.operator_norm(Z) == 0

    def test_rank_one(self):
        f, g = np.array([1.0, 2.0, 2.0]), np.array([0.0, 3.0, 4.0])
        T = hc.tensor_product(f, g)
        # single singular value ||f|| ||g|| = 3 * 5
        oracle = np.linalg.svd(T, compute_uv=False)
        assert oracle[0] == pytest.approx(15)
        for fn in (hc.trace_norm, hc.hs_norm, hc.operator_norm):
            assert fn(T) == pytest.approx(15)

    def test_definition_matches_singular_values(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            d = rng.integers(1, 20)
            A = rng.standard_normal((d, d))
            assert hc.trace_norm_by_definition(A) == pytest.approx(hc.trace_norm(A), abs=1e-10)
            Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
            assert hc.trace_norm_by_definition(A, Q) == pytest.approx(hc.trace_norm(A), abs=1e-10)

    @settings(max_examples=200)
    @given(st.integers(1, 8).flatmap(lambda d: arrays(float, (d, d), elements=finite)))
    def test_chain(self, A):
        op, hs, tr = hc.operator_norm(A), hc.hs_norm(A), hc.trace_norm(A)
        assert op <= hs + 1e-12 * max(1.0, hs)
        assert hs <= tr + 1e-12 * max(1.0, tr)


class TestEigen:
    def test_diagonal_sorted(self):
        es = hc.eigen_sym(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_allclose(es.values, [3, 2, 1])

    def test_identity(self):
        es = hc.eigen_sym(np.eye(4))
        np.testing.assert_allclose(es.values, 1)
        np.testing.assert_allclose(es.vectors.T @ es.vectors, np.eye(4), atol=1e-14)

    def test_two_by_two(self):
        es = hc.eigen_sym(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(es.values, [3, 1])
        s = 1 / math.sqrt(2)
        # canonical sign: first largest-magnitude coordinate positive
        np.testing.assert_allclose(es.vector(0), [s, s])
        np.testing.assert_allclose(es.vector(1), [s, -s])

    def test_rejects_non_symmetric(self):
        with pytest.raises(hc.NotSymmetricError):
            hc.eigen_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_tolerates_tiny_asymmetry(self):
        A = np.array([[1.0, 0.5], [0.5 + 1e-12, 2.0]])
        assert hc.eigen_sym(A).values[0] > 2

    def test_canonical_sign(self):
        rng = np.random.default_rng(5)
        M = rng.standard_normal((6, 6))
        es = hc.eigen_sym(M + M.T)
        for j in range(6):
            v = es.vector(j)
            assert v[np.argmax(np.abs(v))] > 0

    def test_reconstruction_and_invariants(self):
        rng = np.random.default_rng(11)
        for d in (1, 2, 5, 17, 50):
            M = rng.standard_normal((d, d))
            A = M + M.T
            es = hc.eigen_sym(A)
            assert np.all(np.diff(es.values) <= 0)
            np.testing.assert_allclose(es.vectors.T @ es.vectors, np.eye(d), atol=1e-12)
            np.testing.assert_allclose(A @ es.vectors, es.vectors * es.values, atol=1e-10 * hc.hs_norm(A))
            assert hc.hs_norm(A - es.reconstruct()) <= 1e-9 * hc.hs_norm(A)


class TestSvd:
    def test_sign_absorbed(self):
        s = hc.svd(np.diag([-2.0, 1.0]))
        np.testing.assert_allclose(s.values, [2, 1])
        np.testing.assert_allclose(np.diag([-2.0, 1.0]) @ s.right, s.left * s.values)

    def test_rotation(self):
        t = 0.3
        R = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
        np.testing.assert_allclose(hc.svd(R).values, [1, 1])

    def test_rank_one(self):
        f = np.array([0.6, 0.8, 0.0])
        g = np.array([0.0, 0.0, 1.0])
        s = hc.svd(hc.tensor_product(f, g))
        np.testing.assert_allclose(s.values, [1, 0, 0], atol=1e-15)
        np.testing.assert_allclose(s.right[:, 0], f)
        np.testing.assert_allclose(s.left[:, 0], g)

    def test_invariants(self):
        rng = np.random.default_rng(2)
        for d in (1, 3, 10, 40):
            A = rng.standard_normal((d, d))
            s = hc.svd(A)
            assert np.all(s.values >= 0) and np.all(np.diff(s.values) <= 0)
            np.testing.assert_allclose(A @ s.right, s.left * s.values, atol=1e-10 * hc.hs_norm(A))
            np.testing.assert_allclose(s.right.T @ s.right, np.eye(d), atol=1e-12)
            np.testing.assert_allclose(s.left.T @ s.left, np.eye(d), atol=1e-12)
            assert hc.hs_norm(A - s.reconstruct()) <= 1e-9 * hc.hs_norm(A)
