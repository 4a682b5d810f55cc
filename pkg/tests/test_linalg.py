import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graft.errors import ZeroSubspace
from graft.linalg import (
    orthonormal_basis,
    project_onto_span,
    subspace_similarity,
    thin_svd,
)


def random_matrix(rng, rows, cols):
    return rng.normal(size=(rows, cols))


class TestThinSvd:
    def test_diagonal(self):
        s = thin_svd(np.diag([3.0, 2.0, 1.0]), 2)
        np.testing.assert_allclose(s.singular_values, [3.0, 2.0])
        np.testing.assert_allclose(s.U, np.eye(3)[:, :2], atol=1e-12)

    def test_rank_one(self):
        s = thin_svd(np.array([[1.0, 0.0], [0.0, 0.0]]), 1)
        assert s.singular_values[0] == pytest.approx(1.0)

    def test_reconstruction_and_gram_oracle(self):
        # Oracle: eigendecomposition of the Gram matrix A^T A.
        rng = np.random.default_rng(7)
        A = random_matrix(rng, 8, 5)
        s = thin_svd(A, 5)
        recon = s.U @ np.diag(s.singular_values) @ s.Vt
        assert np.linalg.norm(A - recon) <= 1e-8 * np.linalg.norm(A)
        ev = np.sort(np.linalg.eigvalsh(A.T @ A))[::-1]
        np.testing.assert_allclose(s.singular_values, np.sqrt(np.clip(ev, 0, None)), atol=1e-8)

    @pytest.mark.parametrize("rows,cols", [(8, 5), (5, 8), (20, 20), (40, 7)])
    def test_orthonormality(self, rows, cols):
        rng = np.random.default_rng(rows * 100 + cols)
        A = random_matrix(rng, rows, cols)
        r = min(rows, cols)
        s = thin_svd(A, r)
        np.testing.assert_allclose(s.U.T @ s.U, np.eye(r), atol=1e-10)
        np.testing.assert_allclose(s.Vt @ s.Vt.T, np.eye(r), atol=1e-10)
        assert np.all(np.diff(s.singular_values) <= 1e-12)
        assert np.all(s.singular_values >= 0)

    def test_sign_convention(self):
        rng = np.random.default_rng(3)
        A = random_matrix(rng, 10, 4)
        s = thin_svd(A, 4)
        for j in range(4):
            i = int(np.argmax(np.abs(s.U[:, j])))
            assert s.U[i, j] > 0

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            thin_svd(np.array([[np.nan, 1.0]]), 1)
        with pytest.raises(ValueError):
            thin_svd(np.eye(3), 4)
        with pytest.raises(ValueError):
            thin_svd(np.eye(3), 0)


class TestOrthonormalBasis:
    def test_diagonal(self):
        Q = orthonormal_basis(np.array([[2.0, 0.0], [0.0, 3.0]]))
        np.testing.assert_allclose(np.abs(Q), np.eye(2), atol=1e-12)

    def test_duplicate_columns_drop(self):
        g = np.array([1.0, 2.0, 3.0])
        Q = orthonormal_basis(np.column_stack([g, g]))
        assert Q.shape[1] == 1

    def test_matches_pseudoinverse_projection(self):
        rng = np.random.default_rng(11)
        G = rng.normal(size=(20, 4))
        Q = orthonormal_basis(G)
        np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-10)
        g = rng.normal(size=20)
        # Oracle: normal-equations projection G (G^T G)^{-1} G^T g.
        proj_oracle = G @ np.linalg.solve(G.T @ G, G.T @ g)
        np.testing.assert_allclose(Q @ (Q.T @ g), proj_oracle, atol=1e-8)

    def test_zero_matrix_raises(self):
        with pytest.raises(ZeroSubspace):
            orthonormal_basis(np.zeros((4, 2)))


class TestProjection:
    def test_in_span_identity(self):
        Q = np.eye(5)[:, :2]
        g = np.array([1.0, -2.0, 0.0, 0.0, 0.0])
        np.testing.assert_allclose(project_onto_span(g, Q), g, atol=1e-10)

    def test_orthogonal_gives_zero(self):
        Q = np.eye(5)[:, :2]
        g = np.array([0.0, 0.0, 1.0, 2.0, 3.0])
        np.testing.assert_allclose(project_onto_span(g, Q), 0.0, atol=1e-10)

    def test_pythagoras(self):
        rng = np.random.default_rng(5)
        Q = orthonormal_basis(rng.normal(size=(12, 3)))
        g = rng.normal(size=12)
        p = project_onto_span(g, Q)
        assert g @ g == pytest.approx(p @ p + (g - p) @ (g - p), abs=1e-10)

    def test_idempotent(self):
        rng = np.random.default_rng(6)
        Q = orthonormal_basis(rng.normal(size=(12, 3)))
        g = rng.normal(size=12)
        p = project_onto_span(g, Q)
        np.testing.assert_allclose(project_onto_span(p, Q), p, atol=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            project_onto_span(np.ones(3), np.eye(4))


class TestSubspaceSimilarity:
    def test_identical_subspace(self):
        rng = np.random.default_rng(2)
        V = rng.normal(size=(10, 3))
        assert subspace_similarity(V, V) == pytest.approx(3.0, abs=1e-10)

    def test_orthogonal_lines(self):
        v1 = np.array([[1.0], [0.0]])
        v2 = np.array([[0.0], [1.0]])
        assert subspace_similarity(v1, v2) == pytest.approx(0.0, abs=1e-12)

    def test_svd_oracle(self):
        rng = np.random.default_rng(9)
        V1 = rng.normal(size=(150, 4))
        V2 = rng.normal(size=(150, 4))
        got = subspace_similarity(V1, V2)
        Q1 = orthonormal_basis(V1)
        Q2 = orthonormal_basis(V2)
        sv = np.linalg.svd(Q1.T @ Q2, compute_uv=False)
        assert got == pytest.approx(float(np.sum(sv**2)), abs=1e-8)
        assert 0.0 <= got <= 4.0

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000))
    def test_symmetric_and_mixing_invariant(self, seed):
        rng = np.random.default_rng(seed)
        V1 = rng.normal(size=(12, 3))
        V2 = rng.normal(size=(12, 2))
        s12 = subspace_similarity(V1, V2)
        s21 = subspace_similarity(V2, V1)
        assert s12 == pytest.approx(s21, abs=1e-10)
        # invariance under invertible column recombination
        M = rng.normal(size=(3, 3)) + 3.0 * np.eye(3)
        assert subspace_similarity(V1 @ M, V2) == pytest.approx(s12, abs=1e-8)

    def test_zero_rank_raises(self):
        with pytest.raises(ZeroSubspace):
            subspace_similarity(np.zeros((5, 2)), np.eye(5))
