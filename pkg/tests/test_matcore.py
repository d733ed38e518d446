import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stiefelgeo import matcore
from stiefelgeo.errors import DimensionError, StructureError

from oracles import (
    eigenvalue_pair_sums,
    multiset_match_distance,
    random_rank_deficient,
    taylor_expm,
)


def random_skew(rng, n):
    g = rng.standard_normal((n, n))
    return 0.5 * (g - g.T)


# ---------------------------------------------------------------------------
# expm
# ---------------------------------------------------------------------------

class TestExpm:
    def test_zero_matrix(self):
        assert np.allclose(matcore.expm(np.zeros((3, 3))), np.eye(3), atol=1e-15)

    def test_planar_rotation_by_pi(self):
        rot = matcore.expm(np.array([[0.0, -np.pi], [np.pi, 0.0]]))
        assert np.allclose(rot, -np.eye(2), atol=1e-13)

    def test_random_skew_orthogonality_and_taylor(self):
        rng = np.random.default_rng(11)
        s = random_skew(rng, 6)
        e = matcore.expm(s)
        assert np.linalg.norm(e.T @ e - np.eye(6)) <= 1e-12
        assert np.linalg.norm(e - taylor_expm(s)) <= 1e-12

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            matcore.expm(np.zeros((2, 3)))

    def test_batched_matches_loop(self):
        rng = np.random.default_rng(2)
        stack = rng.standard_normal((5, 4, 4))
        batched = matcore.expm(stack)
        for i in range(5):
            assert np.allclose(batched[i], matcore.expm(stack[i]), atol=1e-12)

    @pytest.mark.parametrize("t", [0.1, 1.0, 10.0])
    def test_skew_gives_rotation(self, t):
        rng = np.random.default_rng(31)
        s = random_skew(rng, 5)
        e = matcore.expm(t * s)
        assert np.linalg.norm(e.T @ e - np.eye(5)) <= 1e-11
        assert abs(np.linalg.det(e) - 1.0) <= 1e-9

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_inverse_property(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((4, 4))
        norm = np.linalg.norm(x)
        if norm > 5.0:
            x *= 5.0 / norm
        prod = matcore.expm(x) @ matcore.expm(-x)
        assert np.linalg.norm(prod - np.eye(4)) <= 1e-11


# ---------------------------------------------------------------------------
# thin_qr
# ---------------------------------------------------------------------------

class TestThinQr:
    def test_identity(self):
        q, r = matcore.thin_qr(np.eye(3))
        assert np.allclose(q, np.eye(3))
        assert np.allclose(r, np.eye(3))

    def test_orthogonal_columns_scaled(self):
        m = np.array([[2.0, 0.0], [0.0, 0.0], [0.0, 3.0]])
        q, r = matcore.thin_qr(m)
        assert np.allclose(q, np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]))
        assert np.allclose(r, np.diag([2.0, 3.0]))

    def test_rank_one_input(self):
        m = np.array([[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
        q, r = matcore.thin_qr(m)
        assert np.linalg.norm(q @ r - m) <= 1e-13
        assert np.linalg.norm(q.T @ q - np.eye(2)) <= 1e-13
        assert r[1, 1] == 0.0

    def test_wide_matrix_rejected(self):
        with pytest.raises(DimensionError):
            matcore.thin_qr(np.zeros((2, 3)))

    def test_completion_respects_guard(self):
        # normal part of the circle tangent: rank-1, guard = base point
        u = np.vstack([np.eye(2), np.zeros((2, 2))])
        k = np.zeros((4, 2))
        k[2, 0] = 1.0
        q, r = matcore.thin_qr(k, complete_against=u)
        assert np.allclose(q, np.vstack([np.zeros((2, 2)), np.eye(2)]))
        assert np.allclose(r, np.diag([1.0, 0.0]))
        assert np.linalg.norm(u.T @ q) <= 1e-14

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(2, 9), p=st.integers(1, 5),
           deficient=st.booleans())
    def test_reconstruction(self, seed, n, p, deficient):
        p = min(p, n)
        rng = np.random.default_rng(seed)
        if deficient and p > 1:
            m = random_rank_deficient(rng, n, p, rank=p - 1)
        else:
            m = rng.standard_normal((n, p))
        q, r = matcore.thin_qr(m)
        scale = max(1.0, np.linalg.norm(m))
        assert np.linalg.norm(q @ r - m) <= 1e-12 * scale
        assert np.linalg.norm(q.T @ q - np.eye(p)) <= 1e-12
        assert np.all(np.diag(r) >= 0.0)
        assert np.linalg.norm(np.tril(r, -1)) == 0.0


# ---------------------------------------------------------------------------
# skew_spectrum
# ---------------------------------------------------------------------------

class TestSkewSpectrum:
    def test_single_rotation(self):
        spec = matcore.skew_spectrum(np.array([[0.0, -2.0], [2.0, 0.0]]))
        assert np.allclose(spec.frequencies, [2.0])
        assert spec.kernel_basis.shape[1] == 0

    def test_zero_matrix(self):
        spec = matcore.skew_spectrum(np.zeros((4, 4)))
        assert spec.frequencies.size == 0
        assert spec.kernel_basis.shape[1] == 4

    def test_block_diagonal(self):
        block = lambda w: np.array([[0.0, -w], [w, 0.0]])
        s = np.zeros((4, 4))
        s[:2, :2] = block(1.0)
        s[2:, 2:] = block(3.0)
        spec = matcore.skew_spectrum(s)
        assert np.allclose(spec.frequencies, [1.0, 3.0])

    def test_non_skew_rejected(self):
        with pytest.raises(StructureError):
            matcore.skew_spectrum(np.array([[0.0, 1.0], [1.0, 0.0]]))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(1, 8))
    def test_counting_and_reconstruction(self, seed, n):
        rng = np.random.default_rng(seed)
        s = random_skew(rng, n)
        spec = matcore.skew_spectrum(s)
        assert 2 * len(spec.frequencies) + spec.kernel_basis.shape[1] == n
        assert np.linalg.norm(spec.reconstruct() - 0.5 * (s - s.T)) <= 1e-9

    def test_planes_orthonormal_with_degeneracy(self):
        # two planes with the same frequency exercise the cluster pairing
        s = np.zeros((4, 4))
        s[0, 1], s[1, 0] = -1.0, 1.0
        s[2, 3], s[3, 2] = -1.0, 1.0
        spec = matcore.skew_spectrum(s)
        vectors = np.column_stack([p for p in spec.planes]).reshape(4, -1)
        gram = vectors.T @ vectors
        assert np.linalg.norm(gram - np.eye(gram.shape[0])) <= 1e-10
        assert np.linalg.norm(spec.reconstruct() - s) <= 1e-9

    def test_plane_rotation_relations(self):
        rng = np.random.default_rng(5)
        s = random_skew(rng, 6)
        spec = matcore.skew_spectrum(s)
        for theta, plane in zip(spec.frequencies, spec.planes):
            u, v = plane[:, 0], plane[:, 1]
            assert np.linalg.norm(s @ u - theta * v) <= 1e-9
            assert np.linalg.norm(s @ v + theta * u) <= 1e-9


# ---------------------------------------------------------------------------
# kron_sum
# ---------------------------------------------------------------------------

class TestKronSum:
    def test_left_identity_scalar(self):
        x = np.random.default_rng(0).standard_normal((3, 3))
        assert np.allclose(matcore.kron_sum(np.zeros((1, 1)), x), x)

    def test_right_identity_scalar(self):
        a = np.random.default_rng(1).standard_normal((2, 2))
        assert np.allclose(matcore.kron_sum(a, np.zeros((1, 1))), a)

    def test_skew_inputs_give_skew_output(self):
        rng = np.random.default_rng(9)
        a = random_skew(rng, 2)
        x = random_skew(rng, 4)
        g = matcore.kron_sum(a, x)
        assert np.linalg.norm(g + g.T) <= 1e-14

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10_000), p=st.integers(1, 4), q=st.integers(1, 2))
    def test_eigenvalues_are_pairwise_sums(self, seed, p, q):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((p, p))
        x = rng.standard_normal((2 * q, 2 * q))
        got = np.linalg.eigvals(matcore.kron_sum(a, x))
        expected = eigenvalue_pair_sums(a, x)
        assert multiset_match_distance(got, expected) <= 1e-8

    def test_generates_vectorized_two_sided_flow(self):
        # d/dt vec(exp(tX) C exp(-tA)) = kron_sum(A, X) vec(...) for skew A
        rng = np.random.default_rng(3)
        a = random_skew(rng, 2)
        x = rng.standard_normal((3, 3))
        c = rng.standard_normal((3, 2))
        g = matcore.kron_sum(a, x)
        t = 0.37
        lhs = matcore.expm(t * g) @ matcore.vec(c)
        rhs = matcore.vec(matcore.expm(t * x) @ c @ matcore.expm(-t * a))
        assert np.linalg.norm(lhs - rhs) <= 1e-12
