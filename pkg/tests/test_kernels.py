import numpy as np
import pytest

from krymat import (
    BlockTridiagonal,
    IndefiniteMatrixError,
    band_tridiagonalize,
    economy_qr,
    partial_eig_blocktridiag,
    sym_tridiag_eig,
    truncated_spd_factor,
    truncated_svd_factor,
)
from krymat.kernels import rank_deficient

from conftest import random_block_tridiagonal


class TestEconomyQR:
    def test_identity_columns(self):
        w = np.eye(3)[:, :2]
        q, r = economy_qr(w)
        assert np.allclose(q, w)
        assert np.allclose(r, np.eye(2))

    def test_three_four_five_column(self):
        q, r = economy_qr(np.array([[3.0], [4.0]]))
        assert np.allclose(q, [[0.6], [0.8]])
        assert np.allclose(r, [[5.0]])

    def test_multiply_back_random(self):
        rng = np.random.default_rng(7)
        w = rng.standard_normal((50, 4))
        q, r = economy_qr(w)
        assert np.linalg.norm(q @ r - w) <= 1e-13 * np.linalg.norm(w)
        assert np.linalg.norm(q.T @ q - np.eye(4)) <= 1e-13

    def test_idempotence(self):
        rng = np.random.default_rng(11)
        q, _ = economy_qr(rng.standard_normal((20, 5)))
        q2, r2 = economy_qr(q)
        assert np.linalg.norm(r2 - np.eye(5)) <= 1e-12
        assert np.allclose(q2, q)

    def test_rank_deficiency_detection(self):
        u = np.ones((10, 1))
        w = np.hstack([u, 2.0 * u])
        _, r = economy_qr(w)
        assert rank_deficient(r)
        _, r = economy_qr(np.random.default_rng(0).standard_normal((10, 3)))
        assert not rank_deficient(r)


class TestBandTridiagonalize:
    def test_block_size_one_is_identity(self):
        t = BlockTridiagonal(
            1,
            [np.array([[-2.0]]), np.array([[-3.0]]), np.array([[-1.5]])],
            [np.array([[1.0]]), np.array([[0.5]])],
        )
        d, e, p_first, p_last = band_tridiagonalize(t)
        assert np.allclose(d, [-2.0, -3.0, -1.5])
        assert np.allclose(e, [1.0, 0.5])
        assert np.allclose(p_first, [[1.0, 0.0, 0.0]])
        assert np.allclose(p_last, [[0.0, 0.0, 1.0]])

    def test_small_against_dense_householder(self):
        rng = np.random.default_rng(5)
        t = random_block_tridiagonal(rng, 2, 2)
        d, e, _, _ = band_tridiagonalize(t)
        f = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        # same spectrum as the dense matrix it is similar to
        assert np.allclose(
            np.linalg.eigvalsh(f), np.linalg.eigvalsh(t.to_dense()), atol=1e-12
        )

    def test_spectrum_preserved_random(self):
        rng = np.random.default_rng(3)
        t = random_block_tridiagonal(rng, 4, 10)
        d, e, _, _ = band_tridiagonalize(t)
        f = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        td = t.to_dense()
        assert np.allclose(
            np.linalg.eigvalsh(f),
            np.linalg.eigvalsh(td),
            atol=1e-12 * np.linalg.norm(td),
        )

    @pytest.mark.parametrize("ell,m,triangular", [
        (2, 5, False), (3, 4, False), (2, 13, True), (5, 3, True), (4, 1, False),
    ])
    def test_full_transformation_accumulation(self, ell, m, triangular):
        rng = np.random.default_rng(ell * 100 + m)
        t = random_block_tridiagonal(rng, ell, m, triangular=triangular)
        d, e, p_first, p_last, p = band_tridiagonalize(t, full_p=True)
        k = t.dim
        f = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        td = t.to_dense()
        assert np.linalg.norm(p.T @ p - np.eye(k)) <= 1e-12 * k
        assert np.linalg.norm(p.T @ td @ p - f) <= 1e-11 * np.linalg.norm(td)
        assert np.allclose(p_first, p[:ell, :], atol=1e-13)
        assert np.allclose(p_last, p[-ell:, :], atol=1e-13)


class TestSymTridiagEig:
    def test_single_entry(self):
        lam, g = sym_tridiag_eig(np.array([-2.0]), np.array([]))
        assert np.allclose(lam, [-2.0])
        assert np.allclose(g, [[1.0]])

    def test_two_by_two(self):
        lam, g = sym_tridiag_eig(np.array([0.0, 0.0]), np.array([1.0]))
        assert np.allclose(lam, [-1.0, 1.0])
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        assert np.allclose(g[:, 0], [inv_sqrt2, -inv_sqrt2])
        assert np.allclose(g[:, 1], [inv_sqrt2, inv_sqrt2])

    def test_discrete_laplacian_analytic(self):
        n = 100
        lam, g = sym_tridiag_eig(np.full(n, -2.0), np.ones(n - 1))
        k = np.arange(1, n + 1)
        expected = np.sort(2.0 * np.cos(k * np.pi / (n + 1)) - 2.0)
        assert np.max(np.abs(lam - expected)) <= 1e-12
        f = np.diag(np.full(n, -2.0)) + np.diag(np.ones(n - 1), 1) \
            + np.diag(np.ones(n - 1), -1)
        assert np.linalg.norm(g.T @ g - np.eye(n)) <= 1e-12 * np.sqrt(n)
        assert np.linalg.norm(f @ g - g * lam) <= 1e-12 * np.linalg.norm(f)


class TestPartialEig:
    def test_single_block_gives_full_eigenvectors(self):
        rng = np.random.default_rng(2)
        t = random_block_tridiagonal(rng, 3, 1)
        spec = partial_eig_blocktridiag(t)
        lam, q = np.linalg.eigh(t.to_dense())
        assert np.allclose(spec.eigenvalues, lam, atol=1e-12)
        # both row slices are the whole (sign-fixed) eigenvector matrix
        assert np.allclose(np.abs(spec.first_rows), np.abs(q), atol=1e-12)
        assert np.allclose(spec.first_rows, spec.last_rows)

    def test_hand_two_by_two(self):
        t = BlockTridiagonal(
            1, [np.array([[-2.0]]), np.array([[-2.0]])], [np.array([[1.0]])]
        )
        spec = partial_eig_blocktridiag(t)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        assert np.allclose(spec.eigenvalues, [-3.0, -1.0])
        assert np.allclose(spec.first_rows, [[inv_sqrt2, inv_sqrt2]])
        assert np.allclose(spec.last_rows, [[-inv_sqrt2, inv_sqrt2]])

    def test_rows_match_dense_eigendecomposition(self):
        rng = np.random.default_rng(9)
        t = random_block_tridiagonal(rng, 3, 10)
        spec = partial_eig_blocktridiag(t)
        lam, q = np.linalg.eigh(t.to_dense())
        assert np.allclose(spec.eigenvalues, lam, atol=1e-11 * np.abs(lam).max())
        # agreement up to a per-column sign
        for rows, ref in ((spec.first_rows, q[:3]), (spec.last_rows, q[-3:])):
            signs = np.ones(t.dim)
            piv = np.argmax(np.abs(ref), axis=0)
            for j in range(t.dim):
                if abs(ref[piv[j], j]) > 1e-14 and abs(rows[piv[j], j]) > 1e-14:
                    signs[j] = np.sign(ref[piv[j], j] * rows[piv[j], j])
            assert np.allclose(rows * signs, ref, atol=1e-9)

    def test_eigenvalues_match_dense_multiset(self):
        rng = np.random.default_rng(21)
        for ell, m in [(1, 17), (2, 8), (4, 5)]:
            t = random_block_tridiagonal(rng, ell, m)
            spec = partial_eig_blocktridiag(t)
            lam = np.linalg.eigvalsh(t.to_dense())
            assert np.max(np.abs(spec.eigenvalues - lam)) <= 1e-11 * np.linalg.norm(
                t.to_dense()
            )


class TestTruncatedFactors:
    def test_identity_keeps_full_rank(self):
        fac = truncated_spd_factor(np.eye(3), 1e-12)
        assert fac.rank == 3
        assert np.linalg.norm(fac.factor @ fac.factor.T - np.eye(3)) <= 1e-14

    def test_forced_truncation(self):
        fac = truncated_spd_factor(np.diag([1.0, 1e-20]), 1e-12)
        assert fac.rank == 1
        assert np.allclose(np.abs(fac.factor), [[1.0], [0.0]])
        assert fac.discarded_mass <= 1e-12

    def test_outer_product_rank_one(self):
        rng = np.random.default_rng(4)
        v = rng.standard_normal(10)
        v /= np.linalg.norm(v)
        fac = truncated_spd_factor(np.outer(v, v), 1e-12)
        assert fac.rank == 1
        assert min(
            np.linalg.norm(fac.factor[:, 0] - v), np.linalg.norm(fac.factor[:, 0] + v)
        ) <= 1e-12

    def test_factor_columns_orthogonal(self):
        rng = np.random.default_rng(6)
        w = rng.standard_normal((8, 8))
        y = w @ w.T
        fac = truncated_spd_factor(y, 1e-12)
        gram = fac.factor.T @ fac.factor
        assert np.linalg.norm(gram - np.diag(np.diag(gram))) <= 1e-12 * np.linalg.norm(gram)
        assert np.linalg.norm(fac.factor @ fac.factor.T - y) <= 1e-11 * np.linalg.norm(y)

    def test_indefinite_rejected(self):
        with pytest.raises(IndefiniteMatrixError):
            truncated_spd_factor(np.diag([1.0, -1.0]), 1e-12)

    def test_svd_zero_matrix(self):
        f1, f2 = truncated_svd_factor(np.zeros((4, 3)), 1e-12)
        assert f1.rank == 0 and f2.rank == 0
        assert f1.factor.shape == (4, 0) and f2.factor.shape == (3, 0)

    def test_svd_rank_one(self):
        rng = np.random.default_rng(8)
        u = rng.standard_normal(6)
        u /= np.linalg.norm(u)
        v = rng.standard_normal(4)
        v /= np.linalg.norm(v)
        y = np.outer(u, v)
        f1, f2 = truncated_svd_factor(y, 1e-12)
        assert f1.rank == 1
        assert np.linalg.norm(f1.factor @ f2.factor.T - y) <= 1e-14

    def test_svd_multiply_back(self):
        rng = np.random.default_rng(10)
        y = rng.standard_normal((8, 8))
        f1, f2 = truncated_svd_factor(y, 1e-12)
        assert np.linalg.norm(f1.factor @ f2.factor.T - y) <= 1e-12


def test_sym_tridiag_eig_survives_tight_clusters():
    # glued Wilkinson matrices produce eigenvalue clusters that are nearly
    # machine-identical, the classic stress case for MRRR-type solvers
    w = 10
    d_single = np.abs(np.arange(-w, w + 1)).astype(float)
    e_single = np.ones(2 * w)
    blocks = 4
    d = np.tile(d_single, blocks)
    e = np.concatenate(
        sum(([e_single, np.array([1e-14])] for _ in range(blocks - 1)), [])
        + [e_single]
    )
    lam, g = sym_tridiag_eig(d, e)
    k = d.size
    f = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.linalg.norm(g.T @ g - np.eye(k)) <= 1e-12 * np.sqrt(k)
    assert np.linalg.norm(f @ g - g * lam) <= 1e-12 * np.linalg.norm(f)
    assert np.allclose(lam, np.linalg.eigvalsh(f), atol=1e-12 * np.linalg.norm(f))


def test_band_tridiagonalize_blocked_but_already_tridiagonal():
    # block storage with ell > 1 whose global pattern is already tridiagonal
    d1 = np.array([[-2.0, 0.7], [0.7, -3.0]])
    d2 = np.array([[-2.5, 0.4], [0.4, -4.0]])
    off = np.array([[0.0, 0.9], [0.0, 0.0]])  # couples rows 2 and 1 only
    t = BlockTridiagonal(2, [d1, d2], [off])
    d, e, p_first, p_last = band_tridiagonalize(t)
    f = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert np.allclose(f, t.to_dense())
    assert np.allclose(p_first, np.eye(4)[:2])
    assert np.allclose(p_last, np.eye(4)[2:])
