"""Dense small-matrix kernels.

Everything here operates on the projected (small) matrices of the outer
iteration: economy QR, reduction of symmetric block tridiagonal matrices to
tridiagonal form with only the first/last block row of the transformation,
tridiagonal eigensolution, and truncated low-rank factorizations.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatchError,
    FactorizationError,
    IndefiniteMatrixError,
)

#: Relative threshold below which a triangular diagonal entry flags rank
#: deficiency of the factored block.
RANK_TOL = 1e-12

#: Default tail mass allowed when truncating a low-rank factorization.
TRUNC_EPS = 1e-12

#: Guard for eigenvalue-sum denominators, relative to the spectral radius.
DENOM_TOL = 1e-14


def guarded_denominators(left, right, tol=DENOM_TOL):
    """Pairwise eigenvalue sums left_i + right_j with a singularity guard.

    Raises if any sum is negligible relative to the spectral radius, which
    happens exactly when the underlying matrices are not definite of one
    sign.
    """
    denom = left[:, None] + right[None, :]
    scale = max(np.max(np.abs(left)), np.max(np.abs(right)))
    if np.min(np.abs(denom)) < tol * scale:
        raise IndefiniteMatrixError(
            "eigenvalue-sum denominator is numerically singular; "
            "coefficient matrices must be definite (of one sign)"
        )
    return denom


@dataclass
class BlockTridiagonal:
    """Symmetric block tridiagonal matrix stored as its lower block bands.

    ``diag[i]`` is the i-th diagonal block (symmetric, ``block_size`` square),
    ``offdiag[i]`` the subdiagonal block coupling block rows i+1 and i.  The
    implied full matrix has ``offdiag[i].T`` in the corresponding upper
    position.
    """

    block_size: int
    diag: list
    offdiag: list

    def __post_init__(self):
        ell = self.block_size
        if len(self.offdiag) != max(len(self.diag) - 1, 0):
            raise DimensionMismatchError(
                "expected %d off-diagonal blocks, got %d"
                % (len(self.diag) - 1, len(self.offdiag))
            )
        for blk in list(self.diag) + list(self.offdiag):
            if blk.shape != (ell, ell):
                raise DimensionMismatchError(
                    "block of shape %s does not match block size %d"
                    % (blk.shape, ell)
                )

    @property
    def n_blocks(self):
        return len(self.diag)

    @property
    def dim(self):
        return self.block_size * len(self.diag)

    def to_dense(self):
        ell, k = self.block_size, self.dim
        a = np.zeros((k, k))
        for i, blk in enumerate(self.diag):
            a[i * ell:(i + 1) * ell, i * ell:(i + 1) * ell] = blk
        for i, blk in enumerate(self.offdiag):
            a[(i + 1) * ell:(i + 2) * ell, i * ell:(i + 1) * ell] = blk
            a[i * ell:(i + 1) * ell, (i + 1) * ell:(i + 2) * ell] = blk.T
        return a

    @classmethod
    def from_dense(cls, a, block_size):
        a = np.asarray(a, dtype=float)
        k = a.shape[0]
        if a.shape != (k, k) or k % block_size:
            raise DimensionMismatchError(
                "cannot split %s into blocks of size %d" % (a.shape, block_size)
            )
        m = k // block_size
        ell = block_size
        diag = [a[i * ell:(i + 1) * ell, i * ell:(i + 1) * ell].copy()
                for i in range(m)]
        off = [a[(i + 1) * ell:(i + 2) * ell, i * ell:(i + 1) * ell].copy()
               for i in range(m - 1)]
        return cls(ell, diag, off)


@dataclass
class PartialSpectral:
    """Eigenvalues of a block tridiagonal matrix plus the first and last
    ``block_size`` rows of its (orthogonal) eigenvector matrix."""

    eigenvalues: np.ndarray
    first_rows: np.ndarray
    last_rows: np.ndarray


@dataclass
class TruncatedFactor:
    """Tall factor of a truncated low-rank factorization and the Frobenius
    mass of the discarded spectral tail."""

    factor: np.ndarray
    discarded_mass: float

    @property
    def rank(self):
        return self.factor.shape[1]


def economy_qr(w):
    """Economy-size QR with the sign convention diag(R) >= 0.

    The sign normalization makes the factorization unique (for full-rank
    input), which the two-pass basis regeneration relies on.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] < w.shape[1]:
        raise DimensionMismatchError(
            "economy QR needs a tall matrix, got shape %s" % (w.shape,)
        )
    q, r = np.linalg.qr(w)
    signs = np.sign(np.diag(r))
    signs[signs == 0.0] = 1.0
    return q * signs, signs[:, None] * r


def rank_deficient(r, rank_tol=RANK_TOL):
    """Whether an upper triangular QR factor flags a rank-deficient block.

    Uses ``|r_ii| < rank_tol * ||R||_F``; since ``||R||_F = ||W||_F`` the test
    is relative to the factored matrix.  The caller decides how to react.
    """
    ref = np.linalg.norm(r)
    if ref == 0.0:
        return True
    return bool(np.min(np.abs(np.diag(r))) < rank_tol * ref)


def _effective_bandwidth(t):
    """Largest subdiagonal distance carrying a nonzero entry.

    Lanczos produces upper triangular coupling blocks (bandwidth ``ell``);
    generic blocks can fill up to ``2*ell - 1``.
    """
    ell = t.block_size
    dist_diag = np.abs(np.arange(ell)[:, None] - np.arange(ell)[None, :])
    dist_off = ell + np.arange(ell)[:, None] - np.arange(ell)[None, :]
    bw = 1
    for blk in t.diag:
        nz = blk != 0.0
        if nz.any():
            bw = max(bw, int(dist_diag[nz].max()))
    for blk in t.offdiag:
        nz = blk != 0.0
        if nz.any():
            bw = max(bw, int(dist_off[nz].max()))
    return min(bw, max(t.dim - 1, 1))


def band_tridiagonalize(t, full_p=False):
    """Reduce a symmetric block tridiagonal matrix to tridiagonal form.

    Returns ``(d, e, p_first, p_last)`` with ``P^T T P = F = tridiag(e, d, e)``
    for an orthogonal P of which only the first and last ``block_size`` rows
    are accumulated.  Givens rotations chase the band bulge; the row slices
    receive each chase's rotations in one batched update (the planes within a
    chase are disjoint, stride >= 2).

    With ``full_p=True`` the full P is accumulated as a fifth return value,
    intended for validation on small instances only.
    """
    ell = t.block_size
    k = t.dim
    bw = _effective_bandwidth(t)

    if bw == 1 and not full_p:
        d = np.concatenate([np.diag(blk) for blk in t.diag]) if ell > 1 else \
            np.array([blk[0, 0] for blk in t.diag])
        if ell > 1:
            e = np.zeros(k - 1)
            for i, blk in enumerate(t.diag):
                e[i * ell:(i + 1) * ell - 1] = np.diag(blk, -1)
                if i + 1 < t.n_blocks:
                    e[(i + 1) * ell - 1] = t.offdiag[i][0, ell - 1]
        else:
            e = np.array([blk[0, 0] for blk in t.offdiag])
        p_first = np.zeros((ell, k))
        p_first[:, :ell] = np.eye(ell)
        p_last = np.zeros((ell, k))
        p_last[:, k - ell:] = np.eye(ell)
        return d, e, p_first, p_last

    a = t.to_dense()
    slices = np.zeros((2 * ell, k))
    slices[:ell, :ell] = np.eye(ell)
    slices[ell:, k - ell:] = np.eye(ell)
    p_full = np.eye(k) if full_p else None

    for b in range(bw, 1, -1):
        for j in range(k):
            r, c = j + b, j
            if r >= k:
                break
            planes, coss, sins = [], [], []
            while r < k:
                p = r - 1
                piv, tgt = a[p, c], a[r, c]
                if tgt == 0.0:
                    break
                g = np.hypot(piv, tgt)
                cth, sth = piv / g, tgt / g
                rot = np.array([[cth, sth], [-sth, cth]])
                lo, hi = max(0, r - b - 1), min(k, r + b + 1)
                a[p:p + 2, lo:hi] = rot @ a[p:p + 2, lo:hi]
                a[lo:hi, p:p + 2] = a[lo:hi, p:p + 2] @ rot.T
                a[r, c] = 0.0
                a[c, r] = 0.0
                planes.append(p)
                coss.append(cth)
                sins.append(sth)
                c = r - 1
                r += b
            if planes:
                pi = np.asarray(planes)
                cv = np.asarray(coss)
                sv = np.asarray(sins)
                for mat in (slices,) if p_full is None else (slices, p_full):
                    colp = mat[:, pi].copy()
                    colq = mat[:, pi + 1].copy()
                    mat[:, pi] = cv * colp + sv * colq
                    mat[:, pi + 1] = -sv * colp + cv * colq

    d = np.diag(a).copy()
    e = np.diag(a, -1).copy()
    if full_p:
        return d, e, slices[:ell], slices[ell:], p_full
    return d, e, slices[:ell], slices[ell:]


def sym_tridiag_eig(d, e):
    """Full eigendecomposition of a symmetric tridiagonal matrix.

    Returns ascending eigenvalues and an orthogonal eigenvector matrix whose
    columns are sign-fixed (largest-magnitude entry positive) so results are
    deterministic.
    """
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    if e.shape[0] != max(d.shape[0] - 1, 0):
        raise DimensionMismatchError("tridiagonal bands have inconsistent lengths")
    if d.shape[0] == 1:
        return d.copy(), np.ones((1, 1))
    # stemr (MRRR) is the fast path but can fail on the near-machine-identical
    # eigenvalue clusters that long Lanczos runs produce; bisection plus
    # inverse iteration with cluster reorthogonalization is the robust
    # fallback, plain QL the last resort
    lam = g = None
    for driver in ("stemr", "stebz", "stev"):
        try:
            lam, g = scipy.linalg.eigh_tridiagonal(d, e, lapack_driver=driver)
            break
        except np.linalg.LinAlgError:
            continue
    if lam is None:
        raise FactorizationError("tridiagonal eigensolver did not converge")
    piv = np.argmax(np.abs(g), axis=0)
    flip = g[piv, np.arange(g.shape[1])] < 0.0
    g[:, flip] *= -1.0
    return lam, g


def partial_eig_blocktridiag(t):
    """Eigenvalues of a block tridiagonal matrix together with the first and
    last ``block_size`` rows of its eigenvector matrix.

    This is the composition of the banded tridiagonalization and the
    tridiagonal eigensolver: ``first_rows = (E1' P) G`` and
    ``last_rows = (Em' P) G``, never forming the full eigenvector matrix.
    """
    d, e, p_first, p_last = band_tridiagonalize(t)
    lam, g = sym_tridiag_eig(d, e)
    return PartialSpectral(lam, p_first @ g, p_last @ g)


def truncated_spd_factor(y, eps=TRUNC_EPS):
    """Truncated factorization Y ~ F F^T of a symmetric PSD matrix.

    Eigenvalues are kept in non-increasing order and the trailing ones are
    dropped while their Frobenius mass stays below ``eps``.
    """
    y = np.asarray(y, dtype=float)
    lam, w = np.linalg.eigh(y)
    scale = np.max(np.abs(lam)) if lam.size else 0.0
    if lam.size and lam[0] < -1e-10 * scale:
        raise IndefiniteMatrixError(
            "matrix is significantly indefinite (min eigenvalue %.3e)" % lam[0]
        )
    lam = lam[::-1].copy()
    w = w[:, ::-1]
    # largest t with || dropped eigenvalues ||_F <= eps, mass taken on the
    # raw spectrum so roundoff-negative eigenvalues count as discarded
    tail = np.sqrt(np.cumsum(lam[::-1] ** 2))[::-1]
    keep = tail > eps
    rank = int(np.count_nonzero(keep))
    discarded = float(tail[rank]) if rank < lam.size else 0.0
    factor = w[:, :rank] * np.sqrt(np.clip(lam[:rank], 0.0, None))
    return TruncatedFactor(factor, discarded)


def truncated_svd_factor(y, eps=TRUNC_EPS):
    """Truncated factorization Y ~ F1 F2^T of a general matrix via the SVD."""
    y = np.asarray(y, dtype=float)
    u, sig, vt = np.linalg.svd(y, full_matrices=False)
    tail = np.sqrt(np.cumsum(sig[::-1] ** 2))[::-1]
    keep = tail > eps
    rank = int(np.count_nonzero(keep))
    discarded = float(tail[rank]) if rank < sig.size else 0.0
    root = np.sqrt(sig[:rank])
    f1 = u[:, :rank] * root
    f2 = vt[:rank].T * root
    return TruncatedFactor(f1, discarded), TruncatedFactor(f2, discarded)
