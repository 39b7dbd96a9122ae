"""Residual norms from projected data alone.

The Frobenius norm of the residual matrix is evaluated at O(k^2) cost from
the partial eigendecomposition of the projected block tridiagonal matrix,
without solving the reduced equation.  Writing T = Q diag(lam) Q^T and
splitting the reduced solution along eigencomponents, each row of the
relevant product picks up a diagonal scaling 1/(lam_i + lam_j), applied as
an elementwise division, never a matrix inverse.

For the Lyapunov equation the norm is

    ||R||^2 = 2 * sum_i || e_i^T S D_i^{-1} W ||^2,
    S = (Q^T E1 g)(g^T E1^T Q),  W = (Q^T Em) tau^T,  D_i = lam_i I + Lam,

which needs only the first and last block row of Q.  The Sylvester variants
replace S by the mixed product of the two eigenbases and sum one term per
side (no factor 2); the one-sided variant runs over the eigenvalues of the
small coefficient matrix instead.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import guarded_denominators, partial_eig_blocktridiag


@dataclass
class ResidualValue:
    """Absolute residual norm and its normalized value.

    For Lyapunov problems the normalization is beta^2 = ||C||_F^2; Sylvester
    problems use ||C1||_F * ||C2||_F.
    """

    res: float
    relative: float


def ctri_lyapunov(t, gamma, tau_next, rhs_norm=None):
    """Lyapunov residual norm from the projected matrix, sqrt(2)||Y Em tau^T||_F,
    without forming Y.

    ``gamma`` is the coefficient of C in the first basis block; ``tau_next``
    the coupling block to the next basis block (its nonzero upper part is
    enough in extended mode).  ``rhs_norm`` overrides the normalization
    beta^2, which defaults to ||gamma||_F^2 = ||C||_F^2.
    """
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    tau = np.atleast_2d(np.asarray(tau_next, dtype=float))
    spectral = partial_eig_blocktridiag(t)
    lam = spectral.eigenvalues
    denom = guarded_denominators(lam, lam)
    u = spectral.first_rows.T @ gamma
    w = spectral.last_rows.T @ tau.T
    m = ((u @ u.T) / denom) @ w
    res = float(np.sqrt(2.0) * np.linalg.norm(m))
    beta2 = float(rhs_norm) if rhs_norm is not None else float(np.sum(gamma * gamma))
    return ResidualValue(res, res / beta2)


def ctri_sylvester(t, j, gamma1, gamma2, tau_next, iota_next, rhs_norm=None):
    """Two-sided Sylvester residual norm from the two projected matrices.

    Evaluates ||R||^2 = ||tau Em^T Y||^2 + ||Y Em iota^T||^2 through the
    eigenbases of T and J without forming Y.
    """
    gamma1 = np.atleast_2d(np.asarray(gamma1, dtype=float))
    gamma2 = np.atleast_2d(np.asarray(gamma2, dtype=float))
    tau = np.atleast_2d(np.asarray(tau_next, dtype=float))
    iota = np.atleast_2d(np.asarray(iota_next, dtype=float))
    spectral_t = partial_eig_blocktridiag(t)
    spectral_j = partial_eig_blocktridiag(j)
    lam, ups = spectral_t.eigenvalues, spectral_j.eigenvalues
    denom = guarded_denominators(lam, ups)
    u = spectral_t.first_rows.T @ gamma1
    v = spectral_j.first_rows.T @ gamma2
    f = spectral_t.last_rows.T @ tau.T
    g = spectral_j.last_rows.T @ iota.T
    sd = (u @ v.T) / denom
    res = float(np.sqrt(np.linalg.norm(sd.T @ f) ** 2 + np.linalg.norm(sd @ g) ** 2))
    if rhs_norm is None:
        rhs_norm = np.linalg.norm(gamma1) * np.linalg.norm(gamma2)
    return ResidualValue(res, res / float(rhs_norm))


def residual_one_sided(t, tau_next, s_input, upsilon, rhs_norm=None):
    """One-sided Sylvester residual norm ||tau Em^T Y||_F for small B.

    ``s_input`` is P^T C2 g1^T (eigenvectors of B against the right-hand
    side) and ``upsilon`` the eigenvalues of B, both computed once per solve.
    """
    tau = np.atleast_2d(np.asarray(tau_next, dtype=float))
    s_input = np.asarray(s_input, dtype=float)
    upsilon = np.asarray(upsilon, dtype=float)
    spectral = partial_eig_blocktridiag(t)
    lam = spectral.eigenvalues
    denom = guarded_denominators(upsilon, lam)
    s = s_input @ spectral.first_rows
    w = spectral.last_rows.T @ tau.T
    m = (s / denom) @ w
    res = float(np.linalg.norm(m))
    relative = res / float(rhs_norm) if rhs_norm is not None else res
    return ResidualValue(res, relative)
