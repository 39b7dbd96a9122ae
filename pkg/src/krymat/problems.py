"""Deterministic generators for the benchmark operators.

All operators discretize self-adjoint elliptic operators with zero Dirichlet
conditions on uniform grids with n interior points per direction and
h = 1/(n+1).  Variable coefficients are evaluated at the cell interfaces
(midpoints), which keeps the matrices exactly symmetric and negative
definite.
"""

import numpy as np
import scipy.sparse as sp

FD2D_KINDS = ("fd2d-exp", "fd2d-trig", "laplacian2d")

PROBLEM_KINDS = FD2D_KINDS + ("fd3d-split", "laplacian1d")


def _coefficients(kind):
    if kind == "fd2d-exp":
        return (lambda x, y: np.exp(-x * y)), (lambda x, y: np.exp(x * y))
    if kind == "fd2d-trig":
        return (lambda x, y: np.sin(x * y)), (lambda x, y: np.cos(x * y))
    if kind == "laplacian2d":
        return (lambda x, y: np.ones_like(x)), (lambda x, y: np.ones_like(x))
    raise ValueError("unknown 2-D problem kind %r" % kind)


def gen_fd2d(kind, n):
    """Five-point finite-difference operator for (a u_x)_x + (b u_y)_y on the
    unit square, returned as a sparse symmetric negative definite matrix of
    order n^2 (x varies fastest)."""
    a_fun, b_fun = _coefficients(kind)
    h = 1.0 / (n + 1)
    idx = np.arange(1, n + 1) * h
    x, y = np.meshgrid(idx, idx, indexing="ij")  # x fastest in the flattening
    a_east = a_fun(x + 0.5 * h, y) / h**2
    a_west = a_fun(x - 0.5 * h, y) / h**2
    b_north = b_fun(x, y + 0.5 * h) / h**2
    b_south = b_fun(x, y - 0.5 * h) / h**2

    def flat(v):
        return v.reshape(-1, order="F")

    size = n * n
    diag = -flat(a_east + a_west + b_north + b_south)
    rows = [np.arange(size)]
    cols = [np.arange(size)]
    vals = [diag]
    # east neighbour (i+1, j): a at the shared interface x_{i+1/2}
    east = flat(a_east)[: size - 1].copy()
    east[n - 1:: n] = 0.0  # no coupling across the x boundary
    nz = east != 0.0
    i = np.arange(size - 1)[nz]
    rows += [i, i + 1]
    cols += [i + 1, i]
    vals += [east[nz], east[nz]]
    # north neighbour (i, j+1): b at the shared interface y_{j+1/2}
    north = flat(b_north)[: size - n]
    i = np.arange(size - n)
    rows += [i, i + n]
    cols += [i + n, i]
    vals += [north, north]
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(size, size),
    )
    return mat.tocsr()


def laplacian1d(n):
    """Standard 1-D Dirichlet Laplacian of order n, scaled by 1/h^2."""
    h = 1.0 / (n + 1)
    main = np.full(n, -2.0 / h**2)
    off = np.full(n - 1, 1.0 / h**2)
    return sp.diags([off, main, off], (-1, 0, 1)).tocsr()


def gen_fd3d_split(n):
    """Splitting of the 3-D operator (e^{-xy}u_x)_x + (e^{xy}u_y)_y + 10 u_zz.

    Returns (A, B) with A the 2-D part of order n^2 and B ten times the 1-D
    Laplacian in z, so the discretized problem is the Sylvester equation
    A X + X B = F (z ordered outermost).
    """
    return gen_fd2d("fd2d-exp", n), (10.0 * laplacian1d(n)).tocsr()


def gen_rhs(n, s, seed, normalize=True):
    """Right-hand side block with entries uniform in (0, 1).

    Deterministic for a fixed seed (PCG64); with ``normalize`` the block is
    scaled to unit Frobenius norm.
    """
    rng = np.random.default_rng(seed)
    c = rng.random((n, s))
    if normalize:
        c /= np.linalg.norm(c)
    return c


def gen_operator(kind, n):
    """Build the matrix (or matrix pair) for a named problem kind."""
    if kind in FD2D_KINDS:
        return gen_fd2d(kind, n)
    if kind == "laplacian1d":
        return laplacian1d(n)
    if kind == "fd3d-split":
        return gen_fd3d_split(n)
    raise ValueError("unknown problem kind %r" % kind)
