"""Chebyshev-Lobatto helpers shared by the collocation solver."""

import numpy as np


def lobatto_nodes(p):
    """Chebyshev-Lobatto points on [-1, 1] in increasing order."""
    return -np.cos(np.pi * np.arange(p + 1) / p)


def diff_matrix(x):
    """First-derivative matrix for polynomial interpolation on nodes ``x``.

    Uses barycentric weights of the Lobatto family and the negative-sum
    trick for the diagonal, which keeps rows summing to zero exactly.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    w = bary_weights(n - 1)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def bary_weights(p):
    w = (-1.0) ** np.arange(p + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def bary_interp(xn, fn, x, w=None):
    """Barycentric interpolation; exact at the nodes."""
    xn = np.asarray(xn, dtype=float)
    fn = np.asarray(fn)
    if w is None:
        w = bary_weights(len(xn) - 1)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape, dtype=fn.dtype)
    diff = x[:, None] - xn[None, :]
    exact = diff == 0.0
    hit = exact.any(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = w[None, :] / diff
        out[:] = (c @ fn) / c.sum(axis=1)
    if hit.any():
        rows, cols = np.nonzero(exact)
        out[rows] = fn[cols]
    return out
