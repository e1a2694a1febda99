"""Gaussian kernel, pairwise distances, and quantile bandwidth selection."""

import numpy as np
from scipy.spatial.distance import cdist, pdist


def gaussian_kernel(x, y, h):
    """Gaussian kernel value exp(-||x - y||^2 / h^2).

    Parameters
    ----------
    x, y : array-like, shape (D,)
        Input vectors of equal dimension.
    h : float
        Bandwidth, must be > 0.

    Returns
    -------
    float in (0, 1], with K(x, x) = 1 exactly.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    diff = x - y
    return float(np.exp(-np.dot(diff, diff) / h**2))


def pairwise_distances(X):
    """All n(n-1)/2 Euclidean distances between rows of X, sorted ascending.

    Parameters
    ----------
    X : array-like, shape (n, D), n >= 2

    Returns
    -------
    ndarray, shape (n*(n-1)/2,), ascending.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] < 2:
        raise ValueError(f"need at least 2 points, got {X.shape[0]}")
    d = pdist(X)
    d.sort()
    return d


def quantile_bandwidth(X, q):
    """Bandwidth as the nearest-rank q-quantile of pairwise distances.

    A zero quantile value falls back to the smallest strictly positive
    distance; an all-identical dataset is an error.

    Parameters
    ----------
    X : array-like, shape (n, D), n >= 2
    q : float in (0, 1]

    Returns
    -------
    float > 0
    """
    if not 0 < q <= 1:
        raise ValueError(f"quantile must be in (0, 1], got {q}")
    dists = pairwise_distances(X)
    m = len(dists)
    # guard against float products landing epsilon above an exact integer
    rank = max(1, int(np.ceil(q * m - 1e-9)))
    h = float(dists[rank - 1])
    if h == 0.0:
        positive = dists[dists > 0]
        if positive.size == 0:
            raise ValueError("degenerate dataset: all points identical")
        h = float(positive[0])
    return h


def squared_distances(X, Y):
    """Pairwise squared Euclidean distances, shape (n, m)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    # cdist evaluates each pair elementwise, so identical rows give exactly 0
    # and gram(X, X, h) comes out exactly symmetric with a unit diagonal
    return cdist(X, Y, "sqeuclidean")


def gram(X, Y, h):
    """Gram matrix G[i, j] = exp(-||X_i - Y_j||^2 / h^2).

    Parameters
    ----------
    X : array-like, shape (n, D)
    Y : array-like, shape (m, D)
    h : float > 0

    Returns
    -------
    ndarray, shape (n, m)
    """
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    return np.exp(-squared_distances(X, Y) / h**2)
