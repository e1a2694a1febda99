"""Gaussian-kernel one-class SVM baseline: SMO dual solver and scoring.

Solves min 0.5 a'Qa subject to 0 <= a_i <= 1/(nu*n), sum a = 1 with
maximal-violating-pair two-variable updates. Kernel rows are computed on
demand and kept in a byte-budgeted LRU cache.
"""

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .kernel import gram

SV_EPS = 1e-12  # alpha above this counts as a support vector


@dataclass
class OcsvmModel:
    support_vectors: np.ndarray  # (n_sv, D)
    alpha: np.ndarray  # (n_sv,)
    rho: float
    h: float
    nu: float
    converged: bool = True

    @property
    def n_sv(self):
        return self.support_vectors.shape[0]


class _RowCache:
    """LRU cache of gram-matrix rows bounded by a byte budget."""

    def __init__(self, X, h, budget_bytes):
        self.X = X
        self.h = h
        self.rows = OrderedDict()
        self.max_rows = max(1, int(budget_bytes // (X.shape[0] * 8)))
        self.evals = 0

    def row(self, i):
        if i in self.rows:
            self.rows.move_to_end(i)
            return self.rows[i]
        r = gram(self.X[i : i + 1], self.X, self.h)[0]
        self.evals += self.X.shape[0]
        self.rows[i] = r
        if len(self.rows) > self.max_rows:
            self.rows.popitem(last=False)
        return r


def _initial_alpha(n, C, rng):
    """Feasible start: a random floor(1/C) subset at the box bound."""
    alpha = np.zeros(n)
    full = int(np.floor(1.0 / C + 1e-12))
    order = rng.permutation(n)
    alpha[order[:full]] = C
    remainder = 1.0 - full * C
    if remainder > 1e-15 and full < n:
        alpha[order[full]] = remainder
    return alpha


def train_ocsvm(X, h, nu=0.5, tol=1e-3, max_kernel_evals=10_000_000, seed=None,
                cache_bytes=512 * 2**20):
    """Train a nu-OCSVM by sequential minimal optimization.

    Parameters
    ----------
    X : array-like, shape (n, D), n >= 2
    h : float
        Gaussian kernel bandwidth.
    nu : float in (0, 1]
        Upper bound on the flagged-training fraction, lower bound on the
        support-vector fraction.
    tol : float
        Stop when the maximal violating-pair gap drops below tol.
    max_kernel_evals : int
        Kernel-evaluation budget (a cache-miss row costs n); exceeded budget
        returns the best iterate with converged=False.
    seed : int or None
        Seeds the initial feasible point.

    Returns
    -------
    OcsvmModel holding only the support vectors (alpha > 1e-12).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 training points, got {n}")
    if not 0 < nu <= 1:
        raise ValueError(f"nu must be in (0, 1], got {nu}")
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")

    C = 1.0 / (nu * n)
    rng = np.random.default_rng(seed)
    alpha = _initial_alpha(n, C, rng)
    cache = _RowCache(X, h, cache_bytes)

    # grad = Q alpha, built once from the initially active rows; any feasible
    # start has >= nu*n nonzero alphas, so this build is mandatory work and
    # the eval budget only meters the optimization loop after it
    grad = np.zeros(n)
    for i in np.flatnonzero(alpha > 0):
        grad += alpha[i] * cache.row(i)
    cache.evals = 0

    converged = False
    max_sweeps = 200 * n  # float-stall safety net on top of the eval budget
    for _ in range(max_sweeps):
        up = alpha < C
        down = alpha > 0
        if not up.any() or not down.any():
            converged = True  # box fully saturated (nu = 1)
            break
        i = int(np.flatnonzero(up)[np.argmin(grad[up])])
        j = int(np.flatnonzero(down)[np.argmax(grad[down])])
        gap = grad[j] - grad[i]
        if gap <= tol:
            converged = True
            break
        if cache.evals >= max_kernel_evals:
            break
        qi = cache.row(i)
        qj = cache.row(j)
        eta = qi[i] + qj[j] - 2.0 * qi[j]
        room_i = C - alpha[i]
        room_j = alpha[j]
        delta = min(room_i, room_j) if eta <= 1e-15 else min(gap / eta, room_i, room_j)
        if delta <= 0:
            break
        alpha[i] = C if delta == room_i else alpha[i] + delta
        alpha[j] = 0.0 if delta == room_j else alpha[j] - delta
        grad += delta * (qi - qj)

    rho = _offset(grad, alpha, C)
    sv = alpha > SV_EPS
    return OcsvmModel(
        support_vectors=np.array(X[sv]),
        alpha=alpha[sv].copy(),
        rho=rho,
        h=float(h),
        nu=float(nu),
        converged=converged,
    )


def _offset(grad, alpha, C):
    """Decision offset rho from the KKT conditions.

    Mean of f(x_i) over unbounded support vectors; midpoint of the feasible
    KKT interval when none exist.
    """
    free = (alpha > SV_EPS) & (alpha < C * (1 - 1e-9))
    if free.any():
        return float(np.mean(grad[free]))
    at_upper = alpha >= C * (1 - 1e-9)
    at_zero = alpha <= SV_EPS
    lo = np.max(grad[at_upper]) if at_upper.any() else None
    hi = np.min(grad[at_zero]) if at_zero.any() else None
    if lo is not None and hi is not None:
        return float((lo + hi) / 2)
    return float(lo if lo is not None else hi)


def score(model, x):
    """Decision score f(x) - rho; novel iff negative at the default threshold.

    Accepts a single D-vector (returns float) or an (n, D) batch
    (returns (n,) array).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    Xq = np.atleast_2d(x)
    if Xq.shape[1] != model.support_vectors.shape[1]:
        raise ValueError(
            f"dimension mismatch: {Xq.shape[1]} != {model.support_vectors.shape[1]}"
        )
    vals = gram(Xq, model.support_vectors, model.h) @ model.alpha - model.rho
    return float(vals[0]) if single else vals


def ocsvm_bytes(model):
    """Exact serialized size: 13-byte header + 8*(n_sv*(D+1) + 2) floats."""
    n_sv, D = model.support_vectors.shape
    return 13 + 8 * (n_sv * (D + 1) + 2)
