"""Matrix-free helpers: a counting CSR operator and block power iteration."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import ConvergenceError


class MatvecOperator:
    """Square operator exposed only through ``matvec``.

    Wraps a CSR matrix and routes products through the compiled kernel.
    ``n_matvecs`` counts calls so callers can assert they stayed matrix-free.
    """

    def __init__(self, matrix):
        M = sp.csr_matrix(matrix, dtype=np.float64)
        M.sort_indices()
        self.shape = M.shape
        self._indptr = M.indptr.astype(np.int64)
        self._indices = M.indices.astype(np.int64)
        self._data = M.data
        self.n_matvecs = 0

    @classmethod
    def wrap(cls, op):
        if isinstance(op, MatvecOperator):
            return op
        matrix = getattr(op, "matrix", op)
        return cls(matrix)

    def matvec(self, x):
        self.n_matvecs += 1
        return _kernels.csr_matvec(self._indptr, self._indices, self._data, x)

    def __matmul__(self, x):
        return self.matvec(x)

    def reset(self):
        self.n_matvecs = 0


def _start_block(n, k, seed):
    rng = np.random.default_rng(seed)
    X = np.ones((n, k)) + 0.1 * rng.standard_normal((n, k))
    X[:, 1:] = rng.standard_normal((n, k - 1))
    return np.linalg.qr(X)[0]


def power_iteration(matvec, n, tol=1e-10, max_iters=10_000, seed=0, v0=None, block=4):
    """Dominant eigenvalue magnitude of a symmetric operator.

    Block power (subspace) iteration with Rayleigh-Ritz on ``block`` vectors,
    so nearly tied leading eigenvalues do not stall convergence; ``block=1``
    is the classical power method. Returns ``(estimate, vector)`` once the
    leading Ritz residual ``||A v - theta v||`` is below ``tol * |theta|``.
    """
    k = max(1, min(block, n))
    X = _start_block(n, k, seed)
    if v0 is not None:
        X[:, 0] = np.asarray(v0, float)
        X = np.linalg.qr(X)[0]
    for _ in range(max_iters):
        W = np.column_stack([matvec(X[:, j]) for j in range(k)])
        T = X.T @ W
        theta, S = np.linalg.eigh((T + T.T) / 2)
        top = int(np.argmax(np.abs(theta)))
        v = X @ S[:, top]
        r = W @ S[:, top] - theta[top] * v
        scale = abs(theta[top])
        if scale == 0.0 and not W.any():
            return 0.0, X[:, 0]
        if np.linalg.norm(r) <= tol * max(scale, np.finfo(float).tiny):
            return float(scale), v
        X, R = np.linalg.qr(W)
        # keep the basis full rank when W loses columns (tiny invariant subspaces)
        dead = np.abs(np.diag(R)) <= 1e-14 * max(np.abs(R).max(), np.finfo(float).tiny)
        if dead.any():
            rng = np.random.default_rng(seed + 1)
            X[:, dead] = rng.standard_normal((n, int(dead.sum())))
            X = np.linalg.qr(X)[0]
    raise ConvergenceError(f"power iteration did not converge in {max_iters} iterations")


def spectral_norm(A, tol=1e-10, max_iters=10_000, seed=0):
    """Largest singular value of ``A`` via power iteration on ``A^T A``."""
    A = sp.csr_matrix(A, dtype=np.float64)
    if A.nnz == 0:
        return 0.0
    fwd = MatvecOperator(A)
    bwd = MatvecOperator(A.T)
    sigma2, _ = power_iteration(lambda v: bwd.matvec(fwd.matvec(v)), A.shape[1],
                                tol=tol, max_iters=max_iters, seed=seed)
    return float(np.sqrt(sigma2))
