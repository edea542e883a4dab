"""Eigendecomposition of reference operators, the graph Fourier transform, and variation functionals."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .errors import DefectiveOperatorError, GSPError, UnsupportedOperatorError
from .operators import Kind, ReferenceOperator

DEFAULT_MAX_DENSE_N = 5000


def max_dense_n() -> int:
    return int(os.environ.get("GSP_MAX_DENSE_N", DEFAULT_MAX_DENSE_N))


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Eigenpairs of a reference operator, stored in frequency order.

    Column ``U[:, k]`` is the right eigenvector for ``eigenvalues[k]``; row
    ``V[k]`` is the matching left eigenvector, so ``V @ U = I``. ``order`` is
    the permutation that took the solver's raw output into this order.
    """

    eigenvalues: np.ndarray
    U: np.ndarray
    V: np.ndarray
    frequencies: np.ndarray
    order: np.ndarray
    eigenspaces: tuple
    symmetric: bool
    convention: str
    group_tol: float
    operator: ReferenceOperator | None = None

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def basis_id(self) -> str:
        if self.operator is None:
            return "basis"
        return f"{self.operator.graph_id}:{self.operator.kind.value}"

    @property
    def lambda_max(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def distinct_eigenvalues(self) -> np.ndarray:
        return np.array([self.eigenvalues[list(idx)].mean() for idx in self.eigenspaces])

    def projector(self, group: int) -> np.ndarray:
        """Spectral projector onto eigenspace ``group`` (sum of u_k v_k^T)."""
        idx = np.asarray(self.eigenspaces[group])
        P = self.U[:, idx] @ self.V[idx, :]
        return P.real if self.symmetric else P


def _frequencies(lam, convention):
    if not np.iscomplexobj(lam):
        return lam.astype(float)
    if convention == "modulus":
        return np.abs(lam)
    if convention == "real_part":
        return lam.real.copy()
    raise ValueError(f"unknown frequency convention {convention!r}")


def _fix_signs(U):
    # largest-magnitude entry of each column made positive real; near-ties go to the lowest index
    idx = np.argmax(np.abs(U) - 1e-12 * np.arange(U.shape[0])[:, None], axis=0)
    pivots = U[idx, np.arange(U.shape[1])]
    phase = pivots / np.abs(pivots)
    return U / phase[None, :]


def _group(lam, tol):
    groups, current = [], [0]
    for k in range(1, len(lam)):
        if abs(lam[k] - lam[current[-1]]) <= tol:
            current.append(k)
        else:
            groups.append(tuple(current))
            current = [k]
    groups.append(tuple(current))
    return tuple(groups)


def decompose(op: ReferenceOperator, convention="modulus", cond_max=1e10, group_rtol=1e-8) -> SpectralBasis:
    """Dense eigendecomposition of ``op`` sorted by (frequency, Im lambda, index)."""
    n = op.n
    if n > max_dense_n():
        raise GSPError(f"N={n} exceeds the dense eigendecomposition ceiling {max_dense_n()} "
                       "(set GSP_MAX_DENSE_N to override)")
    R = op.dense()
    if op.symmetric:
        lam, U = la.eigh(R)
        V = None
    else:
        lam, U = la.eig(R)
        if np.allclose(lam.imag, 0, atol=1e-12 * max(1.0, np.abs(lam).max())) and np.allclose(U.imag, 0):
            lam, U = lam.real, U.real
        U = U / np.linalg.norm(U, axis=0)[None, :]
        cond = np.linalg.cond(U)
        if not np.isfinite(cond) or cond > cond_max:
            raise DefectiveOperatorError(
                f"near-defective operator: eigenvector matrix condition number {cond:.3e} > {cond_max:.1e}")

    nu = _frequencies(lam, convention)
    imag = lam.imag if np.iscomplexobj(lam) else np.zeros(n)
    order = np.lexsort((np.arange(n), imag, nu))
    lam, U, nu = lam[order], U[:, order], nu[order]
    U = _fix_signs(U)
    if op.symmetric:
        U = U.real
        V = U.T.copy()
    else:
        V = np.linalg.inv(U)
        if not np.iscomplexobj(lam):
            U, V = U.real, V.real

    scale = float(np.max(np.abs(lam))) if n else 0.0
    tol = group_rtol * scale if scale > 0 else 1e-12
    return SpectralBasis(eigenvalues=lam, U=U, V=V, frequencies=nu, order=order,
                         eigenspaces=_group(lam, tol), symmetric=op.symmetric,
                         convention=convention, group_tol=tol, operator=op)


def _check_signal(basis, x):
    x = np.asarray(x)
    if x.shape[0] != basis.n:
        raise ValueError(f"signal length {x.shape[0]} does not match graph size {basis.n}")
    return x


def gft(basis: SpectralBasis, x) -> np.ndarray:
    """Fourier coefficients ``V @ x`` (projections on the left eigenvectors)."""
    x = _check_signal(basis, x)
    return basis.V @ x


def inverse_gft(basis: SpectralBasis, xhat) -> np.ndarray:
    xhat = np.asarray(xhat)
    if xhat.shape[0] != basis.n:
        raise ValueError(f"coefficient length {xhat.shape[0]} does not match graph size {basis.n}")
    x = basis.U @ xhat
    if np.iscomplexobj(x) and np.allclose(x.imag, 0, atol=1e-12 * max(1.0, np.abs(x).max())):
        return x.real
    return x


def frequency_analysis(basis: SpectralBasis, x):
    """``[(frequency, coefficient)]`` in nondecreasing frequency."""
    xhat = gft(basis, x)
    return list(zip(basis.frequencies.tolist(), xhat.tolist()))


def _edge_sum(op: ReferenceOperator, x):
    g = op.graph
    if g is None:
        raise UnsupportedOperatorError("edge-sum form needs the operator's graph")
    if op.kind in (Kind.L, Kind.Ln):
        if g.directed:
            raise UnsupportedOperatorError(f"{op.kind.value} on a directed graph has no Dirichlet form; "
                                           "use Q or Qn")
        W = g.adjacency.tocoo()
        if op.kind is Kind.Ln:
            d = np.asarray(g.adjacency.sum(axis=1)).ravel()
            y = x / np.sqrt(d)
        else:
            y = x
        return 0.5 * float(np.sum(W.data * (y[W.row] - y[W.col]) ** 2))
    # Q, Qn: 1/2 sum_ij pi_i P_ij (y_i - y_j)^2
    P = sp.coo_matrix(op.info["transition"])
    pi = op.pi
    y = x / np.sqrt(pi) if op.kind is Kind.Qn else x
    return 0.5 * float(np.sum(pi[P.row] * P.data * (y[P.row] - y[P.col]) ** 2))


def dirichlet_form(op: ReferenceOperator, x, rtol=1e-9) -> float:
    """Quadratic variation x^T R x for R in {L, Ln, Q, Qn}.

    Computed twice, as the quadratic form and as the weighted sum of squared
    edge differences; a mismatch beyond ``rtol`` raises.
    """
    if op.kind not in (Kind.L, Kind.Ln, Kind.Q, Kind.Qn):
        raise UnsupportedOperatorError(
            f"no Dirichlet form for kind {op.kind.value}; use total_variation for Ld")
    x = np.asarray(x, dtype=float)
    quad = float(x @ (op.matrix @ x))
    edges = _edge_sum(op, x)
    scale = max(abs(quad), abs(edges), 1e-300)
    floor = 1e-14 * float(abs(op.matrix).sum()) * float(x @ x)
    if abs(quad - edges) > rtol * scale + floor:
        raise GSPError(f"Dirichlet form cross-check failed: quadratic={quad!r} edge-sum={edges!r}")
    return quad


def total_variation(op: ReferenceOperator, x) -> float:
    """||L_d x||_2, the distance between a signal and its shifted version."""
    if op.kind is not Kind.Ld:
        raise UnsupportedOperatorError(f"total_variation requires kind Ld, got {op.kind.value}")
    x = np.asarray(x)
    return float(np.linalg.norm(op.matrix @ x))
