"""Reference operators: the Laplacian family, random walks, and Chung's directed Laplacians."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import GraphError, IsolatedNodeError, NonErgodicError, UnsupportedOperatorError
from .graph import Graph, strengths
from .linalg import spectral_norm

logger = logging.getLogger(__name__)


class Kind(str, enum.Enum):
    L = "L"
    Ln = "Ln"
    Lrw = "Lrw"
    Ld = "Ld"
    Q = "Q"
    Qn = "Qn"
    Qrw = "Qrw"
    Qd = "Qd"
    P = "P"
    custom = "custom"


Q_FAMILY = frozenset({Kind.Q, Kind.Qn, Kind.Qrw, Kind.Qd})


@dataclass(frozen=True)
class OperatorOptions:
    """Construction knobs.

    isolated_policy: ``"reject"`` raises on zero-strength nodes under
        normalizations; ``"zero"`` treats their inverse strengths as 0.
    teleport: mix the walk with the uniform jump before computing pi.
    pi_mode: ``"probability"`` or ``"degree_measure"`` (undirected only).
    """

    isolated_policy: str = "reject"
    teleport: bool = False
    teleport_eps: float = 1e-2
    pi_mode: str = "probability"
    norm_tol: float = 1e-10
    norm_max_iters: int = 10_000
    seed: int = 0


@dataclass(frozen=True, eq=False)
class ReferenceOperator:
    kind: Kind
    matrix: sp.csr_matrix
    symmetric: bool
    graph_id: str
    graph: Graph | None = None
    pi: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class StationaryDistribution:
    pi: np.ndarray
    normalized: bool
    residual: float


def _safe_inverse(d, power, kind, policy):
    zero = d <= 0
    if zero.any():
        if policy != "zero":
            idx = np.flatnonzero(zero)[:5].tolist()
            raise IsolatedNodeError(
                f"{kind}: nodes {idx} have zero strength; pass isolated_policy='zero' to allow")
    out = np.zeros_like(d, dtype=float)
    out[~zero] = d[~zero] ** (-power)
    return out


def _transition(g: Graph, opts: OperatorOptions, kind="P"):
    """Row-stochastic P = D_out^{-1} A, optionally teleported."""
    A = g.adjacency
    dout = strengths(g).out_strengths
    n = g.n_nodes
    if opts.teleport:
        eps = opts.teleport_eps
        if not 0 < eps < 1:
            raise ValueError(f"teleport_eps must lie in (0, 1), got {eps}")
        inv = _safe_inverse(dout, 1.0, kind, "zero")
        P = (sp.diags(inv) @ A).toarray()
        P[dout <= 0] = 1.0 / n  # dangling rows jump uniformly
        P = (1 - eps) * P + eps / n
        return sp.csr_matrix(P)
    inv = _safe_inverse(dout, 1.0, kind, opts.isolated_policy)
    return sp.csr_matrix(sp.diags(inv) @ A)


def stationary_distribution(g: Graph, mode="probability", opts: OperatorOptions | None = None):
    """Stationary measure of the random walk on ``g``.

    ``degree_measure`` returns pi_i = d_i exactly (undirected graphs only).
    ``probability`` solves pi^T P = pi^T with sum(pi) = 1; the walk must be
    irreducible unless ``opts.teleport`` is set.
    """
    opts = opts or OperatorOptions()
    d = strengths(g).out_strengths
    if mode == "degree_measure":
        if g.directed:
            raise GraphError("degree_measure is only valid for undirected graphs")
        return StationaryDistribution(pi=d.copy(), normalized=False, residual=0.0)
    if mode != "probability":
        raise ValueError(f"unknown mode {mode!r}")

    if not g.directed and not opts.teleport:
        if (d <= 0).any():
            raise NonErgodicError("walk is not ergodic: isolated node present")
        ncomp, _ = connected_components(g.adjacency, directed=False)
        if ncomp > 1:
            raise NonErgodicError(f"walk is not ergodic: {ncomp} connected components")
        pi = d / d.sum()
        P = _transition(g, opts)
    else:
        if not opts.teleport:
            ncomp, _ = connected_components(g.adjacency, directed=True, connection="strong")
            if ncomp > 1:
                raise NonErgodicError(
                    f"walk is not ergodic: {ncomp} strongly connected components; enable teleport")
        P = _transition(g, replace(opts, isolated_policy="reject"))
        pi = _solve_stationary(P)
    residual = float(np.abs(P.T @ pi - pi).sum())
    if residual >= 1e-12 * np.abs(pi).sum():
        raise NonErgodicError(f"stationary solve residual {residual:.3e} too large; walk is not ergodic")
    if (pi <= 0).any():
        raise NonErgodicError("stationary distribution has non-positive entries")
    return StationaryDistribution(pi=pi, normalized=True, residual=residual)


def _solve_stationary(P, refine_iters=50):
    n = P.shape[0]
    # (P^T - I) pi = 0 with the last row replaced by sum(pi) = 1
    M = (P.T - sp.identity(n, format="csr")).tolil()
    M[n - 1, :] = np.ones(n)
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = spla.spsolve(M.tocsc(), rhs)
    pi = np.real_if_close(pi).astype(float)
    # a few lazy-walk sweeps polish rounding without changing the fixed point
    PT = sp.csr_matrix(P.T)
    for _ in range(refine_iters):
        nxt = 0.5 * (pi + PT @ pi)
        nxt /= nxt.sum()
        if np.abs(PT @ nxt - nxt).sum() < 1e-15:
            pi = nxt
            break
        pi = nxt
    return pi


def reference_operator(g: Graph, kind, opts: OperatorOptions | None = None) -> ReferenceOperator:
    """Build one of the reference operators on ``g``.

    Undirected: L = D - A, Ln = I - D^-1/2 A D^-1/2, Lrw = I - D^-1 A,
    Ld = I - A^T/||A||_2, P = D^-1 A. Directed graphs use D_in for L
    (L = D_in - A^T) and D_out for Ln, Lrw and P. The Q family is built from
    P and its stationary distribution.
    """
    opts = opts or OperatorOptions()
    kind = Kind(kind)
    n = g.n_nodes
    A = g.adjacency
    I = sp.identity(n, format="csr")
    deg = strengths(g)
    info: dict = {}
    pi = None

    if kind is Kind.L:
        if g.directed:
            M = sp.diags(deg.in_strengths) - A.T
        else:
            M = sp.diags(deg.out_strengths) - A
    elif kind is Kind.Ln:
        s = sp.diags(_safe_inverse(deg.out_strengths, 0.5, kind.value, opts.isolated_policy))
        M = I - s @ A @ s
    elif kind is Kind.Lrw:
        s = sp.diags(_safe_inverse(deg.out_strengths, 1.0, kind.value, opts.isolated_policy))
        M = I - s @ A
    elif kind is Kind.Ld:
        nrm = spectral_norm(A, tol=opts.norm_tol, max_iters=opts.norm_max_iters, seed=opts.seed)
        info["adjacency_norm"] = nrm
        M = I - (A.T / nrm if nrm > 0 else 0 * A)
    elif kind is Kind.P:
        M = _transition(g, opts)
        info["teleport"] = opts.teleport
    elif kind in Q_FAMILY:
        dist = stationary_distribution(g, opts.pi_mode, opts)
        P = _transition(g, opts)
        pi = dist.pi
        info["pi_mode"] = opts.pi_mode
        info["teleport"] = opts.teleport
        info["transition"] = P
        Pi = sp.diags(pi)
        if kind is Kind.Q:
            M = Pi - (Pi @ P + P.T @ Pi) / 2
        elif kind is Kind.Qn:
            sq, isq = sp.diags(np.sqrt(pi)), sp.diags(1 / np.sqrt(pi))
            M = I - (sq @ P @ isq + isq @ P.T @ sq) / 2
        elif kind is Kind.Qrw:
            M = I - (P + sp.diags(1 / pi) @ P.T @ Pi) / 2
        else:
            S = Pi @ P + P.T @ Pi
            nrm = spectral_norm(S, tol=opts.norm_tol, max_iters=opts.norm_max_iters, seed=opts.seed)
            info["adjacency_norm"] = nrm
            M = I - S / nrm
    else:
        raise UnsupportedOperatorError("use custom_operator() for custom matrices")

    M = sp.csr_matrix(M, dtype=np.float64)
    M.eliminate_zeros()
    M.sort_indices()
    symmetric = abs(M - M.T).sum() <= 1e-14 * max(1.0, abs(M).sum())
    if symmetric:
        M = sp.csr_matrix((M + M.T) / 2)
    return ReferenceOperator(kind=kind, matrix=M, symmetric=bool(symmetric),
                             graph_id=g.graph_id, graph=g, pi=pi, info=info)


def custom_operator(matrix, graph: Graph | None = None, label="custom") -> ReferenceOperator:
    M = sp.csr_matrix(matrix, dtype=np.float64)
    symmetric = abs(M - M.T).sum() <= 1e-14 * max(1.0, abs(M).sum())
    return ReferenceOperator(kind=Kind.custom, matrix=M, symmetric=bool(symmetric),
                             graph_id=graph.graph_id if graph is not None else label,
                             graph=graph, info={"label": label})
