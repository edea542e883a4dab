"""Weighted (optionally directed) graphs and degree bookkeeping."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import GraphError


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable weighted graph on nodes ``0..n_nodes-1``.

    ``adjacency`` holds A with A[i, j] the weight of edge i -> j. For an
    undirected graph A is symmetric. ``node_ids`` maps each internal index back
    to the identifier used at construction time.
    """

    adjacency: sp.csr_matrix
    directed: bool = False
    node_ids: tuple = field(default=())
    allow_self_loops: bool = False

    def __post_init__(self):
        A = sp.csr_matrix(self.adjacency, dtype=np.float64)
        A.sum_duplicates()
        A.eliminate_zeros()
        A.sort_indices()
        if A.shape[0] != A.shape[1]:
            raise GraphError(f"adjacency must be square, got {A.shape}")
        if A.shape[0] < 1:
            raise GraphError("graph needs at least one node")
        if A.nnz and A.data.min() < 0:
            raise GraphError("negative edge weight")
        if not self.allow_self_loops and A.diagonal().any():
            raise GraphError("self-loop present")
        if not self.directed and abs(A - A.T).sum() > 1e-12 * max(1.0, abs(A).sum()):
            raise GraphError("undirected graph with asymmetric adjacency")
        object.__setattr__(self, "adjacency", A)
        if not self.node_ids:
            object.__setattr__(self, "node_ids", tuple(range(A.shape[0])))
        elif len(self.node_ids) != A.shape[0]:
            raise GraphError("node_ids length does not match adjacency")

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @cached_property
    def graph_id(self) -> str:
        A = self.adjacency
        h = hashlib.sha1()
        for arr in (A.indptr, A.indices, A.data):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update(b"d" if self.directed else b"u")
        return h.hexdigest()[:12]

    def edges(self):
        """Edge list ``[(src, dst, weight)]``; one entry per undirected edge."""
        A = self.adjacency.tocoo()
        keep = (A.row <= A.col) if not self.directed else np.ones(A.nnz, bool)
        return [(int(i), int(j), float(w)) for i, j, w in zip(A.row[keep], A.col[keep], A.data[keep])]

    def dense(self) -> np.ndarray:
        return self.adjacency.toarray()

    def has_edge(self, i, j) -> bool:
        return self.adjacency[i, j] != 0 or self.adjacency[j, i] != 0


@dataclass(frozen=True)
class DegreeVector:
    out_strengths: np.ndarray
    in_strengths: np.ndarray


def build_graph(edge_list, directed=False, n_nodes=None, allow_self_loops=False) -> Graph:
    """Build a graph from ``(src, dst, weight)`` triples.

    Node identifiers are canonicalized to ``0..N-1`` in sorted order; when every
    id is a nonnegative integer and ``n_nodes`` is given, ids are used as-is so
    that isolated trailing nodes survive. Duplicate pairs sum their weights and
    undirected input is symmetrized.
    """
    triples = [(s, d, float(w)) for s, d, w in edge_list]
    for s, d, w in triples:
        if w < 0:
            raise GraphError(f"negative weight {w} on edge ({s}, {d})")
        if s == d and not allow_self_loops:
            raise GraphError(f"self-loop on node {s}")

    ids = {s for s, _, _ in triples} | {d for _, d, _ in triples}
    integer_ids = all(isinstance(i, (int, np.integer)) and i >= 0 for i in ids)
    if integer_ids and (n_nodes is not None or not ids):
        n = int(n_nodes) if n_nodes is not None else 0
        if ids and max(ids) >= n:
            raise GraphError(f"node id {max(ids)} out of range for n_nodes={n}")
        node_ids = tuple(range(n))
        index = {i: i for i in node_ids}
    elif integer_ids:
        n = max(ids) + 1
        node_ids = tuple(range(n))
        index = {i: i for i in node_ids}
    else:
        node_ids = tuple(sorted(ids, key=str))
        index = {v: k for k, v in enumerate(node_ids)}
        n = len(node_ids)
        if n_nodes is not None and n_nodes != n:
            raise GraphError("n_nodes given but ids are not integers 0..N-1")
    if n < 1:
        raise GraphError("graph needs at least one node")

    rows = np.array([index[s] for s, _, _ in triples], dtype=np.int64)
    cols = np.array([index[d] for _, d, _ in triples], dtype=np.int64)
    vals = np.array([w for _, _, w in triples], dtype=np.float64)
    if not directed:
        # (i, j) and (j, i) describe the same undirected edge
        lo, hi = np.minimum(rows, cols), np.maximum(rows, cols)
        off = lo != hi
        rows = np.concatenate([lo, hi[off]])
        cols = np.concatenate([hi, lo[off]])
        vals = np.concatenate([vals, vals[off]])
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return Graph(A, directed=directed, node_ids=node_ids, allow_self_loops=allow_self_loops)


def from_adjacency(A, directed=None, allow_self_loops=False) -> Graph:
    A = sp.csr_matrix(A, dtype=np.float64)
    if directed is None:
        directed = abs(A - A.T).sum() > 0
    return Graph(A, directed=directed, allow_self_loops=allow_self_loops)


def strengths(g: Graph) -> DegreeVector:
    A = g.adjacency
    out = np.asarray(A.sum(axis=1)).ravel()
    inn = np.asarray(A.sum(axis=0)).ravel()
    return DegreeVector(out_strengths=out, in_strengths=inn)


# Small named graphs used throughout tests and examples.

def path_graph(n, weight=1.0) -> Graph:
    return build_graph([(i, i + 1, weight) for i in range(n - 1)], n_nodes=n)


def cycle_graph(n, directed=False, weight=1.0) -> Graph:
    return build_graph([(i, (i + 1) % n, weight) for i in range(n)], directed=directed, n_nodes=n)


def star_graph(n_leaves, weight=1.0) -> Graph:
    return build_graph([(0, i, weight) for i in range(1, n_leaves + 1)], n_nodes=n_leaves + 1)
