"""Multiscale transforms: samplers, the bipartite two-channel bank, generalized Haar, Kron reduction, cascades."""

from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .errors import GraphError, NotBipartiteError, PartitionError, GSPError
from .filters import apply_exact, filter_matrix
from .graph import Graph
from .operators import Kind, reference_operator
from .responses import FilterResponse
from .spectral import decompose


# ---------------------------------------------------------------------------
# Two-set partitions and the sampler J

@dataclass(frozen=True)
class NodePartition2:
    V0: tuple
    V1: tuple

    def __post_init__(self):
        v0, v1 = tuple(sorted(int(i) for i in self.V0)), tuple(sorted(int(i) for i in self.V1))
        if set(v0) & set(v1):
            raise PartitionError("V0 and V1 overlap")
        cover = sorted(v0 + v1)
        if cover != list(range(len(cover))):
            raise PartitionError("V0 and V1 must cover nodes 0..N-1")
        object.__setattr__(self, "V0", v0)
        object.__setattr__(self, "V1", v1)

    @property
    def n(self) -> int:
        return len(self.V0) + len(self.V1)

    def indicator(self, which=0) -> np.ndarray:
        out = np.zeros(self.n)
        out[list(self.V0 if which == 0 else self.V1)] = 1.0
        return out

    def is_bipartition_of(self, g: Graph) -> bool:
        A = g.adjacency
        v0, v1 = list(self.V0), list(self.V1)
        return A[v0][:, v0].nnz == 0 and A[v1][:, v1].nnz == 0

    def to_dict(self):
        return {"type": "bipartition", "V0": list(self.V0), "V1": list(self.V1)}


@dataclass(frozen=True)
class SamplerJ:
    partition: NodePartition2

    @property
    def J(self) -> np.ndarray:
        return np.diag(self.partition.indicator(0) - self.partition.indicator(1))

    def down(self, x, which=0):
        return np.asarray(x)[list(self.partition.V0 if which == 0 else self.partition.V1)]

    def up(self, y, which=0):
        out = np.zeros(self.partition.n, dtype=np.result_type(np.asarray(y), float))
        out[list(self.partition.V0 if which == 0 else self.partition.V1)] = y
        return out


@dataclass(frozen=True)
class OddCycle:
    """Certificate that a graph is not bipartite."""

    cycle: tuple


def _canonical_cycle(cycle):
    k = int(np.argmin(cycle))
    c = cycle[k:] + cycle[:k]
    if len(c) > 2 and c[-1] < c[1]:
        c = (c[0],) + tuple(reversed(c[1:]))
    return tuple(int(v) for v in c)


def bipartition_check(g: Graph):
    """BFS 2-coloring. Returns a NodePartition2, or an OddCycle when none exists."""
    if g.directed:
        raise GraphError("bipartition_check expects an undirected graph")
    A = g.adjacency
    n = g.n_nodes
    color = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    for root in range(n):
        if color[root] >= 0:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in A.indices[A.indptr[u]:A.indptr[u + 1]]:
                if color[v] < 0:
                    color[v] = 1 - color[u]
                    parent[v] = u
                    depth[v] = depth[u] + 1
                    queue.append(v)
                elif color[v] == color[u]:
                    # climb both BFS branches to their common ancestor
                    a, b = [u], [v]
                    while a[-1] != b[-1]:
                        if depth[a[-1]] >= depth[b[-1]]:
                            a.append(int(parent[a[-1]]))
                        else:
                            b.append(int(parent[b[-1]]))
                    cycle = tuple(a) + tuple(reversed(b[:-1]))
                    return OddCycle(_canonical_cycle(cycle))
    return NodePartition2(tuple(np.flatnonzero(color == 0)), tuple(np.flatnonzero(color == 1)))


def _require_bipartition(g: Graph, partition: NodePartition2 | None = None):
    if partition is None:
        res = bipartition_check(g)
        if isinstance(res, OddCycle):
            raise NotBipartiteError(f"graph is not bipartite (odd cycle {res.cycle})")
        return res
    if partition.n != g.n_nodes:
        raise PartitionError(f"partition covers {partition.n} nodes, graph has {g.n_nodes}")
    if not partition.is_bipartition_of(g):
        raise NotBipartiteError("partition has an edge inside V0 or V1")
    return partition


def _matching_group(basis, value, tol):
    lam = basis.distinct_eigenvalues()
    k = int(np.argmin(np.abs(lam - value)))
    return k if abs(lam[k] - value) <= tol else None


def spectral_folding_residual(basis, partition: NodePartition2 | None = None) -> float:
    """max over distinct lambda of ||Pr_lambda J - J Pr_{2-lambda}||_F for L_n of a bipartite graph."""
    op = basis.operator
    if op is None or op.kind is not Kind.Ln:
        raise GSPError("spectral folding is a property of the normalized Laplacian Ln")
    partition = _require_bipartition(op.graph, partition)
    J = SamplerJ(partition).J
    tol = max(1e3 * basis.group_tol, 1e-8)
    worst = 0.0
    for k, lam in enumerate(basis.distinct_eigenvalues()):
        Pk = basis.projector(k)
        m = _matching_group(basis, 2 - lam, tol)
        Pm = basis.projector(m) if m is not None else np.zeros_like(Pk)
        worst = max(worst, float(np.linalg.norm(Pk @ J - J @ Pm)))
    return worst


# ---------------------------------------------------------------------------
# Two-channel bank

@dataclass(frozen=True)
class TwoChannelBank:
    h0: FilterResponse
    h1: FilterResponse
    g0: FilterResponse
    g1: FilterResponse
    partition: NodePartition2 | None = None
    basis_id: str = ""

    def pr_residuals(self, basis, partition: NodePartition2 | None = None):
        """Frobenius norms of G0H0 + G1H1 - 2I and G0JH0 - G1JH1."""
        basis, partition = _bank_inputs(basis, self, partition)
        J = SamplerJ(partition).J
        H0, H1, G0, G1 = (filter_matrix(basis, f).H for f in (self.h0, self.h1, self.g0, self.g1))
        pr = float(np.linalg.norm(G0 @ H0 + G1 @ H1 - 2 * np.eye(basis.n)))
        alias = float(np.linalg.norm(G0 @ J @ H0 - G1 @ J @ H1))
        return pr, alias

    def certify(self, basis, partition: NodePartition2 | None = None, tol=1e-8) -> bool:
        pr, alias = self.pr_residuals(basis, partition)
        return pr < tol and alias < tol


def design_qmf_bank(partition: NodePartition2 | None = None, basis_id="") -> TwoChannelBank:
    """h0 = sqrt(2 - lam), h1 = sqrt(lam), synthesis equal to analysis, on [0, 2]."""
    low = FilterResponse.named("qmf_low", domain=(0.0, 2.0))
    high = FilterResponse.named("qmf_high", domain=(0.0, 2.0))
    return TwoChannelBank(low, high, low, high, partition, basis_id)


def folded_basis(basis, tol=1e-9, zero_tol=1e-12):
    """Copy of a bipartite L_n basis whose eigenvalues are paired exactly as (lam, 2 - lam).

    The square-root QMF kernels turn an eigenvalue error of 1e-16 near 0 or 2
    into a response error of 1e-8. On bipartite graphs the spectrum is
    symmetric about 1 and the null space is known, so the computed
    eigenvalues are averaged with their mirror images and rounding-level
    values near 0 are set to 0. Bases without a symmetric spectrum are returned unchanged.
    """
    lam = np.real(basis.eigenvalues)
    mirror = 2.0 - lam[::-1]
    if not np.all(np.abs(lam - mirror) <= tol):
        return basis
    sym = (lam + mirror) / 2
    sym[np.abs(sym) <= zero_tol] = 0.0
    sym = np.where(np.arange(len(sym)) >= len(sym) / 2, 2.0 - sym[::-1], sym)
    return replace(basis, eigenvalues=sym, frequencies=sym.copy())


def _bank_inputs(basis, bank, partition):
    partition = partition or bank.partition
    if partition is None:
        raise PartitionError("no partition supplied")
    if partition.n != basis.n:
        raise PartitionError(f"partition covers {partition.n} nodes, basis has {basis.n}")
    if basis.operator is not None and basis.operator.graph is not None:
        _require_bipartition(basis.operator.graph, partition)
    return folded_basis(basis), partition


def two_channel_analyze(basis, bank: TwoChannelBank, partition: NodePartition2 | None, x):
    basis, partition = _bank_inputs(basis, bank, partition)
    S = SamplerJ(partition)
    y0 = S.down(apply_exact(basis, bank.h0, x), 0)
    y1 = S.down(apply_exact(basis, bank.h1, x), 1)
    return y0, y1


def two_channel_synthesize(basis, bank: TwoChannelBank, partition: NodePartition2 | None, y0, y1,
                           check=True, tol=1e-9):
    basis, partition = _bank_inputs(basis, bank, partition)
    S = SamplerJ(partition)
    x = apply_exact(basis, bank.g0, S.up(y0, 0)) + apply_exact(basis, bank.g1, S.up(y1, 1))
    if check:
        T = _two_channel_matrix(basis, bank, partition)
        synth = _two_channel_matrix(basis, bank, partition, synthesis=True)
        err = float(np.abs(synth @ T - np.eye(basis.n)).max())
        if err > tol:
            warnings.warn(f"bank is not perfect-reconstruction on this graph: "
                          f"max |synthesis*analysis - I| = {err:.3e}", RuntimeWarning, stacklevel=2)
    return x


def _two_channel_matrix(basis, bank, partition, synthesis=False):
    if synthesis:
        G0, G1 = filter_matrix(basis, bank.g0).H, filter_matrix(basis, bank.g1).H
        return np.hstack([G0[:, list(partition.V0)], G1[:, list(partition.V1)]])
    H0, H1 = filter_matrix(basis, bank.h0).H, filter_matrix(basis, bank.h1).H
    return np.vstack([H0[list(partition.V0)], H1[list(partition.V1)]])


# ---------------------------------------------------------------------------
# Supernode partitions and generalized Haar

@dataclass(frozen=True)
class SupernodePartition:
    """Disjoint covering subsets, each sorted, ordered by their smallest node."""

    subsets: tuple

    def __post_init__(self):
        subs = [tuple(sorted(int(i) for i in s)) for s in self.subsets]
        if any(len(s) == 0 for s in subs):
            raise PartitionError("empty subset in partition")
        subs.sort(key=lambda s: s[0])
        flat = sorted(i for s in subs for i in s)
        if flat != list(range(len(flat))):
            raise PartitionError("subsets must be disjoint and cover nodes 0..N-1")
        object.__setattr__(self, "subsets", tuple(subs))

    @property
    def n(self) -> int:
        return sum(len(s) for s in self.subsets)

    @property
    def n_subsets(self) -> int:
        return len(self.subsets)

    def labels(self) -> np.ndarray:
        out = np.empty(self.n, dtype=np.int64)
        for j, s in enumerate(self.subsets):
            out[list(s)] = j
        return out

    def check_connected(self, g: Graph):
        if g.n_nodes != self.n:
            raise PartitionError(f"partition covers {self.n} nodes, graph has {g.n_nodes}")
        A = g.adjacency
        for s in self.subsets:
            if len(s) > 1:
                sub = A[list(s)][:, list(s)]
                ncomp, _ = connected_components(sub, directed=g.directed, connection="weak")
                if ncomp > 1:
                    raise PartitionError(f"subset {s[:5]}... is not connected in the graph")
        return self

    def to_dict(self):
        return {"type": "supernode", "subsets": [list(s) for s in self.subsets]}


def haar_matrix(partition: SupernodePartition) -> np.ndarray:
    """Orthogonal analysis matrix: J averaging rows, then per-subset Helmert details."""
    n = partition.n
    Q = np.zeros((n, n))
    row = partition.n_subsets
    for j, s in enumerate(partition.subsets):
        k = len(s)
        idx = list(s)
        Q[j, idx] = 1 / np.sqrt(k)
        for m in range(1, k):
            c = 1 / np.sqrt(m * (m + 1.0))
            Q[row, idx[:m]] = c
            Q[row, idx[m]] = -m * c
            row += 1
    return Q


def haar_analysis(g: Graph | None, partition: SupernodePartition, x):
    """(approx, details, Q): approx_j = sum over subset j / sqrt(|V_j|); details from Helmert completion."""
    if g is not None:
        partition.check_connected(g)
    x = np.asarray(x, dtype=float)
    if x.shape[0] != partition.n:
        raise ValueError(f"signal length {x.shape[0]} does not match partition size {partition.n}")
    approx = np.empty(partition.n_subsets)
    details = []
    for j, s in enumerate(partition.subsets):
        block = _kernels.helmert_block(x[list(s)])
        approx[j] = block[0]
        details.append(block[1:])
    details = np.concatenate(details) if details else np.zeros(0)
    return approx, details, haar_matrix(partition)


def haar_synthesis(partition: SupernodePartition, approx, details):
    x = np.empty(partition.n)
    pos = 0
    for j, s in enumerate(partition.subsets):
        k = len(s)
        coef = np.concatenate([[approx[j]], details[pos:pos + k - 1]])
        pos += k - 1
        x[list(s)] = _helmert_inverse(coef)
    return x


def _helmert_inverse(coef):
    k = len(coef)
    v = np.full(k, coef[0] / np.sqrt(k))
    for m in range(1, k):
        c = 1 / np.sqrt(m * (m + 1.0))
        v[:m] += c * coef[m]
        v[m] -= m * c * coef[m]
    return v


def coarse_graph(g: Graph, partition: SupernodePartition) -> Graph:
    """Supernode graph: inter-subset weights summed, intra-subset weights dropped."""
    if partition.n != g.n_nodes:
        raise PartitionError(f"partition covers {partition.n} nodes, graph has {g.n_nodes}")
    lab = partition.labels()
    S = sp.csr_matrix((np.ones(g.n_nodes), (lab, np.arange(g.n_nodes))), shape=(partition.n_subsets, g.n_nodes))
    Ac = sp.csr_matrix(S @ g.adjacency @ S.T)
    if not g.directed:
        Ac = sp.csr_matrix((Ac + Ac.T) / 2)  # a + b == b + a, so this is exactly symmetric
    Ac.setdiag(0)
    Ac.eliminate_zeros()
    return Graph(Ac, directed=g.directed)


def kron_reduce(g: Graph, keep) -> Graph:
    """Schur complement of L onto ``keep``, returned as a graph on the kept nodes in sorted order."""
    if g.directed:
        raise GraphError("Kron reduction expects an undirected graph")
    keep = np.array(sorted({int(i) for i in keep}), dtype=np.int64)
    n = g.n_nodes
    if keep.size == 0 or keep.min() < 0 or keep.max() >= n:
        raise PartitionError("keep set must be a nonempty subset of the nodes")
    drop = np.setdiff1d(np.arange(n), keep)
    A = g.adjacency
    if drop.size == 0:
        return Graph(A.copy(), directed=False)
    # every discarded component must touch a kept node, otherwise L_dd is singular
    ncomp, lab = connected_components(A, directed=False)
    kept_labels = set(lab[keep].tolist())
    if any(lab[d] not in kept_labels for d in drop):
        raise GSPError("interior Laplacian block is singular: a discarded component has no kept node")
    L = (sp.diags(np.asarray(A.sum(axis=1)).ravel()) - A).toarray()
    Lkk, Lkd, Ldd = L[np.ix_(keep, keep)], L[np.ix_(keep, drop)], L[np.ix_(drop, drop)]
    try:
        red = Lkk - Lkd @ la.solve(Ldd, Lkd.T, assume_a="pos")
    except la.LinAlgError as exc:
        raise GSPError(f"interior Laplacian block is singular: {exc}") from None
    W = -red
    np.fill_diagonal(W, 0.0)
    W = (W + W.T) / 2
    W[W < 1e-14 * max(1.0, np.abs(W).max())] = 0.0
    return Graph(sp.csr_matrix(W), directed=False, node_ids=tuple(g.node_ids[i] for i in keep))


def partition_by_matching(g: Graph, target_ratio=0.5) -> SupernodePartition:
    """Greedy heavy-edge matching.

    Edges are visited by descending weight, ties broken by lower node id.
    Matching stops once the number of supernodes reaches
    ``ceil(target_ratio * N)``; unmatched nodes become singletons.
    """
    if not 0 < target_ratio <= 1:
        raise ValueError("target_ratio must lie in (0, 1]")
    n = g.n_nodes
    A = sp.triu(g.adjacency + g.adjacency.T if g.directed else g.adjacency, k=1).tocoo()
    order = np.lexsort((A.col, A.row, -A.data))
    max_pairs = n - int(np.ceil(target_ratio * n))
    mate = _kernels.greedy_match(n, A.row[order], A.col[order], max_pairs)
    subsets = []
    for i in range(n):
        if mate[i] < 0:
            subsets.append((i,))
        elif i < mate[i]:
            subsets.append((i, int(mate[i])))
    return SupernodePartition(tuple(subsets))


def polarity_bipartition(basis, g: Graph | None = None, tol=1e-12) -> NodePartition2:
    """Split by the sign of the highest-frequency eigenvector; entries >= 0 (to rounding) go to V0."""
    if not basis.symmetric:
        raise GSPError("polarity bipartition needs a symmetric operator basis")
    u = basis.U[:, -1]
    v0 = u >= -tol * np.abs(u).max()
    return NodePartition2(tuple(np.flatnonzero(v0)), tuple(np.flatnonzero(~v0)))


# ---------------------------------------------------------------------------
# Cascades

POLICIES = ("haar", "two-channel")


@dataclass(frozen=True, eq=False)
class Level:
    graph: Graph  # graph this level analyzed
    coarse: Graph  # graph carrying the approximation
    approx: np.ndarray
    details: np.ndarray
    partition: object
    analysis: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class MultiresDecomposition:
    levels: list
    policy: str
    n: int
    meta: dict = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def coefficient_count(self, depth=None) -> int:
        depth = self.depth if depth is None else depth
        lv = self.levels[:depth]
        return len(lv[-1].approx) + sum(len(l.details) for l in lv)


def _ln_basis(g):
    return decompose(reference_operator(g, Kind.Ln))


def analyze_level(g: Graph, x, policy="haar", target_ratio=0.5, keep_matrix=True) -> Level:
    if policy == "haar":
        part = partition_by_matching(g, target_ratio)
        approx, details, Q = haar_analysis(g, part, x)
        return Level(g, coarse_graph(g, part), approx, details, part, Q if keep_matrix else None)
    if policy == "two-channel":
        res = bipartition_check(g)
        if isinstance(res, OddCycle):
            raise NotBipartiteError(f"two-channel policy needs a bipartite graph (odd cycle {res.cycle}); "
                                    "use the haar policy")
        basis = _ln_basis(g)
        bank = design_qmf_bank(res, basis.basis_id)
        y0, y1 = two_channel_analyze(basis, bank, res, x)
        T = _two_channel_matrix(folded_basis(basis), bank, res) if keep_matrix else None
        return Level(g, kron_reduce(g, res.V0), y0, y1, res, T)
    raise ValueError(f"unknown policy {policy!r}; choose from {POLICIES}")


def synthesize_level(level: Level, approx=None, details=None, policy=None):
    approx = level.approx if approx is None else approx
    details = level.details if details is None else details
    if isinstance(level.partition, SupernodePartition):
        return haar_synthesis(level.partition, approx, details)
    basis = _ln_basis(level.graph)
    bank = design_qmf_bank(level.partition, basis.basis_id)
    return two_channel_synthesize(basis, bank, level.partition, approx, details, check=False)


def multires_cascade(g: Graph, x, depth: int, policy="haar", target_ratio=0.5) -> MultiresDecomposition:
    """Apply ``depth`` analysis levels, each on the previous approximation and coarse graph."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    x = np.asarray(x, dtype=float)
    if x.shape[0] != g.n_nodes:
        raise ValueError(f"signal length {x.shape[0]} does not match graph size {g.n_nodes}")
    levels = []
    cur_g, cur_x = g, x
    for _ in range(depth):
        lv = analyze_level(cur_g, cur_x, policy, target_ratio)
        levels.append(lv)
        cur_g, cur_x = lv.coarse, lv.approx
    return MultiresDecomposition(levels, policy, g.n_nodes, {"target_ratio": target_ratio})


def reconstruct(decomp: MultiresDecomposition):
    """Invert the cascade from the coarsest approximation upward."""
    x = decomp.levels[-1].approx
    for lv in reversed(decomp.levels):
        x = synthesize_level(lv, approx=x)
    return x
