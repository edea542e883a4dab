"""Deterministic random graph generators shared by the test modules."""

import numpy as np
from scipy.sparse.csgraph import connected_components

from graphsp.graph import build_graph


def random_graph(n, p=0.1, seed=0, weighted=True):
    """Connected undirected graph: a random spanning path plus Erdos-Renyi extras."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    edges = {}
    for a, b in zip(perm[:-1], perm[1:]):
        edges[(min(a, b), max(a, b))] = 1.0
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    for i, j in zip(iu[keep], ju[keep]):
        edges[(int(i), int(j))] = 1.0
    out = []
    for (i, j) in sorted(edges):
        w = float(rng.uniform(0.5, 2.0)) if weighted else 1.0
        out.append((int(i), int(j), w))
    return build_graph(out, n_nodes=n)


def random_digraph(n, p=0.15, seed=0):
    """Strongly connected directed graph: a random Hamiltonian cycle plus random arcs."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    arcs = {(int(perm[k]), int(perm[(k + 1) % n])) for k in range(n)}
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < p:
                arcs.add((i, j))
    return build_graph([(i, j, float(rng.uniform(0.5, 2.0))) for i, j in sorted(arcs)], directed=True, n_nodes=n)


def random_geometric(n, radius=None, seed=0):
    """Connected random geometric graph in the unit square (seed advanced until connected)."""
    radius = radius or 1.6 * np.sqrt(np.log(n) / (np.pi * n))
    s = seed
    while True:
        rng = np.random.default_rng(s)
        pts = rng.random((n, 2))
        d = np.linalg.norm(pts[:, None] - pts[None], axis=2)
        iu, ju = np.triu_indices(n, 1)
        mask = d[iu, ju] < radius
        g = build_graph([(int(i), int(j), 1.0) for i, j in zip(iu[mask], ju[mask])], n_nodes=n)
        if connected_components(g.adjacency, directed=False)[0] == 1:
            return g, pts, s
        s += 1000


def random_bipartite(n0, n1, p=0.3, seed=0):
    """Connected bipartite graph with parts 0..n0-1 and n0..n0+n1-1."""
    rng = np.random.default_rng(seed)
    edges = set()
    # zigzag path through both parts keeps the graph connected
    left, right = list(range(n0)), list(range(n0, n0 + n1))
    for k in range(max(n0, n1)):
        a, b = left[k % n0], right[k % n1]
        edges.add((a, b))
        if k + 1 < max(n0, n1):
            edges.add((left[(k + 1) % n0], b))
    for a in left:
        for b in right:
            if rng.random() < p:
                edges.add((a, b))
    return build_graph([(a, b, float(rng.uniform(0.5, 2.0))) for a, b in sorted(edges)], n_nodes=n0 + n1)


def random_tree(n, seed=0):
    rng = np.random.default_rng(seed)
    return build_graph([(int(rng.integers(0, k)), k, float(rng.uniform(0.5, 2.0))) for k in range(1, n)], n_nodes=n)
