import warnings
from dataclasses import replace

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from graphsp import filterbank as fb
from graphsp.errors import GSPError, NotBipartiteError, PartitionError
from graphsp.graph import Graph, build_graph, cycle_graph, path_graph
from graphsp.operators import reference_operator
from graphsp.responses import FilterResponse
from graphsp.spectral import decompose

from _graphs import random_bipartite, random_geometric, random_graph, random_tree

TRIANGLE = cycle_graph(3)


def ln(g):
    return decompose(reference_operator(g, "Ln"))


# -- partitions and J ------------------------------------------------------

def test_bipartition_examples():
    assert fb.bipartition_check(path_graph(2)) == fb.NodePartition2((0,), (1,))
    assert fb.bipartition_check(cycle_graph(4)) == fb.NodePartition2((0, 2), (1, 3))
    res = fb.bipartition_check(TRIANGLE)
    assert isinstance(res, fb.OddCycle) and res.cycle == (0, 1, 2)


@pytest.mark.parametrize("n", [5, 7, 9])
def test_odd_cycle_certificate_is_a_cycle(n):
    g = cycle_graph(n)
    cyc = fb.bipartition_check(g).cycle
    assert len(cyc) % 2 == 1
    for a, b in zip(cyc, cyc[1:] + cyc[:1]):
        assert g.has_edge(a, b)


@settings(max_examples=25, deadline=None)
@given(n0=st.integers(1, 12), n1=st.integers(1, 12), seed=st.integers(0, 10_000))
def test_bipartition_valid_and_J_algebra(n0, n1, seed):
    g = random_bipartite(n0, n1, seed=seed)
    part = fb.bipartition_check(g)
    assert isinstance(part, fb.NodePartition2) and part.is_bipartition_of(g)
    S = fb.SamplerJ(part)
    J = S.J
    assert np.array_equal(J @ J, np.eye(part.n))
    for which in (0, 1):
        updown = np.column_stack([S.up(S.down(e, which), which) for e in np.eye(part.n)])
        assert np.array_equal(updown, np.diag(part.indicator(which)))


def test_partition_validation():
    with pytest.raises(PartitionError):
        fb.NodePartition2((0, 1), (1, 2))
    with pytest.raises(PartitionError):
        fb.NodePartition2((0,), (2,))
    with pytest.raises(PartitionError):
        fb.SupernodePartition(((0,), ()))


# -- spectral folding ------------------------------------------------------

def test_folding_p2_and_c4():
    assert fb.spectral_folding_residual(ln(path_graph(2))) < 1e-12
    assert fb.spectral_folding_residual(ln(cycle_graph(4))) < 1e-10


def test_folding_rejects_triangle():
    with pytest.raises(NotBipartiteError):
        fb.spectral_folding_residual(ln(TRIANGLE))


@pytest.mark.parametrize("seed", range(4))
def test_folding_random_bipartite(seed):
    assert fb.spectral_folding_residual(ln(random_bipartite(6, 9, seed=seed))) <= 1e-9


# -- QMF bank --------------------------------------------------------------

def test_qmf_values():
    bank = fb.design_qmf_bank()
    lam = np.array([0.0, 0.5, 1.0, 2.0])
    h0, h1 = bank.h0(lam), bank.h1(lam)
    assert h0[2] == pytest.approx(1) and h1[2] == pytest.approx(1)
    assert h0[0] == pytest.approx(np.sqrt(2)) and h1[0] == 0
    assert h0[1] ** 2 + h1[1] ** 2 == pytest.approx(2)
    grid = np.linspace(0, 2, 101)
    assert np.allclose(bank.h0(grid) ** 2 + bank.h1(grid) ** 2, 2)
    assert np.allclose(bank.h0(2 - grid) * bank.h0(grid) - bank.h1(2 - grid) * bank.h1(grid), 0)


def test_analyze_c4():
    g = cycle_graph(4)
    b = ln(g)
    part = fb.bipartition_check(g)
    bank = fb.design_qmf_bank(part)
    y0, y1 = fb.two_channel_analyze(b, bank, part, np.ones(4))
    assert np.allclose(y1, 0, atol=1e-12) and np.allclose(y0, np.sqrt(2), atol=1e-12)
    top = b.U[:, -1]
    y0, y1 = fb.two_channel_analyze(b, bank, part, top)
    assert np.allclose(y0, 0, atol=1e-12)
    y0, y1 = fb.two_channel_analyze(b, bank, part, np.zeros(4))
    assert not y0.any() and not y1.any() and len(y0) + len(y1) == 4


def test_synthesize_examples():
    for g, x in ((cycle_graph(4), np.array([1.0, 2, 3, 4])), (path_graph(2), np.array([1.0, 0]))):
        b = ln(g)
        part = fb.bipartition_check(g)
        bank = fb.design_qmf_bank(part)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            xr = fb.two_channel_synthesize(b, bank, part, *fb.two_channel_analyze(b, bank, part, x))
        assert np.linalg.norm(xr - x) < 1e-10 * np.linalg.norm(x)
    b = ln(cycle_graph(4))
    part = fb.bipartition_check(cycle_graph(4))
    assert not fb.two_channel_synthesize(b, fb.design_qmf_bank(part), part, np.zeros(2), np.zeros(2)).any()


def test_analyze_rejects_mismatched_partition():
    b = ln(cycle_graph(4))
    with pytest.raises(NotBipartiteError):
        fb.two_channel_analyze(b, fb.design_qmf_bank(), fb.NodePartition2((0, 1), (2, 3)), np.ones(4))
    with pytest.raises(PartitionError):
        fb.two_channel_analyze(b, fb.design_qmf_bank(), fb.NodePartition2((0,), (1, 2)), np.ones(4))


def test_non_pr_bank_warns():
    g = cycle_graph(4)
    b = ln(g)
    part = fb.bipartition_check(g)
    heat = FilterResponse.named("heat", nu0=1.0)
    bank = fb.TwoChannelBank(heat, heat, heat, heat, part)
    with pytest.warns(RuntimeWarning, match="perfect-reconstruction"):
        fb.two_channel_synthesize(b, bank, part, *fb.two_channel_analyze(b, bank, part, np.ones(4)))
    assert not bank.certify(b)


@settings(max_examples=20, deadline=None)
@given(n0=st.integers(1, 15), n1=st.integers(1, 15), seed=st.integers(0, 10_000))
def test_pr_identities_and_round_trip(n0, n1, seed):
    g = random_bipartite(n0, n1, seed=seed)
    b = ln(g)
    part = fb.bipartition_check(g)
    bank = fb.design_qmf_bank(part)
    pr, alias = bank.pr_residuals(b)
    assert pr < 1e-8 and alias < 1e-8
    x = np.random.default_rng(seed).standard_normal(g.n_nodes)
    y0, y1 = fb.two_channel_analyze(b, bank, part, x)
    assert len(y0) + len(y1) == g.n_nodes
    xr = fb.two_channel_synthesize(b, bank, part, y0, y1)
    assert np.linalg.norm(xr - x) <= 1e-9 * np.linalg.norm(x)


# -- Haar ------------------------------------------------------------------

def test_haar_pair():
    a, b_ = 3.0, -1.0
    part = fb.SupernodePartition(((0, 1),))
    approx, details, Q = fb.haar_analysis(path_graph(2), part, [a, b_])
    assert approx[0] == pytest.approx((a + b_) / np.sqrt(2))
    assert abs(details[0]) == pytest.approx(abs(a - b_) / np.sqrt(2))


def test_haar_singletons_and_constant():
    x = np.array([1.0, 5.0, -2.0, 0.5])
    part = fb.SupernodePartition(tuple((i,) for i in range(4)))
    approx, details, _ = fb.haar_analysis(path_graph(4), part, x)
    assert np.array_equal(approx, x) and details.size == 0
    approx, details, _ = fb.haar_analysis(path_graph(4), fb.SupernodePartition(((0, 1, 2, 3),)), np.ones(4))
    assert approx[0] == pytest.approx(2) and np.allclose(details, 0)


def test_haar_rejects_disconnected_subset():
    with pytest.raises(PartitionError):
        fb.haar_analysis(path_graph(3), fb.SupernodePartition(((0, 2), (1,))), np.ones(3))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 10_000), ratio=st.floats(0.5, 1.0))
def test_haar_orthogonal_and_invertible(n, seed, ratio):
    g = random_graph(n, seed=seed)
    part = fb.partition_by_matching(g, ratio)
    x = np.random.default_rng(seed).standard_normal(n)
    approx, details, Q = fb.haar_analysis(g, part, x)
    assert np.abs(Q.T @ Q - np.eye(n)).max() < 1e-10
    assert np.allclose(Q @ x, np.concatenate([approx, details]))
    assert np.allclose(fb.haar_synthesis(part, approx, details), x, atol=1e-12)


# -- coarse graphs and Kron ------------------------------------------------

def test_coarse_graph_examples():
    c4 = cycle_graph(4)
    gc = fb.coarse_graph(c4, fb.SupernodePartition(((0, 1), (2, 3))))
    assert gc.n_nodes == 2 and gc.dense()[0, 1] == 2
    g = random_graph(8, seed=1)
    same = fb.coarse_graph(g, fb.SupernodePartition(tuple((i,) for i in range(8))))
    assert np.array_equal(same.dense(), g.dense())
    one = fb.coarse_graph(g, fb.SupernodePartition((tuple(range(8)),)))
    assert one.n_nodes == 1 and one.adjacency.nnz == 0


def test_kron_examples():
    k = fb.kron_reduce(path_graph(3), [0, 2])
    assert k.n_nodes == 2 and k.dense()[0, 1] == pytest.approx(0.5)
    g = random_graph(7, seed=3)
    assert np.allclose(fb.kron_reduce(g, range(7)).dense(), g.dense())
    single = fb.kron_reduce(g, [4])
    assert single.n_nodes == 1 and single.adjacency.nnz == 0


def test_kron_singular_interior():
    g = build_graph([(0, 1, 1.0), (2, 3, 1.0)], n_nodes=4)
    with pytest.raises(GSPError, match="singular"):
        fb.kron_reduce(g, [0, 1])


def _resistance(g, i, j):
    W = g.dense()
    L = np.diag(W.sum(1)) - W
    e = np.zeros(g.n_nodes)
    e[i], e[j] = 1, -1
    return e @ np.linalg.pinv(L) @ e


@pytest.mark.parametrize("g,keep", [(path_graph(3), [0, 2]), (random_tree(7, seed=2), [0, 3, 5, 6])])
def test_kron_preserves_resistance_on_trees(g, keep):
    red = fb.kron_reduce(g, keep)
    for a in range(len(keep)):
        for b in range(a + 1, len(keep)):
            assert _resistance(red, a, b) == pytest.approx(_resistance(g, keep[a], keep[b]), rel=1e-10)


# -- matching and polarity -------------------------------------------------

def test_matching_examples():
    assert fb.partition_by_matching(path_graph(2)).subsets == ((0, 1),)
    tri = build_graph([(0, 1, 3.0), (1, 2, 2.0), (0, 2, 1.0)])
    assert fb.partition_by_matching(tri).subsets == ((0, 1), (2,))
    empty = Graph(sp.csr_matrix((4, 4)))
    assert fb.partition_by_matching(empty).subsets == ((0,), (1,), (2,), (3,))


def test_matching_tie_break_prefers_low_ids():
    assert fb.partition_by_matching(cycle_graph(4)).subsets == ((0, 1), (2, 3))


def test_polarity_examples():
    assert fb.polarity_bipartition(ln(path_graph(2))) == fb.NodePartition2((0,), (1,))
    c4 = cycle_graph(4)
    pol = fb.polarity_bipartition(decompose(reference_operator(c4, "L")), c4)
    assert {pol.V0, pol.V1} == {(0, 2), (1, 3)}


def test_polarity_zero_entries_go_to_v0():
    b = decompose(reference_operator(path_graph(3), "L"))
    U = b.U.copy()
    U[:, -1] = [0.0, 1 / np.sqrt(2), -1 / np.sqrt(2)]
    part = fb.polarity_bipartition(replace(b, U=U))
    assert part == fb.NodePartition2((0, 1), (2,))
    U[0, -1] = -1e-17  # rounding-level negative counts as zero
    assert fb.polarity_bipartition(replace(b, U=U)) == part


# -- cascade ---------------------------------------------------------------

def test_cascade_depth_one_is_single_level():
    g = random_graph(30, seed=4)
    x = np.random.default_rng(0).standard_normal(30)
    d = fb.multires_cascade(g, x, 1)
    lv = fb.analyze_level(g, x)
    assert np.allclose(d.levels[0].approx, lv.approx) and np.allclose(d.levels[0].details, lv.details)


def test_cascade_smooth_rgg():
    g, _, _ = random_geometric(300, seed=0)
    b = decompose(reference_operator(g, "L"))
    x = b.U[:, :5].sum(axis=1)
    d = fb.multires_cascade(g, x, 3)
    total = np.sum(x ** 2)
    for k, lv in enumerate(d.levels):
        assert np.sum(lv.details ** 2) / total < np.sum(lv.approx ** 2) / total
        assert d.coefficient_count(k + 1) == 300
        assert np.abs(lv.analysis.T @ lv.analysis - np.eye(lv.graph.n_nodes)).max() < 1e-10
    assert np.linalg.norm(fb.reconstruct(d) - x) <= 1e-8 * np.linalg.norm(x)


@pytest.mark.parametrize("n", [9, 16])
def test_two_channel_cascade_on_paths(n):
    x = np.random.default_rng(n).standard_normal(n)
    d = fb.multires_cascade(path_graph(n), x, 3, "two-channel")
    assert d.coefficient_count() == n
    assert np.linalg.norm(fb.reconstruct(d) - x) <= 1e-8 * np.linalg.norm(x)


def test_two_channel_cascade_rejects_odd_cycle():
    with pytest.raises(NotBipartiteError, match="haar"):
        fb.multires_cascade(cycle_graph(5), np.ones(5), 1, "two-channel")


def test_cascade_validates():
    with pytest.raises(ValueError):
        fb.multires_cascade(path_graph(3), np.ones(3), 0)
    with pytest.raises(ValueError):
        fb.multires_cascade(path_graph(3), np.ones(3), 1, "nope")


@settings(max_examples=10, deadline=None)
@given(n=st.integers(2, 60), seed=st.integers(0, 10_000), depth=st.integers(1, 4))
def test_cascade_critical_sampling_and_pr(n, seed, depth):
    g = random_graph(n, seed=seed)
    x = np.random.default_rng(seed).standard_normal(n)
    d = fb.multires_cascade(g, x, depth)
    for k in range(1, depth + 1):
        assert d.coefficient_count(k) == n
    assert np.linalg.norm(fb.reconstruct(d) - x) <= 1e-8 * np.linalg.norm(x)
