import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphsp import sgwt
from graphsp.errors import FrameError
from graphsp.filters import apply_exact
from graphsp.graph import cycle_graph, path_graph
from graphsp.operators import reference_operator
from graphsp.responses import FilterResponse
from graphsp.spectral import decompose

from _graphs import random_graph

ONE = FilterResponse.named("constant", c=1.0)
ZERO = FilterResponse.named("constant", c=0.0)


def basis_of(g, kind="L"):
    return decompose(reference_operator(g, kind))


# -- kernel ----------------------------------------------------------------

def test_kernel_left_branch():
    k = sgwt.sgw_kernel(1, 1, 1, 2)
    assert k(np.array([0.5]))[0] == pytest.approx(0.5)


@pytest.mark.parametrize("alpha,beta,l1,l2", [(2, 2, 1, 2), (1, 1, 1, 2), (3, 1.5, 0.5, 4)])
def test_kernel_junctions(alpha, beta, l1, l2):
    k = sgwt.sgw_kernel(alpha, beta, l1, l2)
    assert k(np.array([l1]))[0] == pytest.approx(1, abs=1e-12)
    assert k(np.array([l2]))[0] == pytest.approx(1, abs=1e-12)
    assert k(np.array([2 * l2]))[0] == pytest.approx(2.0 ** -beta)
    assert k(np.array([0.0]))[0] == 0
    eps = 1e-9
    for t in (l1, l2):
        below, above = k(np.array([t - eps, t + eps]))
        assert abs(below - above) < 1e-7
    # derivative continuity via one-sided difference quotients
    d = 1e-6
    for t in (l1, l2):
        left = (k(np.array([t]))[0] - k(np.array([t - d]))[0]) / d
        right = (k(np.array([t + d]))[0] - k(np.array([t]))[0]) / d
        assert abs(left - right) < 1e-4


def test_kernel_default_cubic():
    assert np.allclose(sgwt.sgw_kernel().cubic, (-5, 11, -6, 1))


def test_kernel_degenerate_rejected():
    with pytest.raises(FrameError):
        sgwt.sgw_kernel(2, 2, 1, 1)
    with pytest.raises(ValueError):
        sgwt.sgw_kernel(0, 2, 1, 2)


# -- atoms -----------------------------------------------------------------

def test_atom_matches_exact_filter():
    b = basis_of(random_graph(20, seed=1))
    f = sgwt.default_frame(b)
    delta = np.zeros(20)
    delta[3] = 1
    h = FilterResponse.from_callable(lambda lam: f.kernel(0.7 * np.asarray(lam)), label="h_s")
    assert np.allclose(sgwt.wavelet_atom(b, f, 0.7, 3), apply_exact(b, h, delta), atol=1e-13)


def test_atom_p2():
    b = basis_of(path_graph(2))
    f = sgwt.default_frame(b)
    for s in (0.3, 1.0, 2.5):
        expect = f.kernel(np.array([2 * s]))[0] * np.array([1, -1]) / 2
        assert np.allclose(sgwt.wavelet_atom(b, f, s, 0), expect, atol=1e-14)


@pytest.mark.parametrize("seed", range(4))
def test_atoms_zero_mean(seed):
    g = random_graph(25, seed=seed)
    b = basis_of(g)
    f = sgwt.default_frame(b)
    u1 = np.ones(25) / 5
    for s in f.scales:
        for a in range(0, 25, 6):
            assert abs(sgwt.wavelet_atom(b, f, s, a) @ u1) < 1e-10


def test_atom_vanishes_at_small_scale():
    b = basis_of(random_graph(15, seed=2))
    f = sgwt.default_frame(b)
    norms = [np.linalg.norm(sgwt.wavelet_atom(b, f, s, 0)) for s in (1e-1, 1e-2, 1e-3)]
    assert norms[0] > norms[1] > norms[2] and norms[2] < 1e-4


def test_atom_rejects_bad_scale():
    b = basis_of(path_graph(3))
    with pytest.raises(ValueError):
        sgwt.wavelet_atom(b, sgwt.default_frame(b), 0, 0)


# -- forward ---------------------------------------------------------------

def test_forward_constant_signal():
    b = basis_of(random_graph(12, seed=3))
    f = sgwt.default_frame(b)
    c = sgwt.sgwt_forward(b, f, np.ones(12))
    assert np.abs(c.wavelet).max() < 1e-12
    assert np.allclose(c.scaling, f.lowpass(np.array([0.0]))[0] * np.ones(12))
    assert c.count == (f.m + 1) * 12


def test_forward_eigenvector():
    b = basis_of(random_graph(12, seed=4))
    f = sgwt.default_frame(b)
    for k in (1, 5, 11):
        c = sgwt.sgwt_forward(b, f, b.U[:, k])
        for i, s in enumerate(f.scales):
            hk = f.kernel(np.array([s * b.eigenvalues[k].real]))[0]
            assert np.allclose(c.wavelet[i], hk * b.U[:, k], atol=1e-12)


def test_forward_zero():
    b = basis_of(path_graph(5))
    c = sgwt.sgwt_forward(b, sgwt.default_frame(b), np.zeros(5))
    assert not c.wavelet.any() and not c.scaling.any()


def test_energy_identity():
    b = basis_of(random_graph(30, seed=5))
    f = sgwt.default_frame(b)
    x = np.random.default_rng(0).standard_normal(30)
    c = sgwt.sgwt_forward(b, f, x)
    xhat = b.V @ x
    assert np.sum(c.stacked() ** 2) == pytest.approx(np.sum(f.G(b.frequencies) * xhat ** 2), rel=1e-12)


def test_scale_covariance():
    b = basis_of(cycle_graph(4))  # spectrum {0, 2, 2, 4}
    f = sgwt.WaveletFrame((2.0, 1.0), sgwt.sgw_kernel(), None)
    lam = b.frequencies
    k2, k4 = int(np.argmin(abs(lam - 2))), int(np.argmin(abs(lam - 4)))
    c2 = sgwt.sgwt_forward(b, f, b.U[:, k2]).wavelet[0] @ b.U[:, k2]  # s = 2, lambda = 2
    c4 = sgwt.sgwt_forward(b, f, b.U[:, k4]).wavelet[1] @ b.U[:, k4]  # s = 1, lambda = 4
    assert c2 == pytest.approx(c4, abs=1e-13)


# -- frame bounds ----------------------------------------------------------

def test_bounds_identity_lowpass():
    b = basis_of(random_graph(10, seed=6))
    f = sgwt.WaveletFrame((), sgwt.sgw_kernel(), ONE)
    A, B = sgwt.frame_bounds(f, b)
    assert A == pytest.approx(1) and B == pytest.approx(1)


def test_bounds_zero_lowpass_warns():
    b = basis_of(random_graph(10, seed=6))
    f = sgwt.WaveletFrame(sgwt.default_scales(b.frequencies.max()), sgwt.sgw_kernel(), ZERO)
    with pytest.warns(RuntimeWarning, match="non-invertible"):
        A, _ = sgwt.frame_bounds(f, b)
    assert A == pytest.approx(0, abs=1e-15)


def test_bounds_default_karate_size():
    g = random_graph(34, p=0.14, seed=11)
    b = basis_of(g)
    f = sgwt.default_frame(b)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        bounds = sgwt.frame_bounds(f, b)
    assert bounds.A > 0 and bounds.mode == "graph"
    uni = sgwt.frame_bounds(f, b.frequencies.max())
    assert uni.grid_size == 10_001 and uni.A <= bounds.A + 1e-12


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(6, 40))
def test_frame_inequality(seed, n):
    b = basis_of(random_graph(n, seed=seed))
    f = sgwt.default_frame(b)
    A, B = sgwt.frame_bounds(f, b)
    rng = np.random.default_rng(seed)
    for _ in range(50):
        x = rng.standard_normal(n)
        x /= np.linalg.norm(x)
        e = np.sum(sgwt.sgwt_forward(b, f, x).stacked() ** 2)
        assert A - 1e-9 <= e <= B + 1e-9


# -- inverse ---------------------------------------------------------------

@pytest.mark.parametrize("seed", range(5))
def test_round_trip(seed):
    b = basis_of(random_graph(40, seed=seed))
    f = sgwt.default_frame(b)
    x = np.random.default_rng(seed).standard_normal(40)
    A, B = sgwt.frame_bounds(f, b)
    xr = sgwt.sgwt_inverse(b, f, sgwt.sgwt_forward(b, f, x))
    err = np.linalg.norm(xr - x) / np.linalg.norm(x)
    assert err < 1e-8 and err <= 1e-8 * B / A


def test_constant_reconstructs_through_scaling():
    b = basis_of(random_graph(15, seed=7))
    f = sgwt.default_frame(b)
    c = sgwt.sgwt_forward(b, f, np.ones(15))
    assert np.allclose(sgwt.sgwt_inverse(b, f, c), 1, atol=1e-12)
    only_scaling = sgwt.SgwCoefficients(np.zeros_like(c.wavelet), c.scaling, c.frame_id)
    assert np.allclose(sgwt.sgwt_inverse(b, f, only_scaling), 1, atol=1e-10)


def test_tight_frame_inverse_is_scaled_adjoint():
    b = basis_of(random_graph(12, seed=8))
    kern = sgwt.sgw_kernel()
    scales = sgwt.default_scales(b.frequencies.max())
    wav = lambda lam: sum(kern(s * np.asarray(lam, float)) ** 2 for s in scales)
    C = 1.0 + float(wav(np.linspace(0, b.frequencies.max(), 2001)).max())
    # the low-pass tops G up to the constant C, making the frame tight
    low = FilterResponse.from_callable(lambda lam: np.sqrt(C - wav(lam)), label="tight_lowpass")
    f = sgwt.WaveletFrame(scales, kern, low)
    A, B = sgwt.frame_bounds(f, b)
    assert A == pytest.approx(C) and B == pytest.approx(C)
    x = np.random.default_rng(1).standard_normal(12)
    c = sgwt.sgwt_forward(b, f, x)
    H = f.channels(b.frequencies)
    adjoint = b.U @ np.sum(H.T * (b.V @ c.stacked().T), axis=1)
    assert np.allclose(sgwt.sgwt_inverse(b, f, c), adjoint / A, atol=1e-12)
    assert np.allclose(adjoint / A, x, atol=1e-12)


def test_inverse_rejects_singular_frame():
    b = basis_of(path_graph(4))
    f = sgwt.WaveletFrame((1.0,), sgwt.sgw_kernel(), None)
    c = sgwt.sgwt_forward(b, f, np.ones(4))
    with pytest.raises(FrameError):
        sgwt.sgwt_inverse(b, f, c)


def test_frame_serialization():
    b = basis_of(path_graph(6))
    f = sgwt.default_frame(b)
    g = sgwt.WaveletFrame.from_dict(f.to_dict())
    assert g.frame_id == f.frame_id
    lam = np.linspace(0, 4, 50)
    assert np.allclose(g.channels(lam), f.channels(lam))
