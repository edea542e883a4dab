"""Spectral graph wavelets: kernel, frames, forward/inverse transforms and frame bounds."""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import FrameError, GSPError
from .responses import FilterResponse

DEFAULT_GRID = 10_001


@dataclass(frozen=True)
class SgwKernel:
    """Band-pass kernel: power law (lam/l1)^alpha below l1, cubic q on [l1, l2], (l2/lam)^beta above.

    ``cubic`` holds the coefficients of q in ascending powers. The left branch
    is normalized at lambda_* = l1 so that it meets q with value 1.
    """

    alpha: float
    beta: float
    lambda1: float
    lambda2: float
    cubic: tuple

    @property
    def lambda_star(self) -> float:
        return self.lambda1

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        l1, l2 = self.lambda1, self.lambda2
        out = np.empty_like(lam)
        left = lam < l1
        right = lam > l2
        mid = ~(left | right)
        out[left] = (np.clip(lam[left], 0, None) / l1) ** self.alpha
        out[mid] = np.polynomial.polynomial.polyval(lam[mid], self.cubic)
        with np.errstate(divide="ignore"):
            out[right] = (l2 / lam[right]) ** self.beta
        return out


def sgw_kernel(alpha=2.0, beta=2.0, lambda1=1.0, lambda2=2.0) -> SgwKernel:
    """Solve the 4x4 Hermite system for the junction cubic."""
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha and beta must be positive")
    if not 0 < lambda1 <= lambda2:
        raise ValueError("need 0 < lambda1 <= lambda2")
    l1, l2 = float(lambda1), float(lambda2)
    M = np.array([[1, l1, l1 ** 2, l1 ** 3],
                  [0, 1, 2 * l1, 3 * l1 ** 2],
                  [1, l2, l2 ** 2, l2 ** 3],
                  [0, 1, 2 * l2, 3 * l2 ** 2]], dtype=float)
    rhs = np.array([1.0, alpha / l1, 1.0, -beta / l2])
    if np.linalg.cond(M) > 1e12:
        raise FrameError(f"junction system is singular for lambda1={l1}, lambda2={l2}")
    q = np.linalg.solve(M, rhs)
    return SgwKernel(float(alpha), float(beta), l1, l2, tuple(float(c) for c in q))


@dataclass(frozen=True)
class WaveletFrame:
    scales: tuple
    kernel: SgwKernel
    lowpass: FilterResponse | None
    basis_id: str = ""

    def __post_init__(self):
        s = tuple(float(v) for v in self.scales)
        if any(v <= 0 for v in s):
            raise FrameError("scales must be positive")
        object.__setattr__(self, "scales", tuple(sorted(s, reverse=True)))

    @property
    def m(self) -> int:
        return len(self.scales)

    def channels(self, lam):
        """Responses stacked as rows: low-pass first, then one row per scale."""
        lam = np.asarray(lam, dtype=float)
        rows = [np.asarray(self.lowpass(lam), float) if self.lowpass is not None else np.zeros_like(lam)]
        rows += [self.kernel(s * lam) for s in self.scales]
        return np.vstack(rows)

    def G(self, lam):
        return np.sum(self.channels(lam) ** 2, axis=0)

    def to_dict(self):
        k = self.kernel
        return {"alpha": k.alpha, "beta": k.beta, "lambda1": k.lambda1, "lambda2": k.lambda2,
                "scales": list(self.scales),
                "lowpass": self.lowpass.to_dict() if self.lowpass is not None else None}

    @classmethod
    def from_dict(cls, d, basis_id=""):
        low = FilterResponse.from_dict(d["lowpass"]) if d.get("lowpass") else None
        return cls(tuple(d["scales"]), sgw_kernel(d["alpha"], d["beta"], d["lambda1"], d["lambda2"]),
                   low, basis_id)

    @property
    def frame_id(self) -> str:
        try:
            desc = json.dumps(self.to_dict(), sort_keys=True)
        except TypeError:  # callable low-pass: id is only stable within this process
            desc = json.dumps({"scales": list(self.scales), "lowpass": f"callable@{id(self.lowpass):x}"})
        return hashlib.sha1(desc.encode()).hexdigest()[:12]


def default_scales(lambda_max, m=4, kernel: SgwKernel | None = None, spread=20.0):
    """Log-spaced scales whose products with lambda_max span [2 lambda2, spread * lambda1]."""
    kernel = kernel or sgw_kernel()
    a, b = 2 * kernel.lambda2 / lambda_max, spread * kernel.lambda1 / lambda_max
    return tuple(sorted(np.geomspace(a, b, m).tolist(), reverse=True))


def default_frame(basis=None, lambda_max=None, m=4, kernel: SgwKernel | None = None) -> WaveletFrame:
    """Default design; graph-dependent when ``basis`` is given, universal otherwise."""
    kernel = kernel or sgw_kernel()
    if basis is not None:
        lam = np.real(basis.eigenvalues)
        lambda_max = float(lam.max())
        nz = lam[lam > basis.group_tol]
        lmin = float(nz.min()) if nz.size else lambda_max / (2 * m)
        bid = basis.basis_id
    else:
        if lambda_max is None:
            raise ValueError("need a basis or lambda_max")
        lmin = lambda_max / (2 * m)
        bid = ""
    if lambda_max <= 0:
        raise FrameError("spectrum has no positive eigenvalue")
    low = FilterResponse.named("exp_lowpass", cutoff=0.6 * lmin, power=4.0)
    return WaveletFrame(default_scales(lambda_max, m, kernel), kernel, low, bid)


@dataclass(frozen=True)
class SgwCoefficients:
    wavelet: np.ndarray  # m x N
    scaling: np.ndarray  # N
    frame_id: str

    @property
    def count(self) -> int:
        return self.wavelet.size + self.scaling.size

    def stacked(self):
        return np.vstack([self.scaling[None, :], self.wavelet])


def _check_basis(basis):
    if not basis.symmetric:
        raise GSPError("spectral graph wavelets need a symmetric operator basis")


def wavelet_atom(basis, frame: WaveletFrame, s, a):
    """psi_{s,a} = U h(s Lambda) U^T delta_a."""
    _check_basis(basis)
    if s <= 0:
        raise ValueError("scale must be positive")
    h = frame.kernel(s * basis.frequencies)
    return basis.U @ (h * basis.U[a, :])


def scaling_atom(basis, frame: WaveletFrame, a):
    _check_basis(basis)
    return basis.U @ (frame.channels(basis.frequencies)[0] * basis.U[a, :])


def sgwt_forward(basis, frame: WaveletFrame, x) -> SgwCoefficients:
    _check_basis(basis)
    x = np.asarray(x, dtype=float)
    xhat = basis.V @ x
    H = frame.channels(basis.frequencies)
    out = (basis.U @ (H * xhat[None, :]).T).T
    return SgwCoefficients(wavelet=out[1:], scaling=out[0], frame_id=frame.frame_id)


@dataclass(frozen=True)
class FrameBounds:
    A: float
    B: float
    mode: str
    grid_size: int = 0

    def __iter__(self):
        return iter((self.A, self.B))


def frame_bounds(frame: WaveletFrame, basis_or_interval, a_floor=1e-10, grid_size=DEFAULT_GRID) -> FrameBounds:
    """min and max of G, on the eigenvalues of a basis or on a uniform grid of [0, lambda_max].

    ``basis_or_interval`` may be a SpectralBasis, a ``(lo, hi)`` pair, or a
    scalar lambda_max.
    """
    if hasattr(basis_or_interval, "eigenvalues"):
        lam = np.real(basis_or_interval.frequencies)
        mode, n = "graph", 0
    else:
        lo, hi = (0.0, float(basis_or_interval)) if np.isscalar(basis_or_interval) else basis_or_interval
        lam = np.linspace(max(0.0, lo), hi, grid_size)
        mode, n = "universal", grid_size
    G = frame.G(lam)
    A, B = float(G.min()), float(G.max())
    if A < a_floor:
        warnings.warn(f"numerically non-invertible frame: A = {A:.3e} < {a_floor:.1e}", RuntimeWarning,
                      stacklevel=2)
    return FrameBounds(A, B, mode, n)


def sgwt_inverse(basis, frame: WaveletFrame, coeffs: SgwCoefficients, a_floor=1e-10):
    """Least-squares inverse: x_hat_k = sum_c h_c(l_k) c_hat_{c,k} / G(l_k)."""
    _check_basis(basis)
    H = frame.channels(basis.frequencies)
    G = np.sum(H ** 2, axis=0)
    if G.min() < a_floor:
        raise FrameError(f"frame is not invertible on this spectrum (min G = {G.min():.3e})")
    chat = basis.V @ coeffs.stacked().T  # N x channels
    xhat = np.sum(H.T * chat, axis=1) / G
    return basis.U @ xhat
