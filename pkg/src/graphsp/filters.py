"""Exact spectral filtering, filter-class oracles, and FIR/ARMA/AR coefficient design."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial import chebyshev
from numpy.polynomial import polynomial as npoly

from .errors import GSPError, IllConditionedError, RankDeficientError, UnstableDesignError
from .responses import FilterResponse
from .spectral import SpectralBasis


class NotPolynomialError(GSPError):
    """The Fourier-diagonal matrix is not a polynomial in the operator."""

    code = "E_NOT_POLY"


class RankDeficientWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class FilterMatrix:
    H: np.ndarray
    response_id: str
    basis_id: str


@dataclass(frozen=True, eq=False)
class ArmaDesign:
    """ARMA(p, q) coefficients: h = (b0 + ... + bq l^q) / (1 + a1 l + ... + ap l^p)."""

    a: np.ndarray
    b: np.ndarray
    fit_error: float
    target: FilterResponse | None = None
    method: str = "shank"
    domain: tuple = (-math.inf, math.inf)

    @property
    def p(self):
        return len(self.a)

    @property
    def q(self):
        return len(self.b) - 1

    def denominator(self):
        return np.concatenate([[1.0], self.a])

    def __call__(self, lam):
        lam = np.asarray(lam)
        return npoly.polyval(lam, self.b) / npoly.polyval(lam, self.denominator())

    def response(self, domain=None) -> FilterResponse:
        return FilterResponse.rational(self.b, self.denominator(), domain or self.domain)

    def to_dict(self):
        return {"a": list(map(float, self.a)), "b": list(map(float, self.b)), "fit_error": float(self.fit_error)}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        return cls(a=np.asarray(d["a"], float), b=np.asarray(d["b"], float), fit_error=float(d["fit_error"]))


# ---------------------------------------------------------------------------
# Exact filtering

def _weights(basis, h):
    if isinstance(h, FilterResponse):
        return h.on_basis(basis)
    if callable(h):
        return np.asarray(h(basis.frequencies))
    w = np.asarray(h)
    if w.shape != (basis.n,):
        raise ValueError("per-mode weights must have one entry per eigenvector")
    return w


def _realify(y, basis):
    if np.iscomplexobj(y) and (basis.symmetric or np.allclose(y.imag, 0, atol=1e-10 * max(1.0, np.abs(y).max()))):
        return y.real
    return y


def apply_exact(basis: SpectralBasis, h, x):
    """U h(Lambda) U^-1 x. ``h`` is a FilterResponse or an array of per-mode weights."""
    x = np.asarray(x)
    if x.shape[0] != basis.n:
        raise ValueError(f"signal length {x.shape[0]} does not match graph size {basis.n}")
    w = _weights(basis, h)
    coef = basis.V @ x
    coef = coef * (w if coef.ndim == 1 else w[:, None])
    return _realify(basis.U @ coef, basis)


def filter_matrix(basis: SpectralBasis, h, rtol=1e-9) -> FilterMatrix:
    """Materialize H, cross-checking U h(Lambda) V against the projector sum."""
    w = _weights(basis, h)
    H = (basis.U * w[None, :]) @ basis.V
    # projector form exists only when each eigenspace carries a single weight
    if all(np.allclose(w[list(idx)], w[idx[0]]) for idx in basis.eigenspaces):
        H_proj = sum(w[idx[0]] * basis.projector(g) for g, idx in enumerate(basis.eigenspaces))
        err = np.linalg.norm(H - H_proj)
        if err > rtol * max(1.0, np.linalg.norm(H)):
            raise GSPError(f"projector-sum and spectral filter constructions disagree by {err:.3e}")
    H = _realify(H, basis)
    rid = h.response_id if isinstance(h, FilterResponse) else "weights"
    return FilterMatrix(H=H, response_id=rid, basis_id=basis.basis_id)


def _matrix_poly(R, coeffs):
    n = R.shape[0]
    out = np.zeros((n, n), dtype=np.result_type(R, np.asarray(coeffs)))
    for c in coeffs[::-1]:
        out = out @ R
        out[np.diag_indices(n)] += c
    return out


def poly_equivalence_oracle(basis: SpectralBasis, h, rtol=1e-6, cond_max=1e12):
    """Monomial coefficients a_0..a_{N-1} with sum a_i R^i equal to the filter.

    Interpolates through the distinct eigenvalues in a Chebyshev basis, then
    converts to monomials. Raises ``NotPolynomialError`` when the target
    matrix is not a polynomial in R (unequal weights inside an eigenspace).
    """
    if not basis.symmetric:
        raise GSPError("poly_equivalence_oracle requires a symmetric operator")
    w = _weights(basis, h)
    mu = basis.distinct_eigenvalues().real
    vals = np.array([w[list(idx)].mean() for idx in basis.eigenspaces])
    m = len(mu)
    lo, hi = float(mu.min()), float(mu.max())
    if m == 1:
        coeffs = np.array([vals[0]])
    else:
        t = (2 * mu - (lo + hi)) / (hi - lo)
        Vc = np.polynomial.chebyshev.chebvander(t, m - 1)
        cond = np.linalg.cond(Vc)
        if cond > cond_max:
            raise IllConditionedError(f"interpolation system condition number {cond:.3e} exceeds {cond_max:.0e}")
        c = np.linalg.solve(Vc, vals)
        coeffs = Chebyshev(c, domain=[lo, hi]).convert(kind=Polynomial).coef
    coeffs = np.concatenate([coeffs, np.zeros(basis.n - len(coeffs))])

    target = filter_matrix(basis, w).H
    R = basis.operator.dense() if basis.operator is not None else (basis.U * basis.eigenvalues) @ basis.V
    realized = _matrix_poly(R, coeffs[:m])
    mismatch = np.linalg.norm(realized - target)
    if mismatch > rtol * max(np.linalg.norm(target), 1e-300):
        spread = max(np.ptp(w[list(idx)]) for idx in basis.eigenspaces)
        if spread > 0:
            raise NotPolynomialError(
                f"weights vary inside an eigenspace (spread {spread:.3e}); "
                f"best polynomial misses by {mismatch:.3e}")
        raise IllConditionedError(
            f"monomial conversion lost accuracy (mismatch {mismatch:.3e}); use the Chebyshev form")
    return coeffs


def commutation_check(H, op) -> float:
    """||R H - H R||_F."""
    Hm = H.H if isinstance(H, FilterMatrix) else np.asarray(H)
    R = op.dense() if hasattr(op, "dense") else np.asarray(op)
    return float(np.linalg.norm(R @ Hm - Hm @ R))


# ---------------------------------------------------------------------------
# Parametric designs

def tikhonov_response(gamma, lambda_max=math.inf) -> FilterResponse:
    """AR(1) response 1/(1 + gamma*lambda), the minimizer of ||x-y||^2 + gamma x^T L x."""
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return FilterResponse.rational([1.0], [1.0, float(gamma)], (0.0, lambda_max))


def _grid(h_target, grid):
    if grid is None:
        lo, hi = h_target.domain
        if not np.isfinite(hi):
            raise ValueError("target domain is unbounded; pass grid=(lo, hi) or an array")
        return np.linspace(max(lo, 0.0) if np.isfinite(lo) else 0.0, hi, 1000)
    grid = np.asarray(grid, float)
    if grid.shape == (2,):
        return np.linspace(grid[0], grid[1], 1000)
    if grid.shape == (3,):
        return np.linspace(grid[0], grid[1], int(grid[2]))
    return grid


def _rms(v):
    return float(np.sqrt(np.mean(np.abs(v) ** 2)))


def design_arma_shank(h_target: FilterResponse, p: int, q: int, grid=None, poly_degree=None) -> ArmaDesign:
    """Universal ARMA(p, q) design by Shanks' method.

    1. Fit P_h, a Chebyshev least-squares polynomial of degree p+q+8 on the
       grid, and pick the a_i that zero the coefficients of degrees
       q+1..q+p of p_p * P_h. Coefficients are matched in the Chebyshev basis
       of the grid interval; monomial coefficients of a least-squares fit are
       too noisy to identify a.
    2. Fit b by linear least squares of p_q/p_p against h on the grid.

    ``fit_error`` is the RMS error of the rational fit on the grid.
    """
    if p < 0 or q < 0:
        raise ValueError("orders must be nonnegative")
    lam = _grid(h_target, grid)
    target = np.asarray(h_target(lam), float)
    lo, hi = float(lam.min()), float(lam.max())

    if p > 0:
        deg = poly_degree if poly_degree is not None else p + q + 8
        Ph = Chebyshev.fit(lam, target, deg, domain=[lo, hi]).coef
        # lambda = mid + half * t on the interval
        lin = np.array([(lo + hi) / 2, (hi - lo) / 2])
        power = np.array([1.0])
        pad = q + p + 2
        cols = []
        for _ in range(p):
            power = chebyshev.chebmul(power, lin)
            prod = np.pad(chebyshev.chebmul(power, Ph), (0, pad))
            cols.append(prod[q + 1:q + p + 1])
        M = np.stack(cols, axis=1)
        rhs = -np.pad(Ph, (0, pad))[q + 1:q + p + 1]
        a = np.linalg.lstsq(M, rhs, rcond=None)[0]
    else:
        a = np.zeros(0)
    den = npoly.polyval(lam, np.concatenate([[1.0], a]))
    if np.min(np.abs(den)) <= 1e-8:
        k = int(np.argmin(np.abs(den)))
        raise UnstableDesignError(f"denominator root near lambda={float(lam[k]):.6g} inside the design domain")
    roots = np.roots(np.concatenate([[1.0], a])[::-1]) if p > 0 else np.array([])
    real_roots = roots[np.abs(roots.imag) < 1e-10].real
    inside = real_roots[(real_roots >= lo) & (real_roots <= hi)]
    if inside.size:
        raise UnstableDesignError(f"denominator root at lambda={float(inside[0]):.6g} inside [{lo}, {hi}]")

    B = np.stack([lam ** i / den for i in range(q + 1)], axis=1)
    b = np.linalg.lstsq(B, target, rcond=None)[0]
    fit = npoly.polyval(lam, b) / den
    return ArmaDesign(a=a, b=b, fit_error=_rms(fit - target), target=h_target,
                      method="shank", domain=(lo, hi))


def design_arma_graph_dependent(basis: SpectralBasis, h_target, p: int, q: int) -> ArmaDesign:
    """ARMA(p, q) fit on the graph's eigenvalues only.

    Minimizes sum_k |h(l_k)(1 + sum a_i l_k^i) - sum b_i l_k^i|^2, which is
    linear in (a, b). ``fit_error`` holds that objective.
    """
    lam = basis.eigenvalues.real
    hk = h_target.on_basis(basis).real if isinstance(h_target, FilterResponse) else np.asarray(h_target(lam))
    cols = [hk * lam ** i for i in range(1, p + 1)] + [-(lam ** i) for i in range(q + 1)]
    M = np.stack(cols, axis=1)
    # column scaling keeps the rank test meaningful for large eigenvalues
    scale = np.linalg.norm(M, axis=0)
    scale[scale == 0] = 1.0
    rank = np.linalg.matrix_rank(M / scale)
    if rank < p + q + 1:
        raise RankDeficientError(f"design system has numerical rank {rank} < {p + q + 1} unknowns "
                                 f"({len(basis.eigenspaces)} distinct eigenvalues)")
    sol = np.linalg.lstsq(M / scale, -hk, rcond=None)[0] / scale
    a, b = sol[:p], sol[p:]
    objective = float(np.sum((M @ sol + hk) ** 2))
    den = npoly.polyval(lam, np.concatenate([[1.0], a]))
    if np.min(np.abs(den)) <= 1e-8:
        raise UnstableDesignError("denominator vanishes at a graph eigenvalue")
    return ArmaDesign(a=a, b=b, fit_error=objective, target=h_target if isinstance(h_target, FilterResponse) else None,
                      method="graph_dependent", domain=(float(lam.min()), float(lam.max())))


def _krylov_columns(R, x, p):
    cols, v = [], np.asarray(x, float)
    for _ in range(p):
        v = R @ v
        cols.append(v)
    return np.stack(cols, axis=1)


def fit_ar_predictor(op, x, p: int, rcond=1e-12):
    """Least-squares AR(p) coefficients for x ~ sum_i a_i R^i x.

    Returns ``(a, residual)`` with ``residual = ||x - B a||_2``. A
    rank-deficient B falls back to a truncated pseudo-inverse with a warning.
    """
    R = op.matrix if hasattr(op, "matrix") else np.asarray(op)
    x = np.asarray(x, float)
    B = _krylov_columns(R, x, p)
    # rank is judged against the scale ||R||^i ||x|| each column would have, not B's own size
    r_norm = float(np.sqrt((R.multiply(R)).sum()) if hasattr(R, "multiply") else np.linalg.norm(R))
    col_scale = np.array([max(r_norm, 1e-300) ** i for i in range(1, p + 1)]) * max(np.linalg.norm(x), 1e-300)
    s = np.linalg.svd(B / col_scale, compute_uv=False)
    rank = int(np.sum(s > rcond))
    if rank < p:
        warnings.warn(f"Krylov matrix has rank {rank} < {p}; using truncated pseudo-inverse",
                      RankDeficientWarning, stacklevel=2)
        a = np.linalg.pinv(B, rcond=rcond) @ x if rank else np.zeros(p)
    else:
        a = np.linalg.solve(B.T @ B, B.T @ x)
    return a, float(np.linalg.norm(x - B @ a))


def fit_ar_yule_walker(op, ensemble, p: int, cond_max=1e12):
    """AR(p) coefficients from Yule-Walker normal equations.

    With symmetric R the moments E{(R^m x)^T R^n x} depend only on m+n,
    estimated by plain ensemble means; the equations are
    sum_i a_i g(i+k) = g(k) for k = 1..p.
    """
    if not getattr(op, "symmetric", True):
        raise GSPError("Yule-Walker fit requires a symmetric operator")
    R = op.matrix if hasattr(op, "matrix") else np.asarray(op)
    ensemble = [np.asarray(x, float) for x in ensemble]
    if not ensemble:
        raise ValueError("empty ensemble")
    gam = np.zeros(2 * p + 1)
    for x in ensemble:
        powers = [x]
        for _ in range(p):
            powers.append(R @ powers[-1])
        # g(m+n) from (R^m x)^T (R^n x) with m, n <= p
        for s in range(2 * p + 1):
            m = min(s, p)
            gam[s] += powers[m] @ powers[s - m]
    gam /= len(ensemble)
    G = np.array([[gam[i + k] for i in range(1, p + 1)] for k in range(1, p + 1)])
    rhs = np.array([gam[k] for k in range(1, p + 1)])
    if not np.all(np.isfinite(G)) or np.abs(G).max() == 0 or np.linalg.cond(G) > cond_max:
        raise RankDeficientError("singular Yule-Walker moment matrix")
    return np.linalg.solve(G, rhs)
