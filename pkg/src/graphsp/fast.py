"""Eigendecomposition-free filtering: Chebyshev / Jackson-Chebyshev, Lanczos, and the ARMA recursion.

Every backend touches the operator only through ``MatvecOperator.matvec``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from numpy.polynomial import chebyshev as cheb
from numpy.polynomial import polynomial as npoly

from .errors import ConvergenceError, GSPError, UnstableDesignError
from .linalg import MatvecOperator, power_iteration
from .operators import Kind

_PSD_KINDS = frozenset({Kind.L, Kind.Ln, Kind.Lrw, Kind.Ld, Kind.Q, Kind.Qn, Kind.Qrw, Kind.Qd})


@dataclass(frozen=True)
class SpectralInterval:
    """Inflated bracket ``[lo, hi]`` plus the raw power-iteration estimates."""

    lo: float
    hi: float
    raw_lo: float
    raw_hi: float

    def __iter__(self):
        return iter((self.lo, self.hi))

    @property
    def width(self):
        return self.hi - self.lo


def _require_symmetric(op):
    if hasattr(op, "symmetric") and not op.symmetric:
        raise GSPError("this backend requires a symmetric operator")


def estimate_spectral_interval(op, margin=0.01, tol=1e-12, max_iters=20_000, seed=0) -> SpectralInterval:
    """Bracket the spectrum of a symmetric operator by two shifted power iterations.

    A Gershgorin disc bound gives a shift that makes both iterations act on
    PSD operators. The final bracket is widened by ``margin`` times its width
    on each side; for Laplacian-type kinds the lower end is clamped to <= 0.
    """
    _require_symmetric(op)
    mat = sp.csr_matrix(getattr(op, "matrix", op))
    A = MatvecOperator(mat)
    n = mat.shape[0]
    diag = mat.diagonal()
    radius = np.asarray(abs(mat).sum(axis=1)).ravel() - np.abs(diag)
    g_lo, g_hi = float(np.min(diag - radius)), float(np.max(diag + radius))

    top, _ = power_iteration(lambda v: A.matvec(v) - g_lo * v, n, tol=tol, max_iters=max_iters, seed=seed)
    raw_hi = top + g_lo
    bot, _ = power_iteration(lambda v: g_hi * v - A.matvec(v), n, tol=tol, max_iters=max_iters, seed=seed + 1)
    raw_lo = g_hi - bot

    lo = raw_lo
    if getattr(op, "kind", None) in _PSD_KINDS:
        lo = min(lo, 0.0)
    pad = margin * max(raw_hi - lo, abs(raw_hi), np.finfo(float).eps)
    return SpectralInterval(lo=lo - pad, hi=raw_hi + pad, raw_lo=raw_lo, raw_hi=raw_hi)


# ---------------------------------------------------------------------------
# Chebyshev

@dataclass(frozen=True)
class ChebyshevPlan:
    order: int
    coeffs: np.ndarray
    damping: str
    spectral_interval: tuple

    def realized(self, lam):
        """Evaluate the truncated (and possibly damped) expansion at ``lam``."""
        lo, hi = self.spectral_interval
        t = (2 * np.asarray(lam, float) - (lo + hi)) / (hi - lo)
        return cheb.chebval(t, self.coeffs)


def jackson_factors(order: int) -> np.ndarray:
    """Jackson damping g_0..g_p, all in (0, 1] with g_0 = 1."""
    j = np.arange(order + 1)
    a = math.pi / (order + 2)
    return ((1 - j / (order + 2)) * math.sin(a) * np.cos(j * a)
            + (1 / (order + 2)) * math.cos(a) * np.sin(j * a)) / math.sin(a)


def chebyshev_coefficients(h, order, interval):
    """Gauss-Chebyshev quadrature with 4(order+1) nodes."""
    lo, hi = interval
    M = 4 * (order + 1)
    theta = math.pi * (np.arange(M) + 0.5) / M
    lam = (hi - lo) / 2 * np.cos(theta) + (lo + hi) / 2
    f = np.asarray(h(lam), float)
    j = np.arange(order + 1)
    c = 2.0 / M * (np.cos(np.outer(j, theta)) @ f)
    c[0] /= 2
    # quadrature round-off on coefficients that are zero in exact arithmetic
    c[np.abs(c) < 8 * np.finfo(float).eps * np.abs(c).max(initial=0.0)] = 0.0
    return c


def chebyshev_plan(h, order, interval, damping="none") -> ChebyshevPlan:
    if order < 0:
        raise ValueError("order must be nonnegative")
    lo, hi = (float(v) for v in interval)
    if not hi > lo:
        raise ValueError(f"degenerate spectral interval [{lo}, {hi}]")
    c = chebyshev_coefficients(h, order, (lo, hi))
    if damping == "jackson":
        c = c * jackson_factors(order)
    elif damping != "none":
        raise ValueError(f"unknown damping {damping!r}")
    return ChebyshevPlan(order=order, coeffs=c, damping=damping, spectral_interval=(lo, hi))


def chebyshev_filter(op, h, x, plan: ChebyshevPlan | None = None, order=30, damping="none"):
    """Approximate H x with the three-term Chebyshev recurrence (``order`` mat-vecs)."""
    _require_symmetric(op)
    A = MatvecOperator.wrap(op)
    if plan is None:
        plan = chebyshev_plan(h, order, estimate_spectral_interval(op), damping)
    lo, hi = plan.spectral_interval
    mid, half = (lo + hi) / 2, (hi - lo) / 2
    c = plan.coeffs
    x = np.asarray(x, float)
    t_prev = x
    y = c[0] * t_prev
    if plan.order == 0:
        return y
    t_cur = (A.matvec(t_prev) - mid * t_prev) / half
    y = y + c[1] * t_cur
    for j in range(2, plan.order + 1):
        t_next = 2 * (A.matvec(t_cur) - mid * t_cur) / half - t_prev
        y = y + c[j] * t_next
        t_prev, t_cur = t_cur, t_next
    return y


def chebyshev_error_bound(plan: ChebyshevPlan, h, eigenvalues) -> float:
    """max_k |p(l_k) - h(l_k)|, a bound on ||Hx - p(R)x|| / ||x|| for symmetric R."""
    lam = np.asarray(eigenvalues, float)
    return float(np.max(np.abs(plan.realized(lam) - np.asarray(h(lam), float))))


# ---------------------------------------------------------------------------
# Lanczos

@dataclass(frozen=True)
class LanczosPlan:
    p: int
    reorthogonalize: bool | None = None  # None: on when N <= 2000


def lanczos_filter(op, h, x, plan: LanczosPlan | int = 30, return_info=False):
    """H x ~ ||x|| V_p h(H_p) e_1 with H_p the Lanczos tridiagonal matrix.

    An invariant subspace found before ``p`` steps (beta below 1e-14 relative
    to the operator scale) ends the iteration early; the result is then exact
    on that subspace and ``info["breakdown"]`` is set.
    """
    _require_symmetric(op)
    if isinstance(plan, int):
        plan = LanczosPlan(plan)
    A = MatvecOperator.wrap(op)
    n = A.shape[0]
    if plan.p > n or plan.p < 1:
        raise ValueError(f"Krylov dimension must lie in [1, {n}], got {plan.p}")
    reorth = plan.reorthogonalize if plan.reorthogonalize is not None else n <= 2000
    x = np.asarray(x, float)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise ValueError("lanczos_filter needs a nonzero signal")

    V = np.zeros((n, plan.p))
    alpha, beta = [], []
    V[:, 0] = x / nrm
    breakdown = False
    scale = 0.0
    k = 0
    for k in range(plan.p):
        w = A.matvec(V[:, k])
        if k > 0:
            w = w - beta[k - 1] * V[:, k - 1]
        a = float(V[:, k] @ w)
        w = w - a * V[:, k]
        if reorth:
            basis = V[:, :k + 1]
            for _ in range(2):
                w = w - basis @ (basis.T @ w)
        alpha.append(a)
        b = float(np.linalg.norm(w))
        scale = max(scale, abs(a), b)
        if k + 1 == plan.p:
            break
        if b < 1e-14 * max(scale, 1.0):
            breakdown = True
            break
        beta.append(b)
        V[:, k + 1] = w / b
    m = len(alpha)
    theta, S = la.eigh_tridiagonal(np.array(alpha), np.array(beta[:m - 1]))
    lo, hi = getattr(h, "domain", (-math.inf, math.inf))
    # Ritz values can stray past the response domain by rounding
    theta = np.clip(theta, lo, hi)
    hk = np.asarray(h(theta), float)
    y = nrm * V[:, :m] @ (S @ (hk * S[0, :]))
    if return_info:
        return y, {"krylov_dim": m, "breakdown": breakdown, "matvecs": A.n_matvecs}
    return y


# ---------------------------------------------------------------------------
# ARMA recursion

@dataclass(frozen=True)
class ArmaRecursionPlan:
    """Partial-fraction split of an ARMA response for the first-order recursion.

    With M = (lmax - lmin) I - R and mu the eigenvalues of M, each term is
    r_k / (mu - rho_k), realized by y <- c_k M y + d_k x with c = 1/rho,
    d = -r/rho. ``direct`` holds the polynomial part (in lambda) when q >= p.
    """

    poles: np.ndarray
    residues: np.ndarray
    c: np.ndarray
    d: np.ndarray
    direct: np.ndarray
    shift: float
    spectral_interval: tuple
    contraction: float
    max_iters: int = 1000
    conv_tol: float = 1e-10
    recombination_error: float = 0.0


def arma_recursion_plan(design, interval, max_iters=1000, conv_tol=1e-10, check_points=257) -> ArmaRecursionPlan:
    """Split ``design`` (an ArmaDesign or FilterResponse of rational form) into first-order terms.

    ``interval`` brackets the spectrum of a symmetric PSD operator.
    """
    if hasattr(design, "params"):
        if design.form != "rational":
            raise GSPError(f"the ARMA recursion needs a rational response, got form {design.form!r}; "
                           "fit one with design_arma_shank")
        num, den = np.asarray(design.params["num"], float), np.asarray(design.params["den"], float)
    else:
        num, den = np.asarray(design.b, float), np.concatenate([[1.0], np.asarray(design.a, float)])
    den = np.trim_zeros(den, "b")
    num = np.trim_zeros(num, "b") if np.any(num) else np.zeros(1)
    lo, hi = (float(v) for v in interval)
    shift = hi - lo

    # polynomial division in descending powers of lambda
    qd, rem = np.polydiv(num[::-1], den[::-1])
    direct = qd[::-1] if np.any(qd) else np.zeros(0)
    if len(den) > 1:
        lam_poles = np.roots(den[::-1])
        if len(lam_poles) > 1:
            gaps = np.abs(lam_poles[:, None] - lam_poles[None, :])
            np.fill_diagonal(gaps, np.inf)
            # np.roots splits a double root by about sqrt(eps)
            if gaps.min() < 1e-6 * max(1.0, np.abs(lam_poles).max()):
                raise UnstableDesignError("repeated pole in the ARMA denominator; only simple poles are supported")
        dden = np.polyder(den[::-1])
        if np.any(np.abs(np.polyval(dden, lam_poles)) < 1e-12 * np.abs(den).max()):
            raise UnstableDesignError("repeated pole in the ARMA denominator; only simple poles are supported")
        lam_res = np.polyval(rem, lam_poles) / np.polyval(dden, lam_poles)
    else:
        lam_poles = lam_res = np.zeros(0, complex)
    # r'/(lambda - p) with lambda = shift - mu  ->  -r'/(mu - (shift - p))
    rho = shift - lam_poles
    r = -lam_res
    c = 1.0 / rho
    d = -r * c

    mu_max = max(abs(shift - lo), abs(shift - hi))
    contraction = float(np.max(np.abs(c)) * mu_max) if len(c) else 0.0
    if contraction >= 1.0:
        raise UnstableDesignError(
            f"recursion would diverge: spectral radius bound |c| * rho(M) = {contraction:.4f} >= 1")

    grid = np.linspace(lo, hi, check_points)
    target = npoly.polyval(grid, num) / npoly.polyval(grid, den)
    mu = shift - grid
    recon = npoly.polyval(grid, direct) if len(direct) else np.zeros_like(grid)
    recon = recon + np.sum(r[:, None] / (mu[None, :] - rho[:, None]), axis=0) if len(r) else recon
    err = float(np.max(np.abs(recon - target)))
    if err > 1e-8 * max(1.0, np.abs(target).max()):
        raise GSPError(f"partial-fraction recombination error {err:.3e} exceeds 1e-8")
    return ArmaRecursionPlan(poles=rho, residues=r, c=c, d=d, direct=direct, shift=shift,
                             spectral_interval=(lo, hi), contraction=contraction,
                             max_iters=max_iters, conv_tol=conv_tol, recombination_error=err)


def arma_recursion_filter(op, design, x, plan: ArmaRecursionPlan | None = None, return_info=False,
                          max_iters=1000, conv_tol=1e-10):
    """Filter by iterating y(t+1) = c M y(t) + d x for each first-order term and summing."""
    _require_symmetric(op)
    A = MatvecOperator.wrap(op)
    if plan is None:
        plan = arma_recursion_plan(design, estimate_spectral_interval(op), max_iters, conv_tol)
    if plan.contraction >= 1:
        raise UnstableDesignError(f"spectral radius condition violated ({plan.contraction:.4f} >= 1)")
    x = np.asarray(x, float)
    xnorm = float(np.linalg.norm(x))
    out = np.zeros(len(x), dtype=complex)
    history, iters = [], []
    if xnorm > 0:
        for ck, dk in zip(plan.c, plan.d):
            y = np.zeros(len(x), dtype=complex)
            steps = []
            for t in range(plan.max_iters):
                y_next = ck * (plan.shift * y - A.matvec(y)) + dk * x
                step = float(np.linalg.norm(y_next - y))
                steps.append(step)
                y = y_next
                if step < plan.conv_tol * xnorm:
                    break
            else:
                raise ConvergenceError(f"ARMA recursion did not converge in {plan.max_iters} iterations "
                                       f"(last step {steps[-1]:.3e})")
            out += y
            history.append(steps)
            iters.append(len(steps))
        if len(plan.direct):
            v = x.copy()
            out += plan.direct[0] * v
            for coef in plan.direct[1:]:
                v = A.matvec(v)
                out += coef * v
    result = out.real
    if return_info:
        r = plan.contraction
        tail = max((h[-1] for h in history), default=0.0)
        return result, {"iterations": iters, "steps": history, "contraction": r,
                        "error_bound": len(history) * tail * r / (1 - r) if r < 1 else math.inf,
                        "matvecs": A.n_matvecs}
    return result
