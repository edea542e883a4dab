"""Frequency responses: tabulated, polynomial, rational, and named kernels."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnstableDesignError


def _heat(nu, nu0=1.0):
    return np.exp(-np.asarray(nu) / nu0)


def _ideal_lowpass(nu, cutoff=1.0):
    return (np.asarray(nu) <= cutoff).astype(float)


def _ideal_highpass(nu, cutoff=1.0):
    return (np.asarray(nu) > cutoff).astype(float)


def _delta(nu, nu_star=0.0, tol=1e-9):
    return (np.abs(np.asarray(nu) - nu_star) <= tol).astype(float)


def _constant(nu, c=1.0):
    return np.full(np.shape(nu), float(c))


def _exp_lowpass(nu, cutoff=1.0, power=4.0):
    return np.exp(-(np.asarray(nu) / cutoff) ** power)


def _qmf_low(nu):
    return np.sqrt(np.clip(2.0 - np.asarray(nu, dtype=float), 0.0, None))


def _qmf_high(nu):
    return np.sqrt(np.clip(np.asarray(nu, dtype=float), 0.0, None))


def _sgw(nu, alpha=2.0, beta=2.0, lambda1=1.0, lambda2=2.0, scale=1.0):
    from .sgwt import sgw_kernel

    return sgw_kernel(alpha, beta, lambda1, lambda2)(scale * np.asarray(nu, dtype=float))


KERNELS = {
    "heat": _heat,
    "ideal_lowpass": _ideal_lowpass,
    "ideal_highpass": _ideal_highpass,
    "delta": _delta,
    "constant": _constant,
    "exp_lowpass": _exp_lowpass,
    "qmf_low": _qmf_low,
    "qmf_high": _qmf_high,
    "sgw": _sgw,
}

FORMS = ("tabulated", "polynomial", "rational", "named")


@dataclass(frozen=True, eq=False)
class FilterResponse:
    """Scalar function of frequency.

    Polynomial and rational forms are algebraic in the eigenvalue and are
    evaluated on lambda itself; tabulated and named forms are functions of the
    (real) frequency. Coefficient lists are in ascending powers.
    """

    form: str
    params: dict = field(default_factory=dict)
    domain: tuple = (-math.inf, math.inf)
    func: object = None

    def __post_init__(self):
        if self.form not in FORMS and self.form != "callable":
            raise ValueError(f"unknown response form {self.form!r}")
        lo, hi = (float(v) for v in self.domain)
        if lo > hi:
            raise ValueError(f"empty domain {self.domain}")
        object.__setattr__(self, "domain", (lo, hi))
        if self.form == "named" and self.params.get("kernel") not in KERNELS:
            raise ValueError(f"unknown kernel {self.params.get('kernel')!r}")
        if self.form == "rational":
            self._check_denominator()

    # -- constructors -----------------------------------------------------
    @classmethod
    def polynomial(cls, coeffs, domain=(-math.inf, math.inf)):
        return cls("polynomial", {"coeffs": [float(c) for c in coeffs]}, domain)

    @classmethod
    def rational(cls, num, den, domain=(-math.inf, math.inf)):
        den = [float(c) for c in den]
        if not den or den[0] == 0:
            raise ValueError("denominator must have a nonzero constant term")
        # normalize so the constant term is 1
        num = [float(c) / den[0] for c in num]
        den = [c / den[0] for c in den]
        return cls("rational", {"num": num, "den": den}, domain)

    @classmethod
    def tabulated(cls, lambdas, values):
        lam = np.asarray(lambdas, float)
        order = np.argsort(lam)
        lam, vals = lam[order], np.asarray(values, float)[order]
        return cls("tabulated", {"lambdas": lam.tolist(), "values": vals.tolist()},
                   (float(lam[0]), float(lam[-1])))

    @classmethod
    def named(cls, kernel, domain=(-math.inf, math.inf), **params):
        return cls("named", {"kernel": kernel, **params}, domain)

    @classmethod
    def from_callable(cls, f, domain=(-math.inf, math.inf), label="callable"):
        """Wrap an arbitrary vectorized function; not serializable."""
        return cls("callable", {"label": label}, domain, func=f)

    # -- evaluation -------------------------------------------------------
    @property
    def algebraic(self) -> bool:
        return self.form in ("polynomial", "rational")

    def __call__(self, lam):
        lam = np.asarray(lam)
        if self.form == "polynomial":
            return np.polynomial.polynomial.polyval(lam, self.params["coeffs"])
        if self.form == "rational":
            num = np.polynomial.polynomial.polyval(lam, self.params["num"])
            den = np.polynomial.polynomial.polyval(lam, self.params["den"])
            return num / den
        if self.form == "tabulated":
            return np.interp(np.real(lam), self.params["lambdas"], self.params["values"])
        if self.form == "named":
            kw = {k: v for k, v in self.params.items() if k != "kernel"}
            return KERNELS[self.params["kernel"]](np.real(lam) if np.iscomplexobj(lam) else lam, **kw)
        return np.asarray(self.func(lam))

    def on_basis(self, basis, check_domain=True):
        """Response per eigenspace, broadcast to every mode of ``basis``."""
        src = basis.eigenvalues if self.algebraic else basis.frequencies
        reps = np.array([src[list(idx)].mean() for idx in basis.eigenspaces])
        if check_domain:
            self.check_domain(np.real(reps))
        vals = np.asarray(self(reps))
        out = np.empty(basis.n, dtype=vals.dtype)
        for v, idx in zip(vals, basis.eigenspaces):
            out[list(idx)] = v
        return out

    def check_domain(self, values, rtol=1e-9):
        lo, hi = self.domain
        values = np.asarray(values, float)
        scale = max(1.0, np.max(np.abs(values)) if values.size else 1.0)
        bad = (values < lo - rtol * scale) | (values > hi + rtol * scale)
        if bad.any():
            raise DomainError(f"eigenvalue {float(values[bad][0]):.12g} outside response domain [{lo}, {hi}]")

    def _check_denominator(self):
        den = np.asarray(self.params["den"], float)
        lo, hi = self.domain
        if len(den) > 1:
            roots = np.roots(den[::-1])
            real = roots[np.abs(roots.imag) <= 1e-12 * max(1.0, np.abs(roots).max())].real
            inside = real[(real >= lo) & (real <= hi)]
            if inside.size:
                raise UnstableDesignError(f"denominator root at lambda={float(inside[0]):.6g} inside domain [{lo}, {hi}]")
        if np.isfinite(lo) and np.isfinite(hi):
            grid = np.linspace(lo, hi, 1000)
            vals = np.abs(np.polynomial.polynomial.polyval(grid, den))
            if vals.min() <= 1e-8:
                k = int(np.argmin(vals))
                raise UnstableDesignError(f"denominator vanishes near lambda={float(grid[k]):.6g}")

    # -- serialization ----------------------------------------------------
    def to_dict(self):
        if self.form == "callable":
            raise TypeError("callable responses cannot be serialized")
        return {"form": self.form, "params": self.params, "domain": list(self.domain)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["form"], dict(d.get("params", {})), tuple(d.get("domain", (-math.inf, math.inf))))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))

    @property
    def response_id(self) -> str:
        if self.form == "callable":
            return f"callable:{self.params.get('label')}"
        return json.dumps(self.to_dict(), sort_keys=True)


def parse_response(spec: str, domain=(-math.inf, math.inf)) -> FilterResponse:
    """Parse a compact CLI spec such as ``tikhonov:0.5`` or ``heat:2``."""
    name, _, arg = spec.partition(":")
    args = [float(a) for a in arg.split(",")] if arg else []
    if name == "tikhonov":
        from .filters import tikhonov_response

        return tikhonov_response(args[0] if args else 1.0)
    if name == "heat":
        return FilterResponse.named("heat", domain, nu0=args[0] if args else 1.0)
    if name in ("lowpass", "ideal_lowpass"):
        return FilterResponse.named("ideal_lowpass", domain, cutoff=args[0] if args else 1.0)
    if name in ("highpass", "ideal_highpass"):
        return FilterResponse.named("ideal_highpass", domain, cutoff=args[0] if args else 1.0)
    if name == "constant":
        return FilterResponse.named("constant", domain, c=args[0] if args else 1.0)
    if name == "poly":
        return FilterResponse.polynomial(args, domain)
    raise ValueError(f"unknown response spec {spec!r}")
