"""Hot inner loops, compiled with numba when available.

Every kernel has a pure-numpy twin with the same signature. The active
implementation is picked once at import time: set ``GSP_DISABLE_NUMBA=1``
(or run without numba installed) to force the numpy path. Both variants are
importable explicitly for testing and benchmarking.
"""

import os

import numpy as np

try:
    import numba
except ModuleNotFoundError:  # pragma: no cover - numba is a soft dependency
    numba = None

_DISABLED = os.environ.get("GSP_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")
USE_NUMBA = numba is not None and not _DISABLED


def _njit(f):
    if numba is None:
        return f
    return numba.njit(cache=True, nogil=True)(f)


# ---------------------------------------------------------------------------
# CSR matrix-vector product

def _csr_matvec_loop(indptr, indices, data, x, out):
    n = indptr.shape[0] - 1
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        out[i] = acc
    return out


def _csr_matvec_cplx_loop(indptr, indices, data, x, out):
    n = indptr.shape[0] - 1
    for i in range(n):
        acc = 0.0j
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        out[i] = acc
    return out


_csr_matvec_real_nb = _njit(_csr_matvec_loop)
_csr_matvec_cplx_nb = _njit(_csr_matvec_cplx_loop)


def csr_matvec_numba(indptr, indices, data, x):
    if np.iscomplexobj(x):
        out = np.empty(indptr.shape[0] - 1, dtype=np.complex128)
        return _csr_matvec_cplx_nb(indptr, indices, data, np.ascontiguousarray(x, dtype=np.complex128), out)
    out = np.empty(indptr.shape[0] - 1, dtype=np.float64)
    return _csr_matvec_real_nb(indptr, indices, data, np.ascontiguousarray(x, dtype=np.float64), out)


def csr_matvec_numpy(indptr, indices, data, x):
    n = indptr.shape[0] - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    prod = data * x[indices]
    if np.iscomplexobj(prod):
        return (np.bincount(rows, weights=prod.real, minlength=n)
                + 1j * np.bincount(rows, weights=prod.imag, minlength=n))
    return np.bincount(rows, weights=prod, minlength=n)


# ---------------------------------------------------------------------------
# Greedy heavy-edge matching over a pre-sorted edge list

def _greedy_match_loop(n, src, dst, max_pairs):
    mate = np.full(n, -1, dtype=np.int64)
    pairs = 0
    for k in range(src.shape[0]):
        if pairs >= max_pairs:
            break
        i = src[k]
        j = dst[k]
        if i != j and mate[i] < 0 and mate[j] < 0:
            mate[i] = j
            mate[j] = i
            pairs += 1
    return mate


_greedy_match_nb = _njit(_greedy_match_loop)


def greedy_match_numba(n, src, dst, max_pairs=-1):
    cap = n // 2 if max_pairs < 0 else max_pairs
    return _greedy_match_nb(n, np.ascontiguousarray(src, dtype=np.int64),
                            np.ascontiguousarray(dst, dtype=np.int64), cap)


def greedy_match_numpy(n, src, dst, max_pairs=-1):
    # Inherently sequential; plain Python loop over numpy buffers.
    cap = n // 2 if max_pairs < 0 else max_pairs
    mate = np.full(n, -1, dtype=np.int64)
    pairs = 0
    for i, j in zip(src.tolist(), dst.tolist()):
        if pairs >= cap:
            break
        if i != j and mate[i] < 0 and mate[j] < 0:
            mate[i] = j
            mate[j] = i
            pairs += 1
    return mate


# ---------------------------------------------------------------------------
# Helmert-style Haar analysis within one block of a partition

def _helmert_block_loop(values, out):
    """Write [mean coefficient, details...] of ``values`` into ``out``."""
    k = values.shape[0]
    total = 0.0
    for i in range(k):
        total += values[i]
    out[0] = total / np.sqrt(k)
    running = values[0]
    for m in range(1, k):
        # m-th detail: element m against the mean of the first m elements
        out[m] = (running - m * values[m]) / np.sqrt(m * (m + 1.0))
        running += values[m]
    return out


_helmert_block_nb = _njit(_helmert_block_loop)


def helmert_block_numba(values):
    out = np.empty(values.shape[0], dtype=np.float64)
    return _helmert_block_nb(np.ascontiguousarray(values, dtype=np.float64), out)


def helmert_block_numpy(values):
    values = np.asarray(values, dtype=np.float64)
    k = values.shape[0]
    out = np.empty(k)
    out[0] = values.sum() / np.sqrt(k)
    if k > 1:
        m = np.arange(1, k)
        csum = np.cumsum(values)[:-1]
        out[1:] = (csum - m * values[1:]) / np.sqrt(m * (m + 1.0))
    return out


def set_backend(name):
    """Switch every kernel to ``"numba"`` or ``"numpy"``; returns the previous name."""
    global csr_matvec, greedy_match, helmert_block, BACKEND
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and numba is None:
        raise RuntimeError("numba is not installed")
    prev = globals().get("BACKEND")
    table = globals()
    csr_matvec = table[f"csr_matvec_{name}"]
    greedy_match = table[f"greedy_match_{name}"]
    helmert_block = table[f"helmert_block_{name}"]
    BACKEND = name
    return prev


set_backend("numba" if USE_NUMBA else "numpy")
