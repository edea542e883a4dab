"""Compare the numba and numpy kernel backends, plus Lanczos against Chebyshev.

Usage: ``python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 5]``.
The first numba call of each kernel includes JIT compilation and is reported separately.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np
import scipy.sparse as sp

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from graphsp import _kernels, fast  # noqa: E402
from graphsp.filters import apply_exact  # noqa: E402
from graphsp.graph import build_graph  # noqa: E402
from graphsp.operators import reference_operator  # noqa: E402
from graphsp.responses import FilterResponse  # noqa: E402
from graphsp.spectral import decompose  # noqa: E402


def best_of(f, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_kernels(n, repeat):
    rng = np.random.default_rng(0)
    A = sp.random(n, n, density=10 / n, format="csr", random_state=0)
    x = rng.standard_normal(n)
    m = 5 * n
    src, dst = rng.integers(0, n, m), rng.integers(0, n, m)
    blocks = [rng.standard_normal(int(k)) for k in rng.integers(1, 8, n // 4)]
    cases = {
        "csr_matvec": lambda impl: impl(A.indptr, A.indices, A.data, x),
        "greedy_match": lambda impl: impl(n, src, dst, -1),
        "helmert_block": lambda impl: [impl(b) for b in blocks],
    }
    print(f"{'kernel':<15}{'numpy [s]':>12}{'numba [s]':>12}{'first numba [s]':>17}{'speedup':>10}")
    for name, call in cases.items():
        np_impl = getattr(_kernels, f"{name}_numpy")
        t_np = best_of(lambda: call(np_impl), repeat)
        if _kernels.numba is None:
            print(f"{name:<15}{t_np:>12.4g}{'n/a':>12}")
            continue
        nb_impl = getattr(_kernels, f"{name}_numba")
        t0 = time.perf_counter()
        call(nb_impl)
        first = time.perf_counter() - t0
        t_nb = best_of(lambda: call(nb_impl), repeat)
        print(f"{name:<15}{t_np:>12.4g}{t_nb:>12.4g}{first:>17.4g}{t_np / t_nb:>10.1f}x")


def clustered_outlier_graph(seed=0):
    """200 nodes: a dense cluster of weak edges plus one very heavy edge.

    The Laplacian spectrum is a tight bulk with a single large outlier, the
    case where Krylov methods adapt to the spectrum and Chebyshev cannot.
    """
    rng = np.random.default_rng(seed)
    edges = [(i, i + 1, 1.0) for i in range(198)]
    edges += [(int(a), int(b), 1.0) for a, b in rng.integers(0, 199, (400, 2)) if a != b]
    edges.append((198, 199, 500.0))
    seen, out = set(), []
    for a, b, w in edges:
        key = (min(a, b), max(a, b))
        if key not in seen:
            seen.add(key)
            out.append((a, b, w))
    return build_graph(out, n_nodes=200)


def bench_lanczos_vs_chebyshev():
    op = reference_operator(clustered_outlier_graph(), "L")
    b = decompose(op)
    x = np.random.default_rng(1).standard_normal(200)
    h = FilterResponse.named("heat", nu0=1.0)
    exact = apply_exact(b, h, x)
    iv = fast.estimate_spectral_interval(op)
    lam = b.eigenvalues.real
    print(f"\nheat filter on a 200-node graph, bulk in [{lam[1]:.3g}, {lam[-2]:.3g}], outlier {lam[-1]:.4g}")
    print(f"{'matvecs':>8}{'chebyshev rel err':>20}{'lanczos rel err':>18}")
    for p in (5, 10, 20, 40, 80):
        yc = fast.chebyshev_filter(op, h, x, fast.chebyshev_plan(h, p, iv))
        yl = fast.lanczos_filter(op, h, x, p)
        ec = np.linalg.norm(yc - exact) / np.linalg.norm(exact)
        el = np.linalg.norm(yl - exact) / np.linalg.norm(exact)
        print(f"{p:>8}{ec:>20.3e}{el:>18.3e}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    print(f"active backend at import: {_kernels.BACKEND}")
    bench_kernels(args.n, args.repeat)
    bench_lanczos_vs_chebyshev()


if __name__ == "__main__":
    main()
