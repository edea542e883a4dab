"""File formats: edge lists, signals, spectra, wavelet coefficients, responses and decomposition archives.

Floats are written with 17 significant digits so doubles survive a round trip.
Every numeric output gets a ``<file>.json`` sidecar describing how it was made.
"""

from __future__ import annotations

import csv
import json
import platform
from importlib import metadata
from pathlib import Path

import numpy as np

from .errors import FileFormatError
from .graph import Graph, build_graph

FLOAT = "%.17g"


def _f(v) -> str:
    return FLOAT % float(v)


def _open_read(path):
    try:
        return open(path, newline="")
    except OSError as exc:
        raise FileFormatError(f"cannot read {path}: {exc.strerror}") from None


def versions() -> dict:
    out = {"python": platform.python_version()}
    for dist in ("artifact", "numpy", "scipy", "numba"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            pass
    return out


def write_sidecar(path, **meta):
    """Write ``path + '.json'`` with the given metadata plus library versions."""
    side = Path(str(path) + ".json")
    payload = {"file": Path(path).name, **meta, "versions": versions()}
    side.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")
    return side


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (tuple, set)):
        return list(o)
    return str(o)


# ---------------------------------------------------------------------------
# Graphs

def read_graph(path) -> Graph:
    """Parse ``src<TAB>dst<TAB>weight`` lines; ``directed=true|false`` header and ``#`` comments allowed.

    A ``# nodes=N`` comment fixes the node count so isolated trailing nodes survive.
    """
    directed = False
    n_nodes = None
    edges = []
    with _open_read(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("nodes="):
                    n_nodes = int(body.split("=", 1)[1])
                continue
            if line.lower().startswith("directed="):
                val = line.split("=", 1)[1].strip().lower()
                if val not in ("true", "false"):
                    raise FileFormatError(f"{path}:{lineno}: directed must be true or false")
                directed = val == "true"
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) not in (2, 3):
                raise FileFormatError(f"{path}:{lineno}: expected src<TAB>dst<TAB>weight")
            try:
                s, d = int(parts[0]), int(parts[1])
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise FileFormatError(f"{path}:{lineno}: malformed edge {line!r}") from None
            if s < 0 or d < 0:
                raise FileFormatError(f"{path}:{lineno}: node ids must be nonnegative integers")
            edges.append((s, d, w))
    if n_nodes is None:
        n_nodes = max((max(s, d) for s, d, _ in edges), default=-1) + 1
    return build_graph(edges, directed=directed, n_nodes=n_nodes)


def write_graph(g: Graph, path):
    with open(path, "w") as fh:
        fh.write(f"directed={'true' if g.directed else 'false'}\n")
        fh.write(f"# nodes={g.n_nodes}\n")
        for s, d, w in g.edges():
            fh.write(f"{s}\t{d}\t{_f(w)}\n")
    return Path(path)


# ---------------------------------------------------------------------------
# Signals

def read_signal(path, n_nodes=None) -> np.ndarray:
    """CSV ``node,value`` (optional ``value_imag`` column); missing nodes raise."""
    with _open_read(path) as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FileFormatError(f"{path}: empty signal file")
    header = [c.strip() for c in rows[0]]
    if header[:2] != ["node", "value"]:
        raise FileFormatError(f"{path}: header must start with node,value")
    body = [r for r in rows[1:] if r]
    try:
        nodes = np.array([int(r[0]) for r in body], dtype=np.int64)
        vals = np.array([float(r[1]) for r in body])
        if len(header) > 2 and header[2] == "value_imag":
            vals = vals + 1j * np.array([float(r[2]) for r in body])
    except (ValueError, IndexError):
        raise FileFormatError(f"{path}: malformed row") from None
    n = int(n_nodes) if n_nodes is not None else (int(nodes.max()) + 1 if nodes.size else 0)
    if nodes.size and (nodes.min() < 0 or nodes.max() >= n):
        raise FileFormatError(f"{path}: node id out of range for N={n}")
    out = np.zeros(n, dtype=vals.dtype)
    seen = np.zeros(n, dtype=bool)
    out[nodes] = vals
    seen[nodes] = True
    if not seen.all():
        raise FileFormatError(f"{path}: no value for nodes {np.flatnonzero(~seen)[:5].tolist()}")
    return out


def write_signal(x, path, **meta):
    x = np.asarray(x)
    cplx = np.iscomplexobj(x)
    with open(path, "w", newline="") as fh:
        fh.write("node,value,value_imag\n" if cplx else "node,value\n")
        for i, v in enumerate(x):
            fh.write(f"{i},{_f(v.real)},{_f(v.imag)}\n" if cplx else f"{i},{_f(v)}\n")
    if meta:
        write_sidecar(path, **meta)
    return Path(path)


# ---------------------------------------------------------------------------
# Spectra

def write_gft(basis, xhat, path, **meta):
    xhat = np.asarray(xhat, dtype=complex)
    with open(path, "w") as fh:
        fh.write("k,frequency,coefficient_real,coefficient_imag\n")
        for k, (nu, c) in enumerate(zip(basis.frequencies, xhat)):
            fh.write(f"{k},{_f(nu)},{_f(c.real)},{_f(c.imag)}\n")
    write_sidecar(path, **meta)
    return Path(path)


def read_gft(path):
    """Returns ``(frequencies, coefficients)``."""
    with _open_read(path) as fh:
        rows = list(csv.DictReader(fh))
    nu = np.array([float(r["frequency"]) for r in rows])
    c = np.array([float(r["coefficient_real"]) + 1j * float(r["coefficient_imag"]) for r in rows])
    return nu, c


# ---------------------------------------------------------------------------
# Responses and designs

def write_json(obj, path, **meta):
    payload = obj.to_dict() if hasattr(obj, "to_dict") else obj
    Path(path).write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")
    if meta:
        write_sidecar(path, **meta)
    return Path(path)


def read_response(path):
    from .responses import FilterResponse

    with _open_read(path) as fh:
        return FilterResponse.from_dict(json.load(fh))


def read_arma(path):
    from .filters import ArmaDesign

    with _open_read(path) as fh:
        return ArmaDesign.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Wavelets

def write_frame(frame, path):
    return write_json(frame.to_dict(), path)


def read_frame(path):
    from .sgwt import WaveletFrame

    with _open_read(path) as fh:
        return WaveletFrame.from_dict(json.load(fh))


def write_sgwt(frame, coeffs, path, **meta):
    with open(path, "w") as fh:
        fh.write("channel,scale,node,value\n")
        for a, v in enumerate(coeffs.scaling):
            fh.write(f"scaling,0,{a},{_f(v)}\n")
        for s, row in zip(frame.scales, coeffs.wavelet):
            for a, v in enumerate(row):
                fh.write(f"wavelet,{_f(s)},{a},{_f(v)}\n")
    write_sidecar(path, frame=frame.to_dict(), **meta)
    return Path(path)


def read_sgwt(path, frame):
    from .sgwt import SgwCoefficients

    with _open_read(path) as fh:
        rows = list(csv.DictReader(fh))
    scaling = {int(r["node"]): float(r["value"]) for r in rows if r["channel"] == "scaling"}
    n = len(scaling)
    index = {float(s): k for k, s in enumerate(frame.scales)}
    wav = np.zeros((frame.m, n))
    for r in rows:
        if r["channel"] == "wavelet":
            wav[index[float(r["scale"])], int(r["node"])] = float(r["value"])
    return SgwCoefficients(wavelet=wav, scaling=np.array([scaling[i] for i in range(n)]), frame_id=frame.frame_id)


# ---------------------------------------------------------------------------
# Decomposition archives

def _write_vector(v, path, key):
    with open(path, "w") as fh:
        fh.write(f"{key},value\n")
        for i, x in enumerate(np.asarray(v, float)):
            fh.write(f"{i},{_f(x)}\n")


def _read_vector(path):
    with _open_read(path) as fh:
        rows = [r for r in csv.reader(fh)][1:]
    return np.array([float(r[1]) for r in rows if r])


def _partition_from_dict(d):
    from .filterbank import NodePartition2, SupernodePartition

    if d["type"] == "supernode":
        return SupernodePartition(tuple(tuple(s) for s in d["subsets"]))
    if d["type"] == "bipartition":
        return NodePartition2(tuple(d["V0"]), tuple(d["V1"]))
    raise FileFormatError(f"unknown partition type {d['type']!r}")


def write_decomposition(decomp, out_dir):
    """``level_k/{coarse_graph.tsv, approx.csv, details.csv, partition.json}`` plus the input graph."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_graph(decomp.levels[0].graph, out / "input_graph.tsv")
    write_sidecar(out / "input_graph.tsv", policy=decomp.policy)
    (out / "meta.json").write_text(json.dumps({"policy": decomp.policy, "depth": decomp.depth, "n": decomp.n,
                                               **decomp.meta, "versions": versions()}, indent=2) + "\n")
    for k, lv in enumerate(decomp.levels, 1):
        d = out / f"level_{k}"
        d.mkdir(exist_ok=True)
        write_graph(lv.coarse, d / "coarse_graph.tsv")
        _write_vector(lv.approx, d / "approx.csv", "node")
        _write_vector(lv.details, d / "details.csv", "index")
        (d / "partition.json").write_text(json.dumps(lv.partition.to_dict()) + "\n")
        for name in ("coarse_graph.tsv", "approx.csv", "details.csv"):
            write_sidecar(d / name, level=k, policy=decomp.policy)
    return out


def read_decomposition(in_dir):
    from .filterbank import Level, MultiresDecomposition

    base = Path(in_dir)
    if not base.is_dir():
        raise FileFormatError(f"decomposition archive {in_dir} not found")
    with _open_read(base / "meta.json") as fh:
        meta = json.load(fh)
    g = read_graph(base / "input_graph.tsv")
    levels = []
    for k in range(1, int(meta["depth"]) + 1):
        d = base / f"level_{k}"
        coarse = read_graph(d / "coarse_graph.tsv")
        with _open_read(d / "partition.json") as fh:
            part = _partition_from_dict(json.load(fh))
        levels.append(Level(g, coarse, _read_vector(d / "approx.csv"), _read_vector(d / "details.csv"), part))
        g = coarse
    extra = {k: v for k, v in meta.items() if k not in ("policy", "depth", "n", "versions")}
    return MultiresDecomposition(levels, meta["policy"], int(meta["n"]), extra)


# ---------------------------------------------------------------------------
# Plot data

def emit_plot_data(obj, out_dir, signal=None, response=None, basis=None, noise_floor=1e-14):
    """Write plot-ready TSV files and return their paths.

    * SpectralBasis with ``signal``: ``spectrum.tsv`` of (frequency, |x_hat|);
      magnitudes below ``noise_floor * ||x||`` are written as 0.
    * ChebyshevPlan with ``response`` and ``basis``: ``response.tsv`` sampled on
      the eigenvalues, headed by a metadata line listing the order+1 coefficients.
    * MultiresDecomposition: one ``approx_level_k.tsv`` per level.
    """
    from .fast import ChebyshevPlan
    from .filterbank import MultiresDecomposition

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if isinstance(obj, MultiresDecomposition):
        for k, lv in enumerate(obj.levels, 1):
            p = out / f"approx_level_{k}.tsv"
            with open(p, "w") as fh:
                fh.write("node\tvalue\n")
                for i, v in enumerate(lv.approx):
                    fh.write(f"{i}\t{_f(v)}\n")
            paths.append(p)
    elif isinstance(obj, ChebyshevPlan):
        if response is None or basis is None:
            raise ValueError("a Chebyshev response panel needs response= and basis=")
        lam = np.real(basis.eigenvalues)
        p = out / "response.tsv"
        with open(p, "w") as fh:
            fh.write(f"# order={obj.order} damping={obj.damping} coefficients="
                     + ",".join(_f(c) for c in obj.coeffs) + "\n")
            fh.write("lambda\texact\trealized\n")
            for l, e, r in zip(lam, response(lam), obj.realized(lam)):
                fh.write(f"{_f(l)}\t{_f(e)}\t{_f(r)}\n")
        paths.append(p)
    elif hasattr(obj, "eigenvalues"):
        if signal is None:
            raise ValueError("a spectrum panel needs signal=")
        x = np.asarray(signal)
        mag = np.abs(obj.V @ x)
        mag[mag < noise_floor * max(np.linalg.norm(x), np.finfo(float).tiny)] = 0.0
        p = out / "spectrum.tsv"
        with open(p, "w") as fh:
            fh.write("frequency\tabs_coefficient\n")
            for nu, m in zip(obj.frequencies, mag):
                fh.write(f"{_f(nu)}\t{_f(m)}\n")
        paths.append(p)
    else:
        raise TypeError(f"no plot data defined for {type(obj).__name__}")
    for p in paths:
        write_sidecar(p, panel=p.stem)
    return paths
