"""Command-line entry point: ``graphsp <command> [options]``.

Module errors exit with status 1 and a single JSON line ``{"code", "message"}`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fast, filterbank, io, sgwt
from .errors import FileFormatError, GSPError
from .filters import apply_exact
from .operators import Kind, OperatorOptions, reference_operator
from .responses import parse_response
from .spectral import decompose, gft

COMMANDS = ("operator", "gft", "filter", "sgwt", "fb", "multires", "reconstruct")
BACKENDS = ("exact", "chebyshev", "lanczos", "arma")


@dataclass
class RunConfig:
    command: str
    graph_path: str | None = None
    signal_path: str | None = None
    operator_kind: str = "L"
    backend: str = "exact"
    output_dir: str = "."
    params: dict = field(default_factory=dict)

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend != "exact" and self.command != "filter":
            raise ValueError(f"--backend {self.backend} only applies to the filter command")
        for p in (self.graph_path, self.signal_path):
            if p is not None and not Path(p).is_file():
                raise FileFormatError(f"input file {p} does not exist")
        return self


def _options(args):
    return OperatorOptions(isolated_policy=args.isolated_policy, teleport=args.teleport,
                           pi_mode=args.pi_mode, seed=args.seed)


def _meta(cfg: RunConfig, **extra):
    return {"command": cfg.command, "operator": cfg.operator_kind, "backend": cfg.backend,
            "seed": cfg.params.get("seed", 0), "tolerances": {"tol": cfg.params.get("tol")}, **extra}


def _load(cfg):
    g = io.read_graph(cfg.graph_path)
    x = io.read_signal(cfg.signal_path, g.n_nodes) if cfg.signal_path else None
    return g, x


def run(cfg: RunConfig, args) -> dict:
    """Execute one command and return a summary of the files written."""
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    if cfg.command == "reconstruct":
        decomp = io.read_decomposition(args.archive)
        x = filterbank.reconstruct(decomp)
        written.append(io.write_signal(x, out / "reconstructed.csv", **_meta(cfg, archive=args.archive,
                                                                               policy=decomp.policy)))
        return {"written": [str(p) for p in written]}

    g, x = _load(cfg)
    opts = _options(args)

    if cfg.command == "operator":
        op = reference_operator(g, cfg.operator_kind, opts)
        p = out / "operator.tsv"
        M = op.matrix.tocoo()
        with open(p, "w") as fh:
            fh.write("row\tcol\tvalue\n")
            for i, j, v in zip(M.row, M.col, M.data):
                fh.write(f"{i}\t{j}\t{io.FLOAT % v}\n")
        io.write_sidecar(p, **_meta(cfg, symmetric=op.symmetric, graph_id=op.graph_id,
                                    info={k: v for k, v in op.info.items() if k != "transition"}))
        written.append(p)
        if op.pi is not None:
            written.append(io.write_signal(op.pi, out / "pi.csv", **_meta(cfg, quantity="stationary distribution")))
        return {"written": [str(p) for p in written], "n": op.n, "symmetric": op.symmetric}

    if x is None and cfg.command != "fb":
        raise ValueError(f"{cfg.command} needs --signal")

    if cfg.command == "gft":
        basis = decompose(reference_operator(g, cfg.operator_kind, opts), convention=args.convention)
        written.append(io.write_gft(basis, gft(basis, x), out / "gft.csv",
                                    **_meta(cfg, convention=args.convention)))
        if args.plot_data:
            written += io.emit_plot_data(basis, out, signal=x)
        return {"written": [str(p) for p in written]}

    if cfg.command == "filter":
        op = reference_operator(g, cfg.operator_kind, opts)
        h = parse_response(args.response)
        info = {}
        if cfg.backend == "exact":
            y = apply_exact(decompose(op), h, x)
        else:
            interval = fast.estimate_spectral_interval(op, seed=args.seed)
            info["spectral_interval"] = [interval.lo, interval.hi]
            if cfg.backend == "chebyshev":
                plan = fast.chebyshev_plan(h, args.order, interval, args.damping)
                y = fast.chebyshev_filter(op, h, x, plan)
                info.update(order=args.order, damping=args.damping)
                if args.plot_data:
                    written += io.emit_plot_data(plan, out, response=h, basis=decompose(op))
            elif cfg.backend == "lanczos":
                y, linfo = fast.lanczos_filter(op, h, x, fast.LanczosPlan(args.krylov_dim), return_info=True)
                info.update(krylov_dim=linfo["krylov_dim"], breakdown=linfo["breakdown"])
            else:
                plan = fast.arma_recursion_plan(h, interval, args.max_iters, args.tol)
                y, ainfo = fast.arma_recursion_filter(op, h, x, plan, return_info=True)
                info.update(iterations=ainfo["iterations"], contraction=ainfo["contraction"],
                            max_iters=args.max_iters)
        written.append(io.write_signal(y, out / "filtered.csv",
                                       **_meta(cfg, response=h.to_dict(), **info)))
        return {"written": [str(p) for p in written], "output": np.asarray(y).tolist() if len(y) <= 20 else None}

    if cfg.command == "sgwt":
        basis = decompose(reference_operator(g, cfg.operator_kind, opts))
        frame = sgwt.default_frame(basis, m=args.scales)
        bounds = sgwt.frame_bounds(frame, basis)
        coeffs = sgwt.sgwt_forward(basis, frame, x)
        written.append(io.write_frame(frame, out / "frame.json"))
        written.append(io.write_sgwt(frame, coeffs, out / "sgwt.csv",
                                     **_meta(cfg, frame_bounds=[bounds.A, bounds.B])))
        return {"written": [str(p) for p in written], "frame_bounds": [bounds.A, bounds.B]}

    if cfg.command in ("fb", "multires"):
        policy = "two-channel" if cfg.command == "fb" else args.policy
        depth = 1 if cfg.command == "fb" else args.depth
        if x is None:
            raise ValueError(f"{cfg.command} needs --signal")
        decomp = filterbank.multires_cascade(g, x, depth, policy, args.target_ratio)
        arch = io.write_decomposition(decomp, out)
        written.append(arch)
        if args.plot_data:
            written += io.emit_plot_data(decomp, out)
        return {"written": [str(p) for p in written], "coefficients": decomp.coefficient_count()}

    raise ValueError(f"unhandled command {cfg.command!r}")  # pragma: no cover


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphsp", description="Graph signal processing toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, signal=True):
        p.add_argument("--graph", required=True, help="edge-list TSV")
        if signal:
            p.add_argument("--signal", help="CSV node,value")
        p.add_argument("--operator", default="L", choices=[k.value for k in Kind if k is not Kind.custom])
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--isolated-policy", default="reject", choices=("reject", "zero"))
        p.add_argument("--teleport", action="store_true")
        p.add_argument("--pi-mode", default="probability", choices=("probability", "degree_measure"))
        p.add_argument("--plot-data", action="store_true", help="also write plot-ready TSV panels")

    common(sub.add_parser("operator", help="build a reference operator"), signal=False)
    p = sub.add_parser("gft", help="graph Fourier transform of a signal")
    common(p)
    p.add_argument("--convention", default="modulus", choices=("modulus", "real_part"))
    p = sub.add_parser("filter", help="filter a signal")
    common(p)
    p.add_argument("--response", required=True, help="e.g. tikhonov:0.5, heat:1, lowpass:0.5, poly:1,-0.5")
    p.add_argument("--backend", default="exact", choices=BACKENDS)
    p.add_argument("--order", type=int, default=30)
    p.add_argument("--damping", default="none", choices=("none", "jackson"))
    p.add_argument("--krylov-dim", type=int, default=30)
    p.add_argument("--max-iters", type=int, default=1000)
    p = sub.add_parser("sgwt", help="spectral graph wavelet coefficients")
    common(p)
    p.add_argument("--scales", type=int, default=4)
    p = sub.add_parser("fb", help="one level of the bipartite two-channel filterbank")
    common(p)
    p.add_argument("--target-ratio", type=float, default=0.5)
    p = sub.add_parser("multires", help="cascaded multiresolution decomposition")
    common(p)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--policy", default="haar", choices=filterbank.POLICIES)
    p.add_argument("--target-ratio", type=float, default=0.5)
    p = sub.add_parser("reconstruct", help="invert a decomposition archive")
    p.add_argument("--archive", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    return parser


def _error(code, message):
    sys.stderr.write(json.dumps({"code": code, "message": str(message)}) + "\n")
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(command=args.command, graph_path=getattr(args, "graph", None),
                    signal_path=getattr(args, "signal", None), operator_kind=getattr(args, "operator", "L"),
                    backend=getattr(args, "backend", "exact"), output_dir=args.out,
                    params={"seed": args.seed, "tol": args.tol})
    try:
        summary = run(cfg, args)
    except GSPError as exc:
        return _error(exc.code, exc)
    except OSError as exc:
        return _error("E_IO", exc)
    except ValueError as exc:
        return _error("E_USAGE", exc)
    print(json.dumps(summary))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
