"""``vanhove`` command line.

Exit codes: 0 every checked property holds, 1 a checked property fails,
2 usage, parse or capability error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import bounds as bd
from .config import RunConfig, load_config
from .davies import davies_K, vanhove_convergence
from .diagram import NoncrossingPartition, k_n_combinatorial, render_diagram
from .dyson import CapabilityError, k_n_bruteforce
from .model import MAX_FULL_DIM, AssumptionError, ConfigError, validate
from .nz import build_projections, verify_projection_algebra
from .quadrature import simplex_grid

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
KN_TOL = 1e-8


class UsageError(Exception):
    pass


class MissingCertificate(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))  # shortest round-trip form
    return str(x)


def _write_csv(header, rows, out: str | None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for r in rows:
        writer.writerow([_fmt(x) for x in r])
    text = buf.getvalue()
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _versions():
    out = {"numpy": np.__version__}
    import scipy

    out["scipy"] = scipy.__version__
    try:
        out["artifact"] = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        out["artifact"] = "unknown"
    return out


def _out_path(args, cfg: RunConfig | None, default_name: str):
    if args.out:
        return args.out
    if cfg is not None and cfg.output.get("directory"):
        return str(Path(cfg.output["directory"]) / default_name)
    return None


# -- commands --------------------------------------------------------------------


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    report = validate(cfg.model, strict=False)
    print(f"model {cfg.model.name}  d_S={cfg.model.d_s}  d_R={cfg.model.d_r}  lambda={cfg.model.lam:g}")
    print(report.table())
    failed = report.failures()
    if cfg.model.d <= MAX_FULL_DIM and not [f for f in failed if "hermitian" in f or f == "normalization"]:
        proj = verify_projection_algebra(cfg.model, build_projections(cfg.model))
        print("projection algebra:")
        for k, r in proj.residuals.items():
            print(f"  {k:<18} {r:.3e}  {'ok' if r <= proj.tol else 'FAIL'}")
    if failed:
        print("assumption failure: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_kn(args) -> int:
    cfg = load_config(args.config)
    model = cfg.model
    n, t = args.n, args.t
    if n < 1:
        raise UsageError("n must be >= 1")
    if args.mode in ("brute", "both") and n > 3:
        raise CapabilityError(f"brute-force K_n is limited to n <= 3 (got n = {n})")
    validate(model)
    pair = build_projections(model)
    grid = simplex_grid(n + 1, t, args.order or cfg.quadrature["order"])
    full = not args.reduced
    mats = {}
    if args.mode in ("brute", "both"):
        mats["brute"] = k_n_bruteforce(model, pair, n, t, grid, reduced=not full)
    if args.mode in ("diagram", "both"):
        mats["diagram"] = k_n_combinatorial(model, pair, n, t, grid, reduced=not full)
    dim = next(iter(mats.values())).shape[0]
    header = ["row", "col"] + [f"{k}_{part}" for k in mats for part in ("re", "im")]
    rows = []
    for i in range(dim):
        for j in range(dim):
            r = [i, j]
            for m in mats.values():
                r += [float(m[i, j].real), float(m[i, j].imag)]
            rows.append(r)
    _write_csv(header, rows, _out_path(args, cfg, f"k{n}.csv"))
    if args.mode == "both":
        res = float(np.max(np.abs(mats["brute"] - mats["diagram"])))
        print(f"max entrywise residual {res:.3e}", file=sys.stderr)
        return EXIT_OK if res <= KN_TOL else EXIT_FAIL
    return EXIT_OK


def run_convergence(cfg: RunConfig):
    sw = cfg.sweep
    model = cfg.model
    use_finite = True if sw["use_finite"] is None else bool(sw["use_finite"])
    gen = davies_K(model, cutoff=sw["cutoff"], quad_order=cfg.quadrature["quad_order"], use_finite=use_finite)
    return vanhove_convergence(model, gen, sw["tau_grid"], sw["lambda_grid"], window=sw["window"], seed=cfg.seed)


def cmd_converge(args) -> int:
    cfg = load_config(args.config)
    report = run_convergence(cfg)
    out = _out_path(args, cfg, "convergence.csv")
    _write_csv(["lambda", "tau", "error", "flagged"], report.rows, out)
    if args.long:
        long_rows = []
        for lam, tau, err, flag in report.rows:
            long_rows += [(lam, tau, "error", err), (lam, tau, "rescaled_time", tau / lam**2), (lam, tau, "flagged", float(flag))]
        _write_csv(["lambda", "tau", "quantity", "value"], long_rows, args.long)
    if out is not None:
        meta = dict(report.metadata, versions=_versions(), config=str(cfg.source))
        Path(out).with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if report.flagged:
        print("warning: some rows exceed the bath recurrence window (flagged)", file=sys.stderr)
    return EXIT_OK


def _bounds_lemma(args):
    kernels = {"1": lambda s: np.ones_like(s), "exp": lambda s: np.exp(-s), "inv2": lambda s: (1 + s) ** -2.0}
    rows = []
    for gname, g in kernels.items():
        for m in range(1, args.m_max + 1):
            for k in range(m + 2):
                for i in range(k):
                    for t in args.t_grid:
                        lhs = bd.simplex_moment(g, m, k, i, t)
                        rhs = bd.simplex_moment_bruteforce(g, m, k, i, t)
                        ok = abs(lhs - rhs) <= 1e-6 * max(abs(lhs), 1e-300)
                        rows.append(("identity", gname, m, k, i, t, "", lhs, rhs, ok))
    f = bd.Kernel.exponential(1.0, 1.0)
    for eps in args.eps:
        for m in range(1, args.m_max + 1):
            for k in range(m + 2):
                for i in range(k - 1):
                    for t in args.t_grid:
                        lhs, rhs = bd.eps_estimate_check(f, m, k, i, t, eps)
                        rows.append(("eps-estimate", "exp", m, k, i, t, eps, lhs, rhs, lhs <= rhs))
    return ["check", "g", "m", "k", "i", "t", "epsilon", "lhs", "rhs", "pass"], rows


def _bounds_xi(args):
    rows = []
    for eps in args.eps:
        for m in range(1, args.m_max + 1):
            cands = bd.xi_candidates(m, eps)
            for (k, i), c in cands.items():
                num = bd.xi_numeric_max(m, k, i, eps)
                rows.append((m, eps, k, i, c, num, abs(c - num) <= 1e-8 * c))
            xi = bd.xi_eps(m, eps)
            rows.append((m, eps, "max", "max", xi, max(cands.values()), True))
    return ["m", "epsilon", "k", "i", "lhs", "rhs", "pass"], rows


def _certificate(cfg):
    if cfg is None or cfg.clustering is None:
        raise MissingCertificate("no clustering certificate: add a 'clustering' section (or 'clustering: preset') to the config")
    return cfg.clustering


def _bounds_kn(args, cfg):
    cert = _certificate(cfg)
    rows = []
    for n in args.n:
        for r in bd.verify_kn_bound(cfg.model, n, args.t_grid, cert, order=cfg.quadrature["order"], n_probe=cfg.quadrature["n_probe"], seed=cfg.seed):
            rows.append((n, r.t, r.lhs, r.rhs, "" if r.rhs_eps is None else r.rhs_eps, r.passed))
    return ["n", "t", "lhs", "rhs", "rhs_eps", "pass"], rows


def _bounds_constants(args, cfg):
    cert = cfg.clustering if cfg is not None and cfg.clustering is not None else bd.ClusteringData(1.0, bd.Kernel.exponential())
    w_norm = cfg.model.w_norm if cfg is not None else 1.0
    ratios = bd.cn_ratio_sweep(cert, w_norm, args.s, args.t, args.n_max)
    rows = []
    for n in range(1, args.n_max + 1):
        d = bd.d_m(cert, w_norm, n // 2) if n % 2 == 0 else ""
        # the ratio test: c_{n+2} s^2 t / c_n must not grow
        prev = ratios[n - 2] if n > 1 else ratios[0]
        rows.append((n, bd.c_n(cert, w_norm, n), d, ratios[n - 1], prev, ratios[n - 1] <= prev))
    return ["n", "c_n", "d_m", "lhs", "rhs", "pass"], rows


def cmd_bounds(args) -> int:
    cfg = load_config(args.config) if args.config else None
    if args.which == "lemmaA":
        header, rows = _bounds_lemma(args)
    elif args.which == "xi":
        header, rows = _bounds_xi(args)
    elif args.which == "kn":
        try:
            header, rows = _bounds_kn(args, cfg)
        except MissingCertificate as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
    else:
        header, rows = _bounds_constants(args, cfg)
    _write_csv(header, rows, _out_path(args, cfg, f"bounds_{args.which}.csv"))
    failed = sum(1 for r in rows if not r[-1])
    if failed:
        print(f"{failed} of {len(rows)} checks failed", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def _parse_A(spec: str):
    spec = spec.strip()
    if spec in ("", "-", "{}"):
        return ()
    try:
        return tuple(int(x) for x in spec.strip("{}").split(","))
    except ValueError:
        raise UsageError(f"bad A value {spec!r}: expected comma-separated indices such as 2,4") from None


def cmd_diagram(args) -> int:
    A = _parse_A(args.A)
    try:
        d = NoncrossingPartition.parse(args.d)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        sys.stdout.write(render_diagram(args.n, A, d))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vanhove", description="Weak-coupling limit checks for finite system-bath models.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check the model assumptions and the projection algebra")
    s.add_argument("config")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("kn", help="Dyson kernel K_n(t) by brute force and/or diagrams")
    s.add_argument("config")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--mode", choices=("brute", "diagram", "both"), default="both")
    s.add_argument("--order", type=int, default=None, help="Gauss-Legendre nodes per simplex axis")
    s.add_argument("--reduced", action="store_true", help="emit the d_S^2 block instead of the joint superoperator")
    s.add_argument("--out")
    s.set_defaults(func=cmd_kn)

    s = sub.add_parser("converge", help="exact vs limiting dynamics over the sweep grid")
    s.add_argument("config")
    s.add_argument("--out")
    s.add_argument("--long", help="also write a long-format CSV here")
    s.set_defaults(func=cmd_converge)

    s = sub.add_parser("bounds", help="simplex lemma, xi, kernel bounds, constants")
    s.add_argument("config", nargs="?")
    s.add_argument("--which", choices=("lemmaA", "xi", "kn", "constants"), required=True)
    s.add_argument("--m-max", type=int, default=3)
    s.add_argument("--eps", type=_floats, default=[0.25, 0.5, 0.75])
    s.add_argument("--t-grid", type=_floats, default=[0.5, 1.0, 2.0])
    s.add_argument("--n", type=_ints, default=[1, 2])
    s.add_argument("--n-max", type=int, default=60)
    s.add_argument("--s", type=float, default=1.0)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("diagram", help="text picture of one (A, d) term")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--A", default="", help="comma-separated indices, empty for the empty set")
    s.add_argument("--d", required=True, help="blocks such as 0-1/2-5")
    s.set_defaults(func=cmd_diagram)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
    except AssumptionError as exc:
        print(f"assumption failure: {', '.join(exc.failed)}", file=sys.stderr)
        return EXIT_FAIL
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
