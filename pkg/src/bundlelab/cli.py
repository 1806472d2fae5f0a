"""Reproduction front-end: build bundles, run checks, emit CSV/SVG.

Exit codes: 0 all assertions pass, 1 assertion failure, 2 invalid input.
All randomness flows through the single --seed flag; CSV artifacts are
byte-reproducible under identical configs (the qe timing column is the
one documented exception).  SVG plots are always rendered from the CSV
on disk, never from in-memory state.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .arithmetic import ArithmeticError_, cayley_bundle
from .bundles import (BundleError, laplacian_matrix, load_bundle, random_bundle,
                      save_bundle, trace_power_oracle, trivial_bundle)
from .cp1 import CP1Error, parse_observable, toeplitz, toeplitz_norm_check
from .graphs import (GraphError, bouquet_graph, cycle_graph, load_graph,
                     petersen_graph)
from .kernels import (b1_structure_report, chebyshev_h, identity_suite,
                      matrix_polyval, tree_kernel_matrix)
from .lab import (LabError, eigenvalues_only, harmonic_block_check, km_cdf,
                  km_density, ks_distance, logdet, logdet_limit_constant,
                  nontrivial_radius, qe_experiment, zero_experiment)

PASS, FAIL, INVALID = 0, 1, 2


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path: str, fieldnames: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row[k]) for k in fieldnames])


def write_metadata(out_path: str, args: argparse.Namespace, started: float) -> None:
    meta = {
        "command": args.command,
        "config": {k: v for k, v in sorted(vars(args).items())
                   if k not in ("func",)},
        "versions": {"python": sys.version.split()[0],
                     "numpy": np.__version__,
                     "bundlelab": __version__},
        "wall_seconds": time.time() - started,
    }
    with open(out_path + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True, default=str)


def svg_from_csv(csv_path: str, svg_path: str, x: str, ys: list[str],
                 kind: str = "line", logy: bool = False) -> None:
    """Render a plot from a CSV artifact (never from in-memory state)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(csv_path) as fh:
        rows = list(csv.DictReader(fh))
    xs = [float(r[x]) for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for y in ys:
        vals = [float(r[y]) for r in rows]
        if kind == "hist":
            ax.bar(xs, vals, width=(max(xs) - min(xs)) / max(1, len(xs)),
                   alpha=0.6, label=y)
        else:
            ax.plot(xs, vals, marker="o", label=y)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.legend()
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)


def _load_graph_spec(spec: str):
    if spec == "petersen":
        return petersen_graph()
    if spec.startswith("cycle:"):
        return cycle_graph(int(spec.split(":")[1]))
    if spec.startswith("bouquet:"):
        return bouquet_graph(int(spec.split(":")[1]))
    return load_graph(spec)


def _bundle_p0(bundle) -> int:
    meta = getattr(bundle, "_cayley_meta", None)
    if not meta or "p0" not in meta:
        raise LabError("bundle file carries no Cayley metadata (p0)")
    return int(meta["p0"])


# --------------------------------------------------------------------------
# subcommand implementations; each returns an exit code


def cmd_lps_build(args) -> int:
    bundle = cayley_bundle(args.p0, args.p1, args.p,
                           warn=lambda m: print(f"warning: {m}", file=sys.stderr))
    save_bundle(bundle, args.out)
    meta = getattr(bundle, "_cayley_meta")
    print(f"wrote {args.out}: |X| = {bundle.graph.vertex_count}, "
          f"d = {bundle.graph.degree}, fiber dim = {bundle.fiber_dim}, "
          f"group = {meta['group']}, b = {meta['b']}")
    return PASS


def cmd_bundle_random(args) -> int:
    graph = _load_graph_spec(args.graph)
    bundle = random_bundle(graph, args.dim, args.seed)
    save_bundle(bundle, args.out)
    print(f"wrote {args.out}: {graph.vertex_count} vertices, "
          f"fiber dim {args.dim}, seed {args.seed}")
    return PASS


def cmd_spectrum(args) -> int:
    bundle = load_bundle(getattr(args, "in"))
    vals = eigenvalues_only(laplacian_matrix(bundle))
    rows = [{"index": i, "lambda": float(v)} for i, v in enumerate(vals)]
    write_csv(args.out, ["index", "lambda"], rows)
    if args.emit in ("svg", "both"):
        svg_from_csv(args.out, args.out.rsplit(".", 1)[0] + ".svg",
                     "index", ["lambda"])
    print(f"wrote {args.out}: {len(rows)} rows")
    return PASS


def cmd_check_ramanujan(args) -> int:
    bundle = load_bundle(getattr(args, "in"))
    p0 = _bundle_p0(bundle)
    vals = eigenvalues_only(laplacian_matrix(bundle))
    rep = nontrivial_radius(vals, bundle.graph.degree, tol=args.tol)
    bound = 2 * math.sqrt(p0)
    ok = rep["radius"] <= bound + args.tol
    print(f"max nontrivial |lambda| = {rep['radius']:.6f} "
          f"(bound 2 sqrt({p0}) = {bound:.6f}); excluded +d: "
          f"{rep['excluded_plus_d']}, -d: {rep['excluded_minus_d']}")
    print("RAMANUJAN " + ("PASS" if ok else "FAIL"))
    return PASS if ok else FAIL


def cmd_check_trace(args) -> int:
    bundle = load_bundle(getattr(args, "in"))
    mat = laplacian_matrix(bundle)
    ok = True
    power = np.eye(bundle.total_dim, dtype=complex)
    for k in range(args.kmax + 1):
        lhs = float(np.trace(power).real)
        rhs = trace_power_oracle(bundle, k)
        err = abs(lhs - rhs)
        ok = ok and err <= args.tol * max(1.0, abs(lhs))
        print(f"k={k}: Tr = {lhs:.10f}, loop oracle = {rhs:.10f}, "
              f"diff = {err:.2e}")
        power = power @ mat
    print("TRACE " + ("PASS" if ok else "FAIL"))
    return PASS if ok else FAIL


def cmd_check_chebyshev(args) -> int:
    bundle = load_bundle(getattr(args, "in"))
    mat = laplacian_matrix(bundle)
    d = bundle.graph.degree
    ok = True
    for k in range(args.kmax + 1):
        resid = float(np.linalg.norm(
            tree_kernel_matrix(bundle, k) - matrix_polyval(chebyshev_h(d, k), mat)))
        ok = ok and resid <= args.tol
        print(f"k={k}: |Id_(k) - h_k(Delta)|_F = {resid:.2e}")
    print("CHEBYSHEV " + ("PASS" if ok else "FAIL"))
    return PASS if ok else FAIL


def cmd_check_b1(args) -> int:
    bundle = load_bundle(getattr(args, "in"))
    rep = b1_structure_report(bundle, tol=args.tol)
    print(f"dim = {rep['dim']}, matching residual = "
          f"{rep['matching_residual']:.2e}, pairing residual = "
          f"{rep['pairing_residual']:.2e}")
    print(f"mult(+1) = {rep['mult_plus_one']}, mult(-1) = {rep['mult_minus_one']}; "
          f"sign assignment flag = {rep['sign_assignment_flag']}")
    print("B1 " + ("PASS" if rep["ok"] else "FAIL"))
    return PASS if rep["ok"] else FAIL


def cmd_check_toeplitz(args) -> int:
    f = parse_observable(args.f)
    op = toeplitz(f, args.p)
    trace_err = abs(float(np.trace(op.matrix).real) - (args.p + 1) * f.integral())
    rep = toeplitz_norm_check(f, args.p)
    ok = trace_err <= 1e-12 and rep["ok"]
    print(f"trace identity error = {trace_err:.2e}; "
          f"op norm {rep['op_norm']:.6f} <= sup|f| {rep['sup_f']:.6f}: "
          f"{rep['op_ok']}; HS bound: {rep['hs_ok']}")
    print("TOEPLITZ " + ("PASS" if ok else "FAIL"))
    return PASS if ok else FAIL


def cmd_check_kernel(args) -> int:
    bundle = load_bundle(getattr(args, "in"))
    rows = identity_suite(bundle, levels=tuple(range(args.levels + 1)),
                          ops_per_level=args.ops, seed=args.seed)
    if args.out:
        write_csv(args.out, ["identity", "level", "residual"], rows)
    worst = max(r["residual"] for r in rows)
    ok = worst <= args.tol
    print(f"{len(rows)} identity checks, worst residual = {worst:.2e}")
    print("KERNEL " + ("PASS" if ok else "FAIL"))
    return PASS if ok else FAIL


def cmd_km(args) -> int:
    bundle = load_bundle(getattr(args, "in"))
    d = bundle.graph.degree
    vals = eigenvalues_only(laplacian_matrix(bundle))
    ks = ks_distance(vals, d)
    edge = 2 * math.sqrt(d - 1)
    grid = np.linspace(-edge, edge, args.bins + 1)
    nontriv = vals[np.abs(np.abs(vals) - d) > 1e-6]
    rows = []
    for left, right in zip(grid[:-1], grid[1:]):
        emp = float(np.mean((nontriv >= left) & (nontriv < right)))
        mass = km_cdf(d, float(right)) - km_cdf(d, float(left))
        rows.append({"bin_left": float(left), "bin_right": float(right),
                     "empirical": emp, "km_mass": mass})
    write_csv(args.out, ["bin_left", "bin_right", "empirical", "km_mass"], rows)
    if args.emit in ("svg", "both"):
        svg_from_csv(args.out, args.out.rsplit(".", 1)[0] + ".svg",
                     "bin_left", ["empirical", "km_mass"])
    print(f"KS distance to Kesten-McKay: {ks:.6f}; wrote {args.out}")
    return PASS


def cmd_logdet(args) -> int:
    bundle = load_bundle(getattr(args, "in"))
    d = bundle.graph.degree
    vals = eigenvalues_only(laplacian_matrix(bundle))
    val = logdet(vals, d)
    const = logdet_limit_constant(d)
    print(f"normalized log det = {val:.8f}; tree limit = {const:.8f}; "
          f"gap = {abs(val - const):.2e}")
    return PASS


def cmd_qe(args) -> int:
    pairs = [tuple(int(t) for t in pair.split(",")) for pair in args.pairs]
    p_list = [int(t) for t in args.p.split(",")]
    f = parse_observable(args.f)
    rows = qe_experiment(pairs, p_list, f)
    write_csv(args.out, ["p0", "p1", "p", "variance", "dim", "seconds"], rows)
    if args.emit in ("svg", "both"):
        svg_from_csv(args.out, args.out.rsplit(".", 1)[0] + ".svg",
                     "p", ["variance"], logy=True)
    for r in rows:
        print(f"(p0={r['p0']}, p1={r['p1']}, p={r['p']}): "
              f"Var = {r['variance']:.6e} (dim {r['dim']}, "
              f"{r['seconds']:.1f}s)")
    return PASS


def cmd_zeros(args) -> int:
    p_list = [int(t) for t in args.p.split(",")]
    test_fns = [parse_observable(t) for t in args.g]
    rows = zero_experiment(args.p0, args.p1, p_list, test_fns,
                           collect_zeros=args.out is not None)
    ok = all(r["all_counts_exact"] for r in rows)
    if args.out:
        flat = [z for r in rows for z in r["zeros"]]
        write_csv(args.out, ["section_index", "vertex", "theta", "phi",
                             "multiplicity"], flat)
    for r in rows:
        print(f"p={r['p']}: zeros per section = {r['expected_zeros']} "
              f"(exact: {r['all_counts_exact']}), degenerate vertices = "
              f"{r['degenerate_vertices']}, median discrepancy = "
              f"{r['median_discrepancy']:.6f}")
    print("ZEROS " + ("PASS" if ok else "FAIL"))
    return PASS if ok else FAIL


def cmd_harmonic(args) -> int:
    ok = True
    for q in (int(t) for t in args.q.split(",")):
        rep = harmonic_block_check(args.p0, args.p1, q)
        ok = ok and rep["ok"]
        print(f"q={q}: dim {rep['dim_harmonic']}, max eigenvalue gap = "
              f"{rep['max_eigenvalue_gap']:.2e}")
    print("HARMONIC " + ("PASS" if ok else "FAIL"))
    return PASS if ok else FAIL


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="bundlelab",
        description="spectral laboratory for flat vector bundles on graphs")
    top.add_argument("--config", help="INI file whose [command] section "
                     "overrides flags")
    sub = top.add_subparsers(dest="command", required=True)

    lps = sub.add_parser("lps", help="arithmetic bundle constructions")
    lps_sub = lps.add_subparsers(dest="subcommand", required=True)
    b = lps_sub.add_parser("build")
    b.add_argument("--p0", type=int, required=True)
    b.add_argument("--p1", type=int, required=True)
    b.add_argument("--p", type=int, default=0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_lps_build, command="lps.build")

    bun = sub.add_parser("bundle", help="generic bundle constructions")
    bun_sub = bun.add_subparsers(dest="subcommand", required=True)
    r = bun_sub.add_parser("random")
    r.add_argument("--graph", required=True,
                   help="petersen | cycle:N | bouquet:K | graph.json")
    r.add_argument("--dim", type=int, default=1)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_bundle_random, command="bundle.random")

    sp = sub.add_parser("spectrum")
    sp.add_argument("--in", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--emit", choices=("csv", "svg", "both"), default="csv")
    sp.set_defaults(func=cmd_spectrum, command="spectrum")

    chk = sub.add_parser("check", help="verification subcommands")
    chk_sub = chk.add_subparsers(dest="subcommand", required=True)

    c = chk_sub.add_parser("ramanujan")
    c.add_argument("--in", required=True)
    c.add_argument("--tol", type=float, default=1e-6)
    c.set_defaults(func=cmd_check_ramanujan, command="check.ramanujan")

    c = chk_sub.add_parser("trace")
    c.add_argument("--in", required=True)
    c.add_argument("--kmax", type=int, default=6)
    c.add_argument("--tol", type=float, default=1e-8)
    c.set_defaults(func=cmd_check_trace, command="check.trace")

    c = chk_sub.add_parser("chebyshev")
    c.add_argument("--in", required=True)
    c.add_argument("--kmax", type=int, default=5)
    c.add_argument("--tol", type=float, default=1e-8)
    c.set_defaults(func=cmd_check_chebyshev, command="check.chebyshev")

    c = chk_sub.add_parser("b1")
    c.add_argument("--in", required=True)
    c.add_argument("--tol", type=float, default=1e-6)
    c.set_defaults(func=cmd_check_b1, command="check.b1")

    c = chk_sub.add_parser("toeplitz")
    c.add_argument("--f", required=True, help='observable, e.g. "n3^2 - 1/3"')
    c.add_argument("--p", type=int, required=True)
    c.set_defaults(func=cmd_check_toeplitz, command="check.toeplitz")

    c = chk_sub.add_parser("kernel")
    c.add_argument("--in", required=True)
    c.add_argument("--levels", type=int, default=3)
    c.add_argument("--ops", type=int, default=20)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--tol", type=float, default=1e-9)
    c.add_argument("--out", help="pass/fail CSV (identity, level, residual)")
    c.set_defaults(func=cmd_check_kernel, command="check.kernel")

    km = sub.add_parser("km")
    km.add_argument("--in", required=True)
    km.add_argument("--out", required=True)
    km.add_argument("--bins", type=int, default=40)
    km.add_argument("--emit", choices=("csv", "svg", "both"), default="csv")
    km.set_defaults(func=cmd_km, command="km")

    ld = sub.add_parser("logdet")
    ld.add_argument("--in", required=True)
    ld.set_defaults(func=cmd_logdet, command="logdet")

    qe = sub.add_parser("qe")
    qe.add_argument("--pairs", nargs="+", required=True,
                    help="space-separated p0,p1 pairs, e.g. 13,5 5,13")
    qe.add_argument("--p", required=True, help="comma-separated spin values")
    qe.add_argument("--f", default="n3")
    qe.add_argument("--out", required=True)
    qe.add_argument("--emit", choices=("csv", "svg", "both"), default="csv")
    qe.set_defaults(func=cmd_qe, command="qe")

    z = sub.add_parser("zeros")
    z.add_argument("--p0", type=int, required=True)
    z.add_argument("--p1", type=int, required=True)
    z.add_argument("--p", required=True, help="comma-separated spin values")
    z.add_argument("--g", nargs="+", default=["n3", "n3^2", "n1*n2"])
    z.add_argument("--out")
    z.set_defaults(func=cmd_zeros, command="zeros")

    h = sub.add_parser("harmonic")
    h.add_argument("--p0", type=int, required=True)
    h.add_argument("--p1", type=int, required=True)
    h.add_argument("--q", default="0,1,2")
    h.set_defaults(func=cmd_harmonic, command="harmonic")

    return top


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    parser = configparser.ConfigParser()
    parser.read(args.config)
    section = args.command
    if section not in parser:
        return
    for key, raw in parser[section].items():
        if not hasattr(args, key):
            continue
        current = getattr(args, key)
        if isinstance(current, bool):
            value = parser[section].getboolean(key)
        elif isinstance(current, int):
            value = int(raw)
        elif isinstance(current, float):
            value = float(raw)
        else:
            value = raw
        setattr(args, key, value)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        _apply_config(args)
        code = args.func(args)
    except (GraphError, BundleError, ArithmeticError_, CP1Error, LabError,
            FileNotFoundError, KeyError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return INVALID
    out = getattr(args, "out", None)
    if out:
        write_metadata(out, args, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
