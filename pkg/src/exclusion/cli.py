"""Command-line front end.

Every command prints a CSV table (``--pretty`` for aligned text) and
writes a JSON run manifest that ``replay`` can re-execute.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import secrets
import sys
from collections import defaultdict
from fractions import Fraction

from . import __version__
from .combinatorics import DEFAULT_CAP, CapExceededError, stationary_measure
from .exact import (
    check_pairwise_monotonicity,
    check_sigma_log_concavity,
    check_sum_rule,
    occupation_profile,
    path_end_interior_ratio,
    path_profile,
    star_leaf_center_ratio,
    star_profile,
)
from .graph import (
    ENUMERATION_MAX_VERTICES,
    Graph,
    GraphSpecError,
    cycle_graph,
    grid_graph,
    load_graph,
    path_graph,
    resolve_mode,
    star_graph,
    validate,
    vertex_weight,
)
from .oracle import (
    ORACLE_CAP,
    OracleCapError,
    SingularSystemError,
    build_generator,
    check_detailed_balance,
    check_irreducibility,
    solve_stationary,
    total_variation,
)
from .simulator import DEFAULT_BATCHES, RNG_ALGORITHM, run_replicas

POLY_SWITCH = 200_000
ORACLE_TV_TOL = 1e-10
LOG_BALANCE_TOL = 1e-12


class UsageError(Exception):
    pass


# --- formatting --------------------------------------------------------------

def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


def frac(x) -> str:
    if not isinstance(x, Fraction):
        return ""
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def render(header, rows, pretty: bool) -> str:
    table = [list(header)] + [[fmt(c) for c in r] for r in rows]
    if pretty:
        widths = [max(len(r[i]) for r in table) for i in range(len(header))]
        return "".join("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in table)
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(table)
    return buf.getvalue()


# --- shared helpers ----------------------------------------------------------

def _load_valid_graph(path) -> Graph:
    try:
        g = load_graph(path)
    except OSError as exc:
        raise UsageError(f"cannot read graph file: {exc}") from None
    except GraphSpecError as exc:
        raise UsageError(f"invalid graph file: {exc}") from None
    report = validate(g)
    if not report.ok:
        raise UsageError("graph validation failed: " + "; ".join(report.defect_list))
    return g


def _family_graph(args) -> Graph:
    fam = args.family
    if fam == "grid":
        if not args.rows or not args.cols:
            raise UsageError("grid family needs --rows and --cols")
        return grid_graph(args.rows, args.cols)
    if args.n is None:
        raise UsageError(f"{fam} family needs --n")
    return {"star": star_graph, "path": path_graph, "cycle": cycle_graph}[fam](args.n)


def _k_values(args, n: int) -> list[int]:
    if getattr(args, "all_k", False):
        return list(range(1, n + 1))
    if args.k is None:
        raise UsageError("give --k or --all-k")
    if not 0 < args.k <= n:
        raise UsageError(f"K must satisfy 0 < K <= N (got K={args.k}, N={n})")
    return [args.k]


def _method(args, n: int, k: int) -> str:
    if args.method != "auto":
        return args.method
    return "enumerate" if math.comb(n, k) <= POLY_SWITCH else "polynomial"


def _weight_column(g: Graph, mode: str):
    ws = [vertex_weight(g, x, mode) for x in range(g.num_vertices)]
    return ws if mode == "rational" else [w.value for w in ws]


# --- commands ----------------------------------------------------------------

def cmd_exact(args, out):
    g = _load_valid_graph(args.graph)
    mode = resolve_mode(g, args.mode)
    ks = _k_values(args, g.num_vertices)
    ds = _weight_column(g, mode)
    rows = []
    for k in ks:
        prof = occupation_profile(g, k, mode, _method(args, g.num_vertices, k), args.cap)
        for x in range(g.num_vertices):
            rows.append([k, x, g.degrees[x], g.rates[x], ds[x], prof.p[x], frac(prof.p[x]), ""])
        total = prof.total()
        rows.append([k, "sum", "", "", "", total, frac(total), "ok" if check_sum_rule(prof) else "FAIL"])
    out.write(render(["K", "vertex", "degree", "rate", "D", "p", "p_exact", "sum_rule"], rows, args.pretty))
    return 0 if all(r[7] != "FAIL" for r in rows) else 1


def cmd_closed_form(args, out):
    n, fam = args.n, args.family
    if n is None or n < 2:
        raise UsageError("closed forms need --n >= 2")
    ks = _k_values(args, n)
    rows = []
    if fam == "star":
        header = ["K", "p_center", "p_leaf", "ratio_leaf_center", "p_center_exact", "p_leaf_exact", "ratio_exact"]
        for k in ks:
            p = star_profile(n, k)
            r = star_leaf_center_ratio(n, k)
            rows.append([k, p[0], p[1], r, frac(p[0]), frac(p[1]), frac(r)])
    else:
        header = ["K", "p_end", "p_interior", "ratio_end_interior", "p_end_exact", "p_interior_exact", "ratio_exact"]
        for k in ks:
            p = path_profile(n, k)
            if n == 2:
                rows.append([k, p[0], None, None, frac(p[0]), "", ""])
            else:
                r = path_end_interior_ratio(n, k)
                rows.append([k, p[0], p[1], r, frac(p[0]), frac(p[1]), frac(r)])
    out.write(render(header, rows, args.pretty))
    return 0


def _simulate_k(g, k, args, seed):
    return run_replicas(
        g, k, args.horizon, seed, args.burn_in, args.replicas, args.batches, args.placement, args.workers
    )


def _exact_or_none(g, k, args, mode):
    if g.num_vertices > ENUMERATION_MAX_VERTICES:
        return None
    try:
        return occupation_profile(g, k, mode, _method(args, g.num_vertices, k), args.cap)
    except CapExceededError:
        return None


def cmd_simulate(args, out):
    g = _load_valid_graph(args.graph)
    if not args.horizon > 0:
        raise UsageError("--horizon must be positive")
    ks = _k_values(args, g.num_vertices)
    mode = resolve_mode(g, args.mode)
    rows = []
    for k in ks:
        est = _simulate_k(g, k, args, args.seed)
        exact = _exact_or_none(g, k, args, mode)
        p, se = est.p_hat, est.stderr
        for x in range(g.num_vertices):
            pe = exact.p[x] if exact else None
            rows.append([k, x, g.degrees[x], p[x], se[x], pe, None if pe is None else p[x] - float(pe)])
        rows.append([k, "sum", "", math.fsum(p.tolist()), "", exact.total() if exact else None, ""])
        rows.append([k, "attempts", "", est.attempts, "", "", ""])
    out.write(render(["K", "vertex", "degree", "p_hat", "stderr", "p_exact", "diff"], rows, args.pretty))
    return 0


def cmd_sweep(args, out):
    if args.graph:
        g = _load_valid_graph(args.graph)
    elif args.family:
        g = _family_graph(args)
    else:
        raise UsageError("sweep needs --graph or --family")
    mode = resolve_mode(g, args.mode)
    n = g.num_vertices
    if args.per_vertex:
        groups = {str(x): [x] for x in range(n)}
    else:
        by_deg = defaultdict(list)
        for x, d in enumerate(g.degrees):
            by_deg[d].append(x)
        groups = {f"deg={d}": by_deg[d] for d in sorted(by_deg)}
    rows = []
    for k in range(1, n + 1):
        exact = _exact_or_none(g, k, args, mode)
        est = _simulate_k(g, k, args, [args.seed, k]) if args.horizon > 0 else None
        p_hat = est.p_hat if est else None
        se = est.stderr if est else None
        for label, xs in groups.items():
            pe = math.fsum(float(exact.p[x]) for x in xs) / len(xs) if exact else None
            ps = math.fsum(p_hat[x] for x in xs) / len(xs) if est else None
            ss = math.sqrt(math.fsum(se[x] ** 2 for x in xs)) / len(xs) if est else None
            rows.append([k, label, len(xs), pe, ps, ss])
    out.write(render(["K", "class", "size", "p_exact", "p_sim", "stderr"], rows, args.pretty))
    return 0


def cmd_verify(args, out):
    g = _load_valid_graph(args.graph)
    mode = resolve_mode(g, args.mode)
    n = g.num_vertices
    rows = []

    def record(check, k, ok, detail=""):
        rows.append([check, "" if k is None else k, {True: "PASS", False: "FAIL", None: "SKIP"}[ok], detail])

    for k in range(1, n + 1):
        try:
            record("irreducibility", k, check_irreducibility(g, k, args.oracle_cap))
        except OracleCapError as exc:
            record("irreducibility", k, None, str(exc))
        try:
            dist = stationary_measure(g, k, mode, args.cap)
        except CapExceededError as exc:
            for name in ("detailed_balance", "oracle_tv", "sum_rule"):
                record(name, k, None, str(exc))
            continue
        bal = check_detailed_balance(g, k, dist, mode)
        ok = bal.is_zero if mode == "rational" else float(bal.max_residual) <= LOG_BALANCE_TOL
        record("detailed_balance", k, ok, f"max_residual={fmt(bal.max_residual)}")
        try:
            v = solve_stationary(build_generator(g, k, mode, args.oracle_cap))
            tv = total_variation(dict(zip(dist.support, v.tolist())), dist.as_dict())
            record("oracle_tv", k, tv <= ORACLE_TV_TOL, f"tv={fmt(tv)}")
        except OracleCapError as exc:
            record("oracle_tv", k, None, str(exc))
        except SingularSystemError as exc:
            record("oracle_tv", k, False, str(exc))
        prof = occupation_profile(g, k, mode, "enumerate", args.cap)
        record("sum_rule", k, check_sum_rule(prof), f"sum={fmt(prof.total())}")

    try:
        mono = check_pairwise_monotonicity(g, mode, "enumerate", args.cap)
        for pr in mono.pairs:
            seq = " ".join(frac(r) or fmt(r) for r in pr.ratios)
            record(f"monotonicity({pr.x},{pr.y})", None, pr.passed, seq)
        for x, y, ok in mono.equal_weight_pairs:
            record(f"equal_occupation({x},{y})", None, ok)
        lc = check_sigma_log_concavity(g, mode, "enumerate", args.cap)
        for r in lc.rows:
            record("log_concavity", r.k, r.holds, f"{fmt(r.lhs)} < {fmt(r.rhs)}")
    except CapExceededError as exc:
        record("monotonicity", None, None, str(exc))
        record("log_concavity", None, None, str(exc))

    out.write(render(["check", "K", "status", "detail"], rows, args.pretty))
    return 1 if any(r[2] == "FAIL" for r in rows) else 0


COMMANDS = {
    "exact": cmd_exact,
    "closed-form": cmd_closed_form,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


# --- argument parsing --------------------------------------------------------

def _seed(value: str):
    if value == "auto":
        return "auto"
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError("seed must be a non-negative integer or 'auto'") from None
    if seed < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return seed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exclusion", description="Occupation times of the simple exclusion process on finite graphs."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", help="write the table here instead of standard output")
    common.add_argument("--manifest", help="manifest path (default: OUTPUT.manifest.json, or standard error)")
    common.add_argument("--pretty", action="store_true", help="aligned text instead of CSV")
    common.add_argument("--mode", choices=["auto", "rational", "log"], default="auto")
    common.add_argument("--cap", type=int, default=DEFAULT_CAP, help="enumeration cap on C(N,K)")
    common.add_argument(
        "--method",
        choices=["auto", "enumerate", "polynomial"],
        default="auto",
        help="class-weight evaluation; auto enumerates small classes",
    )

    kopts = argparse.ArgumentParser(add_help=False)
    kg = kopts.add_mutually_exclusive_group()
    kg.add_argument("--k", type=int)
    kg.add_argument("--all-k", action="store_true")

    simopts = argparse.ArgumentParser(add_help=False)
    simopts.add_argument("--horizon", type=float, default=1e6)
    simopts.add_argument("--seed", type=_seed, default=0)
    simopts.add_argument("--burn-in", type=float, default=None, help="default: 1%% of the horizon")
    simopts.add_argument("--replicas", type=int, default=1)
    simopts.add_argument("--batches", type=int, default=DEFAULT_BATCHES)
    simopts.add_argument("--placement", choices=["lowest-index", "seeded-random"], default="lowest-index")
    simopts.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("exact", parents=[common, kopts], help="exact occupation probabilities")
    p.add_argument("--graph", required=True)

    p = sub.add_parser("closed-form", parents=[common, kopts], help="star/path closed forms (unit rates)")
    p.add_argument("--family", choices=["star", "path"], required=True)
    p.add_argument("--n", type=int, required=True)

    p = sub.add_parser("simulate", parents=[common, kopts, simopts], help="stochastic simulation")
    p.add_argument("--graph", required=True)

    p = sub.add_parser("sweep", parents=[common, simopts], help="K = 1..N plot data by degree class")
    p.add_argument("--graph")
    p.add_argument("--family", choices=["star", "path", "cycle", "grid"])
    p.add_argument("--n", type=int)
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--per-vertex", action="store_true")

    p = sub.add_parser("verify", parents=[common], help="run every structural check")
    p.add_argument("--graph", required=True)
    p.add_argument("--oracle-cap", type=int, default=ORACLE_CAP)

    p = sub.add_parser("replay", help="re-run a saved manifest")
    p.add_argument("manifest_file")
    p.add_argument("--output")
    return parser


def _manifest(args) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "output", "manifest")}
    manifest = {"command": args.command, "parameters": params, "version": __version__}
    graph = None
    if getattr(args, "graph", None):
        try:
            graph = load_graph(args.graph)
        except (OSError, GraphSpecError):
            graph = None
    if graph is not None:
        try:
            manifest["weight_mode"] = resolve_mode(graph, args.mode)
        except ValueError:
            manifest["weight_mode"] = None
        manifest["graph"] = graph.to_dict()
    if "seed" in params:
        manifest["rng"] = RNG_ALGORITHM
    return manifest


def _write_manifest(args, manifest: dict):
    target = args.manifest or (args.output + ".manifest.json" if args.output else None)
    if target:
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    else:
        sys.stderr.write("manifest: " + json.dumps(manifest, sort_keys=True) + "\n")


def _dispatch(args) -> int:
    if getattr(args, "seed", None) == "auto":
        args.seed = secrets.randbits(63)
        sys.stderr.write(f"seed: {args.seed}\n")
    if getattr(args, "burn_in", 0) is None:
        args.burn_in = 0.01 * args.horizon
    manifest = _manifest(args)
    buf = io.StringIO()
    try:
        status = COMMANDS[args.command](args, buf)
    except (UsageError, CapExceededError, OracleCapError, ValueError) as exc:
        manifest["status"] = "error"
        _write_manifest(args, manifest)
        sys.stderr.write(f"error: {exc}\n")
        return 2
    manifest["status"] = "ok" if status == 0 else "failed"
    _write_manifest(args, manifest)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return status


def _replay(args) -> int:
    with open(args.manifest_file, encoding="utf-8") as fh:
        manifest = json.load(fh)
    params = dict(manifest["parameters"])
    ns = argparse.Namespace(command=manifest["command"], output=args.output, manifest=None, **params)
    if manifest.get("graph") is not None and params.get("graph"):
        try:
            current = load_graph(params["graph"]).to_dict()
        except (OSError, GraphSpecError):
            current = None
        if current != manifest["graph"]:
            sys.stderr.write("error: graph file no longer matches the manifest\n")
            return 2
    ns.manifest = (args.output + ".manifest.json") if args.output else None
    return _dispatch(ns)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "replay":
        return _replay(args)
    return _dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
