"""``perc-lab`` command-line front end.

Every subcommand prints a JSON document (or CSV with ``--format csv``) that
includes the effective master seed.  Exit codes: 0 success, 2 usage or
domain error, 3 resource error, 4 precision or divergence error.
"""

import argparse
import csv
import io
import json
import math
import secrets
import sys

import numpy as np

from . import __version__
from .errors import DivergenceError, DomainError, PrecisionError, ResourceError

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_PRECISION = 0, 2, 3, 4
CSV_VERSION = 1


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed(text):
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return value


def _jsonable(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _flatten(prefix, value, out):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, (list, tuple, np.ndarray)):
        out[prefix] = ";".join(json.dumps(x, default=_jsonable) for x in value)
    else:
        out[prefix] = "" if value is None else value


def _to_csv(doc):
    buf = io.StringIO()
    buf.write(f"# perc-lab csv v{CSV_VERSION} seed={doc.get('seed')}\n")
    flat = {}
    _flatten("", doc, flat)
    w = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
    w.writeheader()
    w.writerow(flat)
    return buf.getvalue()


# subcommand handlers; each returns a JSON-ready dict (seed is added by main)


def _spec(args):
    from .graphs import GraphSpec

    if not args.spec:
        raise UsageError("--spec is required")
    return GraphSpec.parse(args.spec)


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required")


def cmd_census(args):
    from .census import census, jth_largest
    from .percolation import PercolationSample

    _need(args, "p")
    spec = _spec(args)
    limit = None
    if args.epsilon is not None:
        eps = args.epsilon
        limit = 5 * math.log(eps**3 * spec.V) / eps**2
    summary = census(PercolationSample(spec, args.p, args.seed), diameters=args.diameters,
                     z_thresholds=args.k or (), d_radii=args.r or (), d_size_limit=limit)
    out = {"command": "census", "spec": str(spec), "p": args.p, **summary.to_dict()}
    if args.j:
        out["jth_largest"] = {str(j): jth_largest(summary, j) for j in args.j}
    return out


def cmd_explore(args):
    from .percolation import PercolationSample, explore_cluster

    _need(args, "p")
    spec = _spec(args)
    rep = explore_cluster(PercolationSample(spec, args.p, args.seed), args.vertex,
                          r_max=args.r[0] if args.r else None,
                          size_cap=args.k[0] if args.k else None,
                          diameter=args.diameters)
    return {"command": "explore", "spec": str(spec), "p": args.p, **rep.to_dict()}


def _estimate(args, name):
    from . import estimators as est

    _need(args, "p")
    spec = _spec(args)
    trials = args.trials or 10_000
    if name == "chi":
        res = est.estimate_susceptibility(spec, args.p, trials, args.seed, threads=args.threads)
    elif name == "tail":
        if not args.k:
            raise UsageError("--k is required")
        res = est.estimate_cluster_tail(spec, args.p, args.k[0], trials, args.seed,
                                        threads=args.threads)
    else:
        if not args.r:
            raise UsageError("--r is required")
        fn = est.estimate_onearm if name == "onearm" else est.estimate_boundary_volume
        res = fn(spec, args.p, args.r[0], trials, args.seed, threads=args.threads)
    return {"command": name, **res.to_dict()}


def cmd_pc(args):
    from .estimators import find_pc

    spec = _spec(args)
    opts = {"lam": args.lambda_ if args.lambda_ is not None else 1.0,
            "tol": args.tol if args.tol is not None else 1e-4,
            "seed": args.seed, "threads": args.threads, "strict": args.strict}
    if args.trials:
        opts["trials_per_probe"] = args.trials
        opts["initial_trials"] = min(4096, args.trials)
    res = find_pc(spec, **opts)
    return {"command": "pc", "spec": str(spec), **res.to_dict()}


def cmd_tmix_lazy(args):
    from .census import census
    from .percolation import PercolationSample
    from .walks import ClusterGraph, lazy_tmix_bound, lazy_tmix_exact

    _need(args, "p")
    spec = _spec(args)
    rank = args.j[0] if args.j else 1
    summary = census(PercolationSample(spec, args.p, args.seed))
    if not 1 <= rank <= summary.n_clusters:
        raise DomainError(f"rank {rank} outside 1..{summary.n_clusters}")
    g = ClusterGraph.from_census(summary, rank)
    out = {"command": "tmix-lazy", "spec": str(spec), "p": args.p, "rank": rank,
           "size": g.size, "edge_count": g.edge_count, "diameter": g.diameter(),
           "bound": lazy_tmix_bound(g)}
    try:
        out["exact"] = lazy_tmix_exact(g)
    except ResourceError as exc:
        out["exact"] = None
        out["exact_error"] = str(exc)
    return out


def cmd_tmix_nb(args):
    from .walks import nb_tmix

    spec = _spec(args)
    alpha = args.alpha if args.alpha is not None else 1.0 / spec.degree
    return {"command": "tmix-nb", "spec": str(spec), "alpha": alpha,
            "t_mix": nb_tmix(spec, alpha)}


def cmd_triangle(args):
    from .walks import triangle_sum

    _need(args, "p")
    spec = _spec(args)
    res = triangle_sum(spec, args.p, mode=args.mode, trials=args.trials or 1000,
                       seed=args.seed)
    return {"command": "triangle", "spec": str(spec), "p": args.p, **res}


def cmd_assumptions(args):
    from .walks import assumption_sums

    spec = _spec(args)
    alpha = args.alpha if args.alpha is not None else 1.0 / spec.degree
    pc_opts = {"seed": args.seed, "threads": args.threads}
    if args.trials:
        pc_opts["trials_per_probe"] = args.trials
        pc_opts["initial_trials"] = min(4096, args.trials)
    if args.tol is not None:
        pc_opts["tol"] = args.tol
    if args.lambda_ is not None:
        pc_opts["lam"] = args.lambda_
    res = assumption_sums(spec, alpha, p_c=args.p, **({} if args.p is not None else pc_opts))
    return {"command": "assumptions", "spec": str(spec), **res}


def cmd_oracle(args):
    from .oracle import FIXTURE_PS, emit_fixtures, enumerate_exact

    spec = _spec(args)
    ps = [args.p] if args.p is not None else list(FIXTURE_PS)
    r_max = args.r[0] if args.r else 3
    if args.emit_fixtures:
        emit_fixtures(args.emit_fixtures, specs=[spec], ps=ps, r_max=r_max)
    laws = {}
    for p in ps:
        law = enumerate_exact(spec, p, r_max=r_max)
        laws[repr(p)] = {**law.observables(), "size_dist": law.size_dist}
    out = {"command": "oracle", "spec": str(spec), "r_max": r_max, "laws": laws}
    if args.emit_fixtures:
        out["fixtures"] = args.emit_fixtures
    return out


def _plan_from_args(args):
    from .experiments import SweepPlan

    if args.plan:
        with open(args.plan, encoding="utf-8") as fh:
            data = json.load(fh)
        data["seed"] = args.seed
        if args.threads is not None:
            data["threads"] = args.threads
        data["cells"] = [(c["spec"], c.get("epsilon"), c.get("p")) for c in data["cells"]]
        return SweepPlan(**data)
    if not args.spec:
        raise UsageError("--spec (comma-separated) or --plan is required")
    specs = [s for s in args.spec.split(",") if s]
    if args.epsilon_list:
        cells = [(s, e, None) for s in specs for e in args.epsilon_list]
    elif args.p is not None:
        cells = [(s, None, args.p) for s in specs]
    else:
        raise UsageError("sweep needs --epsilon or --p")
    return SweepPlan(cells=cells, seed=args.seed, trials=args.trials or 10,
                     p_source=args.p_source, js=args.j or (), diameters=True,
                     tmix=args.tmix, radii=args.r or (), onearm_method=args.onearm_method,
                     threads=args.threads)


def cmd_sweep(args):
    from .experiments import rows_to_csv, run_sweep, sweep_document

    plan = _plan_from_args(args)
    rows = run_sweep(plan)
    if args.format == "csv":
        return {"_raw": f"# seed={args.seed}\n" + rows_to_csv(rows)}
    return {"command": "sweep", **sweep_document(plan, rows)}


def cmd_fit(args):
    from .experiments import fit_ratios, rows_from_document

    if not args.input:
        raise UsageError("--in FILE (a sweep JSON document) is required")
    with open(args.input, encoding="utf-8") as fh:
        doc = json.load(fh)
    rows = rows_from_document(doc)
    plan = doc.get("plan", {})
    band = {"C1_volume": plan.get("c1_band"), "delta_max": plan.get("delta_band")}.get(args.law)
    res = fit_ratios(rows, args.law, band=band)
    if isinstance(res, list):
        payload = [f.to_dict() for f in res]
    else:
        payload = res.to_dict()
    return {"command": "fit", "law": args.law, "fit": payload}


COMMANDS = {
    "census": cmd_census,
    "explore": cmd_explore,
    "onearm": lambda a: _estimate(a, "onearm"),
    "boundary": lambda a: _estimate(a, "boundary"),
    "tail": lambda a: _estimate(a, "tail"),
    "chi": lambda a: _estimate(a, "chi"),
    "pc": cmd_pc,
    "tmix-lazy": cmd_tmix_lazy,
    "tmix-nb": cmd_tmix_nb,
    "triangle": cmd_triangle,
    "assumptions": cmd_assumptions,
    "oracle": cmd_oracle,
    "sweep": cmd_sweep,
    "fit": cmd_fit,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="perc-lab", description="Bond percolation laboratory.")
    parser.add_argument("--version", action="version", version=f"perc-lab {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--spec", help="Q<m>, T<n>^<d>, K<n> or K<n>^<d>")
    common.add_argument("--p", type=float)
    common.add_argument("--epsilon", type=float)
    common.add_argument("--seed", type=_seed, help="master seed (generated and echoed if absent)")
    common.add_argument("--trials", type=int)
    common.add_argument("--r", type=_int_list, help="radius, or comma-separated radii")
    common.add_argument("--k", type=_int_list, help="size threshold(s)")
    common.add_argument("--j", type=_int_list, help="cluster rank(s)")
    common.add_argument("--lambda", dest="lambda_", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="write the primary output to FILE")
    common.add_argument("--diameters", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "explore":
            sp.add_argument("--vertex", type=int, default=0)
        if name == "pc":
            sp.add_argument("--strict", action="store_true",
                            help="fail on a probe still ambiguous at the trial cap")
        if name == "triangle":
            sp.add_argument("--mode", choices=("exact", "mc"), default="exact")
        if name == "oracle":
            sp.add_argument("--emit-fixtures", metavar="FILE")
        if name == "sweep":
            sp.add_argument("--epsilons", dest="epsilon_list", type=_float_list,
                            help="comma-separated epsilons (alias of --epsilon for lists)")
            sp.add_argument("--p-source", choices=("anchor", "find_pc"), default="anchor")
            sp.add_argument("--tmix", action="store_true")
            sp.add_argument("--onearm-method", choices=("census", "splitting"),
                            default="census")
            sp.add_argument("--plan", help="JSON file with SweepPlan fields")
        if name == "fit":
            sp.add_argument("--in", dest="input")
            sp.add_argument("--law", required=True,
                            choices=("C1_volume", "delta_max", "tmix", "onearm_profile"))
    return parser


def _render(doc, fmt):
    if "_raw" in doc:
        return doc["_raw"]
    if fmt == "csv":
        return _to_csv(doc)
    return json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n"


def main(argv=None):
    """Entry point; returns the process exit code."""
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        if args.seed is None:
            args.seed = secrets.randbits(63)
        if args.command == "sweep" and args.epsilon is not None and not args.epsilon_list:
            args.epsilon_list = [args.epsilon]
        doc = COMMANDS[args.command](args)
        doc["seed"] = args.seed
        text = _render(doc, args.format)
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
            sys.stdout.write(json.dumps({"seed": args.seed, "out": args.out}) + "\n")
        else:
            sys.stdout.write(text)
        return EXIT_OK
    except (UsageError, DomainError, ValueError) as exc:
        print(f"perc-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, MemoryError) as exc:
        print(f"perc-lab: resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (PrecisionError, DivergenceError) as exc:
        print(f"perc-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except OSError as exc:
        print(f"perc-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
