"""Command-line interface: ``gcsel <subcommand> [options]``.

Exit status is 0 on success, 2 on usage errors, 3 on data errors and 4 on
numerical failures.
"""

import argparse
import sys

import numpy as np

from . import __version__
from .engine import Dataset
from .equivalence import equiv_contains
from .exceptions import (
    CapExceededError,
    ConvergenceError,
    DataError,
    DomainError,
    SeparationError,
)
from .extensions import HuberLoss, kl_stepwise, robust_stepwise
from .featuregen import interactions, lag_matrix, trig_basis
from .graphs import dependency_graph
from .io import ingest_csv, read_config, write_rows
from .montecarlo import (
    SimConfig,
    correlated_error_study,
    fsimords,
    random_graph_bench,
    tutorial1,
)
from .selection import all_subsets, repeated_stepwise, stepwise

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

DATA_COMMANDS = ("select", "subsets", "repeat", "graph", "equiv", "robust-select", "kl-select", "features")


def _csv_list(kind):
    def parse(text):
        try:
            return [kind(t) for t in str(text).split(",") if t.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a comma-separated list, got {text!r}") from None

    return parse


def _common(p):
    p.add_argument("--alpha", type=float, default=0.01, help="cut-off P-value (default 0.01)")
    p.add_argument("--nu", type=int, default=1, help="order statistic of the Gaussian pool (default 1)")
    p.add_argument("--kmax", type=int, default=1, help="block size for refined stepwise (default 1)")
    p.add_argument(
        "--intercept", action=argparse.BooleanOptionalAction, default=True, help="force a constant column"
    )
    p.add_argument("--seed", type=int, default=0, help="root seed of stochastic commands")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: all available)")
    p.add_argument("--out", default=None, help="report path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="report format")
    p.add_argument("--config", default=None, help="flat key = value file overriding defaults")


def _data_args(p, target=True):
    p.add_argument("input", help="CSV file")
    if target:
        p.add_argument("--target", default="-1", help="response column: name or 0-based position (default last)")
    p.add_argument("--delimiter", default=None, help="field separator (default: sniffed)")
    p.add_argument("--no-header", dest="header", action="store_false", help="file has no header row")
    p.add_argument("--na-policy", choices=("error", "drop"), default="error")


def _sim_args(p, n, q, nsim):
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--q", type=int, default=q)
    p.add_argument("--nsim", type=int, default=nsim)


def build_parser():
    parser = argparse.ArgumentParser(prog="gcsel", description="Covariate selection with Gaussian covariates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _common(p)
        return p

    p = add("select", "stepwise selection trace")
    _data_args(p)
    p = add("subsets", "all maximal significant subsets")
    _data_args(p)
    p.add_argument("--cap", type=int, default=25, help="refuse more than this many covariates")
    p = add("repeat", "repeated stepwise selection")
    _data_args(p)
    p.add_argument("--max-rounds", type=int, default=None)
    p = add("graph", "dependency graph of all columns")
    _data_args(p, target=False)
    p.add_argument("--repeated", action="store_true", help="repeated stepwise per node")
    p.add_argument("--symmetrize", action="store_true", help="report undirected edges")
    p = add("equiv", "test whether coefficients lie in the equivalence region")
    _data_args(p)
    p.add_argument("--beta", type=_csv_list(float), required=True, help="comma-separated coefficients")
    p = add("robust-select", "stepwise selection with Huber M-regression")
    _data_args(p)
    p.add_argument("--huber-c", type=float, default=1.0)
    p = add("kl-select", "stepwise selection for a 0-1 response")
    _data_args(p)
    p = add("features", "write a generated design matrix")
    p.add_argument("kind", choices=("interactions", "trig", "lags"))
    p.add_argument("input", nargs="?", default=None, help="CSV file (not needed for trig)")
    p.add_argument("--target", default="-1")
    p.add_argument("--delimiter", default=None)
    p.add_argument("--no-header", dest="header", action="store_false")
    p.add_argument("--na-policy", choices=("error", "drop"), default="error")
    p.add_argument("--order", type=int, default=2, help="maximal degree of interactions")
    p.add_argument("--n", type=int, default=None, help="length of the trig basis")
    p.add_argument("--max-freq", type=int, default=None)
    p.add_argument("--max-lag", type=int, default=1)

    p = add("fpsim", "false positives on pure-noise covariates")
    _sim_args(p, 1000, 1000, 1000)
    p.add_argument("--method", choices=("lazy", "direct"), default="lazy")
    p.add_argument("--per-replication", action="store_true", help="one row per replication")
    p = add("sim-tutorial1", "sparse model with Toeplitz covariates")
    _sim_args(p, 1000, 1000, 25)
    p.add_argument("--p", type=int, default=60)
    p.add_argument("--amplitude", type=float, default=4.5)
    p.add_argument("--rho", type=float, default=0.25)
    p.add_argument("--per-replication", action="store_true")
    p = add("sim-graph", "recover a spatial random graph")
    _sim_args(p, 1000, 600, 1)
    p.add_argument("--per-replication", action="store_true")
    p = add("sim-corr", "trig-basis regression with MA(1) errors")
    p.add_argument("--n", type=int, default=3650)
    p.add_argument("--nsim", type=int, default=20)
    p.add_argument("--rho", type=_csv_list(float), default=[0.0, 0.25, 0.5])
    p.add_argument("--signals", type=_csv_list(str), default=["none", "sine", "smooth"])
    return parser


def _apply_config(parser, argv):
    """Turn config keys into parser defaults so explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    values = read_config(known.config)
    if "intercept" in values:
        values["intercept"] = values["intercept"].lower() in ("1", "true", "yes", "on")
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k: v for k, v in values.items() if k in dests})


def _target(text):
    try:
        return int(text)
    except ValueError:
        return text


def _load(args):
    return ingest_csv(
        args.input,
        header=args.header,
        target_column=_target(args.target) if hasattr(args, "target") else -1,
        delimiter=args.delimiter,
        na_policy=args.na_policy,
        intercept=args.intercept,
    )


def _emit(args, rows, meta=None):
    write_rows(rows, args.out, args.format, meta=meta, stream=sys.stdout)


def _sim_config(args, **extra):
    return SimConfig(
        n=args.n,
        q=args.q,
        alpha=args.alpha,
        nu=args.nu,
        nsim=args.nsim,
        seed=args.seed,
        intercept=args.intercept,
        threads=args.threads,
        kmax=args.kmax,
        **extra,
    )


def _report(args, rep):
    summary = rep.summary()
    if args.per_replication:
        rows = rep.rows()
    else:
        hist = rep.histogram()
        rows = [{"fp": str(i) if i < len(hist) - 1 else f">={i}", "frequency": float(f)} for i, f in enumerate(hist)]
    _emit(args, rows, meta=summary)


def cmd_select(args):
    data = _load(args)
    trace = stepwise(data, alpha=args.alpha, nu=args.nu, kmax=args.kmax)
    _emit(args, trace.to_rows(), meta={"terminated": trace.terminated, "rss0": trace.rss0})


def cmd_subsets(args):
    data = _load(args)
    results = all_subsets(data, alpha=args.alpha, cap=args.cap, nu=args.nu)
    rows = []
    for rank, res in enumerate(results, 1):
        rows.append(
            {
                "rank": rank,
                "covariates": " ".join(data.label(i) for i in res.covariates),
                "indices": " ".join(str(i) for i in res.covariates),
                "rss": res.rss,
                "adjusted_p": [res.member_pvalues[i] for i in res.covariates],
                "standard_p": [res.standard_pvalues.get(i, float("nan")) for i in res.covariates],
            }
        )
    _emit(args, rows, meta={"count": len(results)})


def cmd_repeat(args):
    data = _load(args)
    rounds = repeated_stepwise(data, alpha=args.alpha, nu=args.nu, kmax=args.kmax, max_rounds=args.max_rounds)
    rows = []
    for r, trace in enumerate(rounds, 1):
        for row in trace.to_rows():
            rows.append({"round": r, **row})
    _emit(args, rows, meta={"rounds": len(rounds)})


def cmd_graph(args):
    data = ingest_csv(
        args.input, header=args.header, target_column=-1, delimiter=args.delimiter, na_policy=args.na_policy
    )
    x = np.column_stack([data.x, data.y])
    names = list(data.names) + [data.meta["target"]]
    graph = dependency_graph(
        x,
        alpha=args.alpha,
        nu=args.nu,
        repeated=args.repeated,
        symmetrize=args.symmetrize,
        intercept=args.intercept,
        names=names,
        threads=args.threads,
    )
    rows = [{"i": i, "ell": j, "name_i": names[i], "name_ell": names[j]} for i, j in graph.edges]
    _emit(args, rows, meta={"q": graph.q, "alpha_effective": graph.alpha_effective, "edges": len(graph)})


def cmd_equiv(args):
    data = _load(args)
    res = equiv_contains(data, args.beta, alpha=args.alpha)
    _emit(args, [{"inside": res.inside, "displacement": res.displacement, "radius": res.radius}])


def cmd_robust(args):
    data = _load(args)
    trace = robust_stepwise(data, alpha=args.alpha, loss=HuberLoss(args.huber_c))
    _emit(args, trace.to_rows(), meta={"terminated": trace.terminated})


def cmd_kl(args):
    data = _load(args)
    trace = kl_stepwise(data, alpha=args.alpha)
    meta = {"terminated": trace.terminated, "skipped": [data.label(j) for j in trace.skipped]}
    _emit(args, trace.to_rows(), meta=meta)


def cmd_features(args):
    if args.kind == "trig":
        if args.n is None:
            raise DomainError("trig needs --n")
        data = trig_basis(args.n, args.max_freq or args.n // 2)
    else:
        if args.input is None:
            raise DomainError(f"{args.kind} needs an input CSV")
        base = ingest_csv(
            args.input,
            header=args.header,
            target_column=_target(args.target),
            delimiter=args.delimiter,
            na_policy=args.na_policy,
            intercept=args.intercept,
        )
        if args.kind == "interactions":
            data = interactions(base, args.order)
        else:
            series = list(zip(base.names, base.x.T)) + [(base.meta["target"], base.y)]
            data = lag_matrix(series, args.max_lag, base.meta["target"], intercept=args.intercept)
    names = list(data.names)
    rows = [dict(zip(names + ["y"], map(float, row))) for row in np.column_stack([data.x, data.y])]
    _emit(args, rows, meta={"columns": len(names)})


def cmd_fpsim(args):
    _report(args, fsimords(_sim_config(args, method=args.method)))


def cmd_tutorial1(args):
    _report(args, tutorial1(_sim_config(args, p=args.p, amplitude=args.amplitude, rho=args.rho)))


def cmd_graph_sim(args):
    _report(args, random_graph_bench(_sim_config(args)))


def cmd_corr(args):
    rows = correlated_error_study(
        nsim=args.nsim,
        seed=args.seed,
        n=args.n,
        rhos=tuple(args.rho),
        signals=tuple(args.signals),
        alpha=args.alpha,
        nu=args.nu,
        threads=args.threads,
    )
    _emit(args, rows)


COMMANDS = {
    "select": cmd_select,
    "subsets": cmd_subsets,
    "repeat": cmd_repeat,
    "graph": cmd_graph,
    "equiv": cmd_equiv,
    "robust-select": cmd_robust,
    "kl-select": cmd_kl,
    "features": cmd_features,
    "fpsim": cmd_fpsim,
    "sim-tutorial1": cmd_tutorial1,
    "sim-graph": cmd_graph_sim,
    "sim-corr": cmd_corr,
}


def main(argv=None):
    """Entry point; returns the exit status."""
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (OSError, DataError) as exc:
        print(f"gcsel: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        COMMANDS[args.command](args)
    except DataError as exc:
        print(f"gcsel: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, SeparationError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"gcsel: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, CapExceededError, ValueError) as exc:
        print(f"gcsel: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
