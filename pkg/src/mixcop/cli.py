"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data or numeric failure. Every
output file gets a ``<output>.manifest.json`` sidecar recording the
invocation, seed, library versions, backend and timing.
"""
import argparse
import json
import os
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import _accel, metrics, oracle
from . import simulation as sim
from .coefficients import compare_matrix
from .data import (DataError, atomic_write, csv_text, dataset_csv, load_csv, load_matrix_csv,
                   load_schema, matrix_csv, schema_to_json)
from .estimator import XTOL, estimate_matrix
from .network import FORMATS, build_network, degrees, diagnostics_line, export

DEFAULT_SEED = 0
THREADS_ENV = "MIXCOP_THREADS"
_EXTENSIONS = {"graphml": ".graphml", "dot": ".dot", "edge_csv": ".csv", "json": ".json"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def default_threads():
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            k = int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
        if k < 1:
            raise UsageError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return k
    return os.cpu_count() or 1


def _versions():
    out = {"python": platform.python_version(), "numpy": np.__version__}
    for pkg in ("artifact", "scipy", "numba"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


class Run:
    """Collects outputs of one subcommand and writes their manifests."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.start = time.time()
        self.outputs = []
        self.extra = {}

    def write(self, path, text):
        atomic_write(path, text)
        self.outputs.append(os.fspath(path))

    def finish(self):
        manifest = {
            "command": self.args.command,
            "argv": self.argv,
            "seed": getattr(self.args, "seed", None),
            "threads": getattr(self.args, "threads", None),
            "backend": _accel.backend(),
            "versions": _versions(),
            "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(self.start)),
            "elapsed_seconds": round(time.time() - self.start, 3),
            "outputs": self.outputs,
            **self.extra,
        }
        text = json.dumps(manifest, indent=2, default=str) + "\n"
        for path in self.outputs:
            atomic_write(path + ".manifest.json", text)


# --- argument types -------------------------------------------------------------------

def _threshold(text):
    try:
        t = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= t <= 1.0:
        raise argparse.ArgumentTypeError(f"threshold must lie in [0, 1], got {t:g}")
    return t


def _positive_int(text):
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {k}")
    return k


def _sigma_from_args(args):
    if getattr(args, "sigma", None):
        return load_matrix_csv(args.sigma)[1]
    return metrics.SigmaRecipe(args.recipe, dim=args.dim, sigma_seed=args.sigma_seed).build()


# --- subcommands ------------------------------------------------------------------------

def cmd_estimate(args, run):
    data = load_csv(args.input, schema_path=args.schema)
    corr = estimate_matrix(data, xtol=args.xtol, threads=args.threads)
    run.write(args.out, matrix_csv(corr.names, corr.values))
    diag_path = args.diagnostics or args.out + ".diagnostics.json"
    doc = {
        "n": data.n,
        "d": data.d,
        "missing_counts": data.missing_counts(),
        "n_missing_pairs": corr.n_missing,
        "min_eigenvalue": None if np.isnan(corr.min_eigenvalue) else corr.min_eigenvalue,
        "pairs": [d.as_dict() for d in corr.diagnostics],
    }
    run.write(diag_path, json.dumps(doc, indent=2, allow_nan=False) + "\n")
    for d in corr.failures:
        print(f"warning: pair ({d.var1}, {d.var2}) failed: {d.failure}", file=sys.stderr)
    if corr.min_eigenvalue < -1e-8:
        print(f"note: estimated matrix is not PSD (min eigenvalue {corr.min_eigenvalue:.4g})",
              file=sys.stderr)


def cmd_simulate(args, run):
    sigma = _sigma_from_args(args)
    margins = sim.parse_margins(args.margins, dim=sigma.shape[0])
    data = sim.sample_dataset(sigma, margins, args.n, seed=args.seed)
    run.write(args.out, dataset_csv(data))
    run.write(args.schema_out or str(Path(args.out).with_suffix("")) + ".schema.json",
              schema_to_json(data.schema))
    if args.sigma_out:
        run.write(args.sigma_out, matrix_csv(data.names, sigma))
    run.extra["margins"] = [str(m) for m in margins]


def cmd_gensigma(args, run):
    recipe = metrics.SigmaRecipe(args.recipe, dim=args.dim, sigma_seed=args.seed)
    sigma = recipe.build()
    names = [f"x{k + 1}" for k in range(sigma.shape[0])]
    run.write(args.out, matrix_csv(names, sigma))
    run.extra["gamma_F"] = sim.achieved_sparsity(sigma)
    run.extra["min_eigenvalue"] = float(np.linalg.eigvalsh(sigma)[0])


def cmd_bench(args, run):
    recipe = metrics.SigmaRecipe(args.recipe, dim=args.dim, sigma_seed=args.sigma_seed)
    summaries, reports = [], []
    for n in args.n:
        res = metrics.bench_run(recipe, args.margins, n, args.reps, seed=args.seed,
                                threads=args.threads, t=args.threshold)
        summaries.append(res.summary)
        reports.extend(res.reports)
        s = res.summary
        print(f"{recipe.text} n={n}: rmse={s['rmse_mean']:.4f} mae={s['mae_mean']:.4f} "
              f"auc={s['auc_mean']:.4f} failed={s['failed']}", file=sys.stderr)
    out = Path(args.out)
    run.write(str(out / "summary.csv"), metrics.summary_csv(summaries))
    run.write(str(out / "replications.csv"), metrics.replications_csv(reports))


def cmd_compare(args, run):
    data = load_csv(args.input, schema_path=args.schema)
    rows = [[c.var1, c.var2, c.type_pair, c.pearson, c.spearman, c.kendall, c.copula]
            for c in compare_matrix(data)]
    header = ["var1", "var2", "type_pair", "pearson", "spearman", "kendall", "copula"]
    run.write(args.out, csv_text(header, rows))


def _network_path(out, fmt, t, multiple):
    base = Path(out)
    if not multiple:
        return str(base)
    stem = base.with_suffix("") if base.suffix else base
    return f"{stem}_t{t:g}{base.suffix or _EXTENSIONS[fmt]}"


def cmd_network(args, run):
    names, values = load_matrix_csv(args.corr)
    types = None
    if args.schema:
        schema = load_schema(args.schema)
        if [c.name for c in schema] != names:
            raise DataError("schema names do not match the correlation matrix header")
        types = [c.kind.value for c in schema]
    thresholds = args.threshold or [metrics.DEFAULT_THRESHOLD]
    multiple = len(thresholds) > 1
    for t in thresholds:
        net = build_network(values, names=names, types=types, t=t)
        path = _network_path(args.out, args.format, t, multiple)
        run.write(path, export(net, args.format))
        print(diagnostics_line(net), file=sys.stderr)
        if args.min_degree is not None:
            table = degrees(net, args.min_degree)
            run.write(str(Path(path).with_suffix("")) + ".hubs.csv",
                      csv_text(["node", "degree"], sorted(table.items(), key=lambda kv: -kv[1])))


def cmd_oracle(args, run):
    sigma = load_matrix_csv(args.sigma)[1]
    margins = sim.parse_margins(args.margins, dim=sigma.shape[0])
    model = oracle.SmallModel(sigma, margins)
    doc = {"truncation": oracle.truncation_report(model)}
    if args.point:
        x = [float(v) for v in args.point.split(",")]
        doc["density"] = oracle.joint_density(model, x)
    if args.mass:
        doc["total_mass"] = oracle.total_mass(model)
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        run.write(args.out, text)
    else:
        sys.stdout.write(text)


# --- parser ---------------------------------------------------------------------------

def _add_threads(p):
    p.add_argument("--threads", type=_positive_int, default=None,
                   help=f"worker count (default: ${THREADS_ENV} or logical cores)")


def _add_recipe(p, default="blocks"):
    p.add_argument("--recipe", default=default,
                   help="blocks | blocks:7x0.8,... | sparse:<gamma> | file:<matrix.csv>")
    p.add_argument("--dim", type=_positive_int, default=30, help="dimension for sparse recipes")
    p.add_argument("--sigma-seed", type=int, default=0, help="seed of the recipe's randomness")


def build_parser():
    parser = _Parser(prog="mixcop", description="Gaussian copula correlation for mixed data")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser,
                                metavar="{estimate,simulate,gensigma,bench,compare,network}")

    p = sub.add_parser("estimate", help="estimate the copula correlation matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--diagnostics", help="diagnostics JSON path (default: <out>.diagnostics.json)")
    p.add_argument("--xtol", type=float, default=XTOL, help="optimizer tolerance on rho")
    _add_threads(p)

    p = sub.add_parser("simulate", help="draw a dataset from the copula model")
    _add_recipe(p)
    p.add_argument("--sigma", help="correlation matrix CSV (overrides --recipe)")
    p.add_argument("--margins", default="thirds", help="'thirds' or e.g. 'normal(0,1)*10; bernoulli(0.5)*20'")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.add_argument("--schema-out", help="schema JSON path (default: <out stem>.schema.json)")
    p.add_argument("--sigma-out", help="also write the generating matrix here")

    p = sub.add_parser("gensigma", help="generate a correlation matrix")
    p.add_argument("--recipe", default="blocks")
    p.add_argument("--dim", type=_positive_int, default=30)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="replicated simulate/estimate/evaluate benchmark")
    _add_recipe(p)
    p.add_argument("--margins", default="thirds")
    p.add_argument("--n", type=_positive_int, action="append", required=True)
    p.add_argument("--reps", type=_positive_int, default=50)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--threshold", type=_threshold, default=metrics.DEFAULT_THRESHOLD)
    p.add_argument("--out", required=True, help="output directory")
    _add_threads(p)

    p = sub.add_parser("compare", help="Pearson/Spearman/Kendall/copula for every pair")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("network", help="thresholded correlation network export")
    p.add_argument("--corr", required=True)
    p.add_argument("--schema")
    p.add_argument("--threshold", type=_threshold, action="append")
    p.add_argument("--format", choices=FORMATS, default="graphml")
    p.add_argument("--min-degree", type=int, help="also write a hub table of nodes with at least this degree")
    p.add_argument("--out", required=True)

    p = sub.add_parser("oracle")  # debugging aid, deliberately not listed
    p.add_argument("--sigma", required=True)
    p.add_argument("--margins", required=True)
    p.add_argument("--point")
    p.add_argument("--mass", action="store_true")
    p.add_argument("--out")
    return parser


COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "gensigma": cmd_gensigma,
    "bench": cmd_bench,
    "compare": cmd_compare,
    "network": cmd_network,
    "oracle": cmd_oracle,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        if hasattr(args, "threads") and args.threads is None:
            args.threads = default_threads()
    except UsageError as exc:
        print(f"mixcop: error: {exc}", file=sys.stderr)
        return 1
    run = Run(args, argv)
    try:
        COMMANDS[args.command](args, run)
    except (DataError, ValueError, ArithmeticError, np.linalg.LinAlgError, OSError) as exc:
        print(f"mixcop {args.command}: {exc}", file=sys.stderr)
        return 2
    run.finish()
    return 0


if __name__ == "__main__":
    sys.exit(main())
