"""Command-line entry point.

Exit status is 0 on success, 1 for usage or validation errors and 2 for
I/O errors.  Every subcommand accepts ``--config FILE`` (a JSON object keyed
by flag name); flags given on the command line take precedence.
"""

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .datamodel import atomic_write_text, load_dataset, save_dataset, table_to_csv
from .errors import SDCError, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors, which is reserved for I/O here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _common(p, data=True, out=True):
    p.add_argument("--config", metavar="FILE", help="JSON file with default values for any flag")
    if data:
        p.add_argument("--in", dest="input", metavar="CSV", help="input data set")
        p.add_argument("--schema", metavar="JSON", help="attribute schema of the input")
    if out:
        p.add_argument("--out", metavar="CSV", help="output file (standard output when omitted)")


def build_parser():
    parser = _Parser(prog="sdckit", description="Statistical disclosure control for tabular microdata.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("microagg", help="k-anonymous microaggregation (centroid replacement)")
    _common(p)
    p.add_argument("--k", type=int, help="minimum cluster size")
    p.add_argument("--method", choices=("mdav", "insensitive"), help="clustering algorithm (default mdav)")
    p.add_argument("--attributes", type=_names, help="comma-separated attributes to aggregate (default all)")

    p = sub.add_parser("kanon", help="k-anonymity or probabilistic k-anonymity release")
    p.add_argument("method", choices=("mdav-id", "mdav-swap", "ir-swap"))
    _common(p)
    p.add_argument("--k", type=int, help="group size")
    p.add_argument("--seed", type=int, help="random seed (required for the swap methods)")
    p.add_argument("--qi", type=_names, help="comma-separated quasi-identifiers (default: schema roles)")
    p.add_argument("--conf", type=_names, help="comma-separated confidential attributes (default: schema roles)")

    p = sub.add_parser("dp-release", help="differentially private microdata release")
    _common(p)
    p.add_argument("--k", type=int, help="cluster size of the insensitive microaggregation")
    p.add_argument("--epsilon", type=float, help="total privacy budget")
    p.add_argument("--noise", choices=("laplace", "optimal"), help="numeric noise (default laplace)")
    p.add_argument("--seed", type=int, help="random seed")

    p = sub.add_parser("noise-table", help="compare Laplace and optimal step noise")
    _common(p, data=False)
    p.add_argument("--epsilon", type=float, nargs="+", help="one or more privacy budgets")
    p.add_argument("--sensitivity", type=float, help="L1 sensitivity (default 1)")
    p.add_argument("--objective", choices=("min-variance", "min-ci", "both"),
                   help="quantity to optimize (default both)")
    p.add_argument("--level", type=float, help="confidence level for min-ci (default 0.95)")
    p.add_argument("--precision", type=int, help="decimals in the value columns (default 2)")

    p = sub.add_parser("tclose", help="t-close release by bucketization")
    _common(p)
    p.add_argument("--conf", help="confidential attribute to bucketize")
    p.add_argument("--t", type=int, help="closeness level (t + 1 buckets)")
    p.add_argument("--l", type=int, help="groups per bucket (default 1)")
    p.add_argument("--mode", choices=("anatomy", "prob"), help="release style (default anatomy)")
    p.add_argument("--out-sensitive", metavar="CSV",
                   help="anatomy mode: group/bucket table (default: <out stem>_sensitive.csv)")
    p.add_argument("--seed", type=int, help="random seed (required in prob mode)")

    p = sub.add_parser("serve-refine", help="answer JSON-lines queries by prior refinement")
    _common(p, out=False)
    p.add_argument("--epsilon", type=float, help="session privacy budget")
    p.add_argument("--seed", type=int, help="random seed")

    p = sub.add_parser("evaluate", help="information loss and disclosure risk of a masked data set")
    p.add_argument("--config", metavar="FILE", help="JSON file with default values for any flag")
    p.add_argument("--original", metavar="CSV", help="original data set")
    p.add_argument("--masked", metavar="CSV", help="masked data set")
    p.add_argument("--schema", metavar="JSON", help="attribute schema shared by both files")
    p.add_argument("--report", metavar="CSV", help="report file (standard output when omitted)")
    p.add_argument("--baseline-sse", type=float, help="SSE of a reference release, for improvement scores")
    p.add_argument("--baseline-rl", type=float, help="RL of a reference release, for improvement scores")
    return parser


_DEFAULTS = {
    "method": "mdav", "noise": "laplace", "sensitivity": 1.0, "objective": "both",
    "level": 0.95, "precision": 2, "l": 1, "mode": "anatomy",
}


def _apply_config(args):
    conf = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                conf = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(conf, dict):
            raise ValidationError("config file must hold a JSON object")
    known = set(vars(args))
    for key, value in conf.items():
        dest = {"in": "input"}.get(key, key.replace("-", "_"))
        if dest not in known or dest in ("command", "config"):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, dest) is None:
            if dest in ("attributes", "qi", "conf") and isinstance(value, str) and args.command != "tclose":
                value = _names(value)
            if dest == "epsilon" and args.command == "noise-table" and not isinstance(value, list):
                value = [value]
            setattr(args, dest, value)
    for dest, value in _DEFAULTS.items():
        if dest in known and getattr(args, dest) is None:
            setattr(args, dest, value)
    return args


def _require(args, *names):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + {"input": "in"}.get(n, n).replace("_", "-") for n in missing)
        raise UsageError(f"{args.command}: missing required option(s): {flags}")


def _positive_int(name, v):
    if v is None or v < 1:
        raise ValidationError(f"--{name} must be a positive integer")


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        atomic_write_text(path, text)


def _write_table(table, path):
    if path is None:
        sys.stdout.write(table_to_csv(table))
    else:
        save_dataset(table, path)


def _load(args):
    _require(args, "input", "schema")
    return load_dataset(args.input, args.schema)


def cmd_microagg(args):
    from .microagg import insensitive_microagg, mdav, replace_with_centroids

    _require(args, "k")
    _positive_int("k", args.k)
    table = _load(args)
    fn = mdav if args.method == "mdav" else insensitive_microagg
    cl = fn(table, args.k, args.attributes)
    _write_table(replace_with_centroids(table, cl, args.attributes), args.out)


def cmd_kanon(args):
    from .probkanon import ir_swap, mdav_id, mdav_swap
    from .rng import generator

    _require(args, "k")
    _positive_int("k", args.k)
    if args.method != "mdav-id":
        _require(args, "seed")
    table = _load(args)
    if args.method == "mdav-id":
        rel = mdav_id(table, args.k, args.qi)
    elif args.method == "mdav-swap":
        rel = mdav_swap(table, args.k, args.qi, rng=generator(args.seed))
    else:
        rel = ir_swap(table, args.k, args.conf, rng=generator(args.seed))
    _write_table(rel.table, args.out)


def cmd_dp_release(args):
    from .dprelease import ReleaseConfig, dp_release

    _require(args, "k", "epsilon", "seed")
    cfg = ReleaseConfig(args.k, args.epsilon, args.noise, args.seed)
    table = _load(args)
    _write_table(dp_release(table, cfg), args.out)


def noise_rows(epsilons, sensitivity=1.0, objective="both", level=0.95):
    """Rows (epsilon, metric, laplace, optimal, plateau) comparing the two noise families."""
    from .dpnoise import LaplaceDensity, optimize_step_density

    rows = []
    for eps in epsilons:
        lap = LaplaceDensity.calibrated(eps, sensitivity)
        if objective in ("min-variance", "both"):
            opt = optimize_step_density(eps, sensitivity, "min-variance")
            rows.append((eps, "variance", lap.variance, opt.value, opt.d))
        if objective in ("min-ci", "both"):
            opt = optimize_step_density(eps, sensitivity, "min-ci", level)
            rows.append((eps, f"ci{level:g}", lap.ci_size(level), opt.value, opt.d))
    return rows


def cmd_noise_table(args):
    _require(args, "epsilon")
    for eps in args.epsilon:
        if not (eps > 0 and math.isfinite(eps)):
            raise ValidationError("--epsilon values must be positive and finite")
    if not (0 < args.level < 1):
        raise ValidationError("--level must lie in (0, 1)")
    if args.precision < 0:
        raise ValidationError("--precision must be non-negative")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epsilon", "sensitivity", "metric", "laplace", "optimal", "plateau_d"])
    fmt = f"{{:.{args.precision}f}}"
    for eps, metric, lap, opt, d in noise_rows(args.epsilon, args.sensitivity, args.objective, args.level):
        w.writerow([f"{eps:g}", f"{args.sensitivity:g}", metric, fmt.format(lap), fmt.format(opt), f"{d:.6f}"])
    _emit(buf.getvalue(), args.out)


def cmd_tclose(args):
    from .rng import generator
    from .tcloseness import anatomy_release, prob_release, tclose_partition

    _require(args, "conf", "t")
    if args.mode == "prob":
        _require(args, "seed")
    elif args.out is None:
        raise UsageError("tclose: anatomy mode writes two files and needs --out")
    table = _load(args)
    part = tclose_partition(table, args.conf, args.t, args.l)
    if args.mode == "prob":
        _write_table(prob_release(table, part, args.conf, generator(args.seed)), args.out)
        return
    rel = anatomy_release(table, part, args.conf)
    out = Path(args.out)
    sens = Path(args.out_sensitive) if args.out_sensitive else out.with_name(f"{out.stem}_sensitive.csv")
    save_dataset(rel.sensitive_table, sens)
    save_dataset(rel.quasi_table, out)


def cmd_serve_refine(args):
    from .refine_server import serve

    _require(args, "epsilon", "seed")
    table = None
    if args.input is not None or args.schema is not None:
        table = _load(args)
    serve(sys.stdin, sys.stdout, args.epsilon, args.seed, table)


def cmd_evaluate(args):
    from .evaluation import evaluate, improvement_scores

    _require(args, "original", "masked", "schema")
    original = load_dataset(args.original, args.schema)
    masked = load_dataset(args.masked, args.schema)
    report = evaluate(original, masked)
    rows = [("sse", "", report.sse), ("rl", "", report.rl)]
    for name, var in report.variations.items():
        rows.append(("mean_variation", name, var.mean))
        rows.append(("variance_variation", name, var.variance))
    if (args.baseline_sse is None) != (args.baseline_rl is None):
        raise UsageError("--baseline-sse and --baseline-rl go together")
    if args.baseline_sse is not None:
        sc = improvement_scores(args.baseline_sse, args.baseline_rl, report.sse, report.rl)
        rows += [("sse_factor", "", sc.sse_f), ("rl_factor", "", sc.rl_f),
                 ("score", "", sc.score_table), ("score_ratio", "", sc.score_text)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "attribute", "value"])
    for metric, attr, value in rows:
        w.writerow([metric, attr, "" if value is None else repr(float(value))])
    _emit(buf.getvalue(), args.report)


COMMANDS = {
    "microagg": cmd_microagg,
    "kanon": cmd_kanon,
    "dp-release": cmd_dp_release,
    "noise-table": cmd_noise_table,
    "tclose": cmd_tclose,
    "serve-refine": cmd_serve_refine,
    "evaluate": cmd_evaluate,
}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INVALID
    try:
        _apply_config(args)
        COMMANDS[args.command](args)
    except (SDCError, ValueError) as exc:
        print(f"sdckit {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"sdckit {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))
