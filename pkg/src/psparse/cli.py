"""Command-line front end: ``psparse {info,partition,spmv,bench,gen}``.

Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 verification failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import __version__
from .bench import (PowerLaw, fit_R, gen_matrix, parse_gen_spec, run_imbalance_study,
                    run_scaling_study)
from .errors import FitError, PSparseError
from .executor import CostModel, Variant, execute
from .formats import matrix_stats, spmv_ref, to_csc, to_csr
from .mmio import mm_read, mm_write
from .partition import (DeviceTopology, PartFormat, balance_stats, materialize,
                        two_level_plan)

log = logging.getLogger("psparse")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _topology(args) -> DeviceTopology:
    if getattr(args, "np", None) is not None:
        if args.np < 1:
            raise UsageError("--np must be >= 1")
        return DeviceTopology.from_counts([args.np])
    return DeviceTopology.parse(args.topology)


def _load(path: str, storage: str):
    a = mm_read(path)
    if storage == "csr":
        return to_csr(a)
    if storage == "csc":
        return to_csc(a)
    return a


def _emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


# --- subcommands -----------------------------------------------------------

def cmd_info(args) -> int:
    a = mm_read(args.matrix)
    info = matrix_stats(a)
    try:
        fit = fit_R(a)
        info.update(R=fit.R, fit_error=fit.fit_error)
    except FitError:
        info.update(R=None, fit_error=None)
    if args.format == "json":
        _emit(json.dumps(info, indent=2), args.output)
    elif args.format == "csv":
        _emit(",".join(info) + "\n" + ",".join("" if v is None else str(v)
                                               for v in info.values()), args.output)
    else:
        _emit("\n".join(f"{k}={v}" for k, v in info.items()), args.output)
    return EXIT_OK


def cmd_partition(args) -> int:
    a = _load(args.matrix, args.storage)
    topo = _topology(args)
    plan = two_level_plan(a.nnz, topo, args.parts_per_device, PartFormat.of(a))
    plan = materialize(plan, a)
    stats = balance_stats(plan)
    if stats["empty_parts"]:
        log.warning("%d of %d partitions are empty (nnz=%d)",
                    stats["empty_parts"], stats["parts"], a.nnz)
    _emit(plan.to_json(indent=2), args.output)
    summary = " ".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                       for k, v in stats.items())
    print(summary, file=sys.stderr if args.output in (None, "-") else sys.stdout)
    return EXIT_OK


def _read_x(spec: str, n: int) -> np.ndarray:
    if spec == "ones":
        return np.ones(n)
    return np.loadtxt(spec, dtype=np.float64, ndmin=1)


def cmd_spmv(args) -> int:
    a = _load(args.matrix, args.storage)
    x = _read_x(args.x, a.n)
    y = np.zeros(a.m) if args.y is None else np.loadtxt(args.y, dtype=np.float64, ndmin=1)
    topo = _topology(args)
    plan = two_level_plan(a.nnz, topo, args.parts_per_device, PartFormat.of(a))
    y_out, report = execute(a, x, y, args.alpha, args.beta, plan, Variant(args.variant))
    _emit("".join(f"{v:.17g}\n" for v in y_out.tolist()), args.output)
    report_json = report.to_json(indent=2)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report_json)
    else:
        print(report_json, file=sys.stderr)
    if args.verify:
        ref = spmv_ref(a, x, y, args.alpha, args.beta)
        bad = np.abs(y_out - ref) > 1e-9 + 1e-9 * np.abs(ref)
        if bad.any():
            print(f"verification FAILED on {int(bad.sum())} of {a.m} rows", file=sys.stderr)
            return EXIT_VERIFY
        print("verification passed", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    model = CostModel(args.t_fixed, args.t_per_nnz, args.t_per_row)
    storage = PartFormat.parse(args.storage)
    if args.study == "imbalance":
        result = run_imbalance_study(
            _floats(args.ratios), DeviceTopology.parse(args.topology), model,
            high_fraction=args.high_fraction, seed=args.seed, measure=args.measure,
            repeats=args.repeats, fmt=storage)
    else:
        if args.matrix:
            a, R = mm_read(args.matrix), None
        else:
            spec = parse_gen_spec(args.gen, args.seed)
            a = gen_matrix(spec)
            R = spec.kind.R if isinstance(spec.kind, PowerLaw) else None
        result = run_scaling_study(
            a, _ints(args.devices), args.groups, [Variant(v) for v in args.variants.split(",")],
            model=model, repeats=args.repeats, R=R, fmt=storage)
    text = result.to_json(indent=2) if args.format == "json" else result.to_csv()
    _emit(text, args.output)
    return EXIT_OK


def cmd_gen(args) -> int:
    spec = parse_gen_spec(args.spec, args.seed)
    a = gen_matrix(spec)
    mm_write(a, args.output, comment=f"generated by psparse: {args.spec} seed={args.seed}")
    print(f"wrote {args.output}: m={a.m} n={a.n} nnz={a.nnz}", file=sys.stderr)
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--output", "-o", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv", "text"), default=None,
                        help="output format")

    def devices(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--topology", "-t", default="1x1",
                       help="device groups as GxD, e.g. 2x3 (Summit) or 2x4 (DGX-1)")
        g.add_argument("--np", type=int, default=None, help="single group with NP devices")
        p.add_argument("--parts-per-device", type=int, default=1)
        p.add_argument("--storage", "-s", choices=("csr", "csc", "coo"), default="csr",
                       help="sparse storage format to partition")

    parser = _Parser(prog="psparse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("info", parents=[common], help="matrix summary and power-law fit")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_info, default_format="text")

    p = sub.add_parser("partition", parents=[common], help="write a partition plan as JSON")
    p.add_argument("matrix")
    devices(p)
    p.set_defaults(func=cmd_partition, default_format="json")

    p = sub.add_parser("spmv", parents=[common], help="y = alpha*A*x + beta*y on simulated devices")
    p.add_argument("matrix")
    p.add_argument("--x", default="ones", help="vector file (one value per line) or 'ones'")
    p.add_argument("--y", default=None, help="initial y file (default zeros)")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--variant", choices=[v.value for v in Variant], default="p*-opt")
    p.add_argument("--report", default=None, help="execution report JSON path (default stderr)")
    p.add_argument("--verify", action="store_true", help="check against the reference kernel")
    devices(p)
    p.set_defaults(func=cmd_spmv, default_format="text")

    p = sub.add_parser("bench", parents=[common], help="imbalance or scaling study")
    p.add_argument("study", choices=("imbalance", "scaling"))
    p.add_argument("--ratios", default="0.1,0.2,0.5,1.0")
    p.add_argument("--high-fraction", type=float, default=0.5)
    p.add_argument("--topology", "-t", default="2x4")
    p.add_argument("--measure", action="store_true",
                   help="imbalance: also time real executions")
    p.add_argument("--gen", default="powerlaw:R=2", help="scaling: generator spec")
    p.add_argument("--matrix", default=None, help="scaling: Matrix Market input instead of --gen")
    p.add_argument("--devices", default="1,2,4,8")
    p.add_argument("--groups", type=int, default=2, help="scaling: NUMA-style groups")
    p.add_argument("--variants", default="baseline,p*,p*-opt")
    p.add_argument("--storage", "-s", choices=("csr", "csc", "coo"), default="csr")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--t-fixed", type=float, default=0.0)
    p.add_argument("--t-per-nnz", type=float, default=1.0)
    p.add_argument("--t-per-row", type=float, default=0.0)
    p.set_defaults(func=cmd_bench, default_format="csv")

    p = sub.add_parser("gen", parents=[common], help="write a synthetic Matrix Market file")
    p.add_argument("spec", help="e.g. powerlaw:R=2,n=10000 | imbalance:ratio=0.1 | uniform:density=0.01")
    p.set_defaults(func=cmd_gen, default_format="text")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = args.default_format
    if args.command == "gen" and not args.output:
        parser.error("gen requires --output")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"psparse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PSparseError, OSError, ValueError) as exc:
        print(f"psparse: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
