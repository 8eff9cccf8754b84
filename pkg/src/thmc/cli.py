"""``thmc`` command line.

Exit codes: 0 ok, 1 verification found a disconnected fiber, 2 bad input,
3 no basis for the requested shape, 4 a size cap was hit.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io
from .basis import CapExceededError, UnsupportedShape, basis_from_moves, markov_basis
from .configuration import CapExceeded, build_configuration
from .fiber import all_fibers, check_connectivity, fiber_of
from .inference import STATISTICS, run_test
from .mcmc import KERNELS
from .model import ModelParams, simulate_paths

EXIT_DISCONNECTED, EXIT_PARSE, EXIT_SHAPE, EXIT_CAP = 1, 2, 3, 4


def _basis(args, S: int, T: int):
    if args.moves:
        return basis_from_moves(io.read_moves(args.moves, S, T), S, T)
    return markov_basis(S, T, exclude=args.exclude or ())


def _load_table(args):
    if args.fixture:
        table = io.load_fixture(args.fixture)
        if args.states and args.states != table.S:
            raise io.ParseError(f"fixture has S={table.S}, --states says {args.states}")
        return table
    if not args.data:
        raise io.ParseError("give a data file or --fixture")
    return io.parse_paths(args.data, aggregated=args.counts, states=args.states,
                          length=args.length)


def _emit(text: str, dest) -> None:
    if dest:
        io._write(dest, text)
    else:
        sys.stdout.write(text)


def cmd_basis(args) -> int:
    b = _basis(args, args.states, args.length)
    print(b.summary(), file=sys.stderr)
    moves = b.enumerate_moves(args.max_instantiations)
    _emit(io.format_moves(moves, b.S, b.T), args.out)
    print(f"{len(moves)} moves", file=sys.stderr)
    return 0


def cmd_matrix(args) -> int:
    _emit(io.format_matrix(build_configuration(args.states, args.length).matrix), args.out)
    return 0


def cmd_verify(args) -> int:
    S, T = args.states, args.length
    b = _basis(args, S, T)
    lines = []
    bad = total = 0
    for fiber in all_fibers(S, T, args.max_n):
        res = check_connectivity(fiber, b)
        total += 1
        if not res.connected:
            bad += 1
        if args.verbose or not res.connected:
            sizes = ",".join(str(len(c)) for c in res.components)
            verdict = "connected" if res.connected else f"DISCONNECTED components={sizes}"
            lines.append(f"N={fiber.N} b={fiber.b.vector().tolist()} size={len(fiber)} {verdict}")
    lines.append(f"S={S} T={T} N<={args.max_n} basis={b.source}: "
                 f"{total} fibers, {total - bad} connected, {bad} disconnected")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_DISCONNECTED if bad else 0


def cmd_fiber(args) -> int:
    table = _load_table(args)
    _emit(io.format_fiber(fiber_of(table)), args.out)
    return 0


def cmd_test(args) -> int:
    table = _load_table(args)
    basis = _basis(args, table.S, table.T)
    report, _ = run_test(table, args.seed, n_burnin=args.burnin, n_samples=args.samples,
                         statistic=args.statistic, basis=basis, threads=args.threads,
                         kernel=args.kernel)
    _emit(io.format_report(report, timestamp=not args.no_timestamp), args.out)
    hist = args.histogram or (f"{args.out}.hist.csv" if args.out else None)
    if hist:
        io._write(hist, io.format_histogram(report.histogram))
    return 0


def _params(path: str) -> ModelParams:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
        kind = cfg.get("kind", "homogeneous")
        initial = cfg["gamma"] if kind == "toric" else cfg["initial"]
        trans = cfg.get("beta") if kind == "toric" else cfg.get("transition", cfg.get("transitions"))
        return ModelParams(kind, np.asarray(initial, float), np.asarray(trans, float))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise io.ParseError(f"bad parameter file: {exc}", None, path) from None


def cmd_simulate(args) -> int:
    table = simulate_paths(_params(args.params), args.n, args.length, args.seed)
    _emit(io.format_paths(table, aggregated=args.counts), args.out)
    return 0


def _count(lo: int):
    def parse(text: str) -> int:
        v = int(text)
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}")
        return v
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thmc", description="Exact tests for toric homogeneous Markov chains")
    sub = p.add_subparsers(dest="command", required=True)

    def shape(sp, required=True):
        sp.add_argument("--states", "-S", type=int, required=required)
        sp.add_argument("--length", "-T", type=int, required=required)

    def basis_opts(sp):
        sp.add_argument("--moves", help="4ti2 move file to use instead of the closed-form basis")
        sp.add_argument("--exclude", action="append", metavar="FAMILY",
                        help="drop a move family (kind or label, e.g. degree-one, permutation-3)")

    sp = sub.add_parser("basis", help="export the Markov basis as a 4ti2 move file")
    shape(sp)
    basis_opts(sp)
    sp.add_argument("--max-instantiations", type=_count(1), default=250_000)
    sp.add_argument("--out", "-o")
    sp.set_defaults(func=cmd_basis)

    sp = sub.add_parser("matrix", help="write the configuration matrix (4ti2 input)")
    shape(sp)
    sp.add_argument("--out", "-o")
    sp.set_defaults(func=cmd_matrix)

    sp = sub.add_parser("verify", help="check that every small fiber is connected")
    shape(sp)
    basis_opts(sp)
    sp.add_argument("--max-n", type=_count(1), default=3)
    sp.add_argument("--verbose", "-v", action="store_true", help="one line per fiber")
    sp.add_argument("--out", "-o")
    sp.set_defaults(func=cmd_verify)

    def data_opts(sp):
        sp.add_argument("data", nargs="?")
        sp.add_argument("--fixture", choices=["marijuana"])
        sp.add_argument("--counts", action="store_true", help="aggregated 'path,count' input")
        shape(sp, required=False)

    sp = sub.add_parser("fiber", help="list every table sharing the data's sufficient statistic")
    data_opts(sp)
    sp.add_argument("--out", "-o")
    sp.set_defaults(func=cmd_fiber)

    sp = sub.add_parser("test", help="exact conditional goodness-of-fit test")
    data_opts(sp)
    basis_opts(sp)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--burnin", type=_count(0), default=50_000)
    sp.add_argument("--samples", type=_count(1), default=100_000)
    sp.add_argument("--threads", type=_count(1), default=1)
    sp.add_argument("--statistic", choices=STATISTICS, default="pearson")
    sp.add_argument("--kernel", choices=KERNELS, default="guided")
    sp.add_argument("--out", "-o", help="report file (default stdout)")
    sp.add_argument("--histogram", help="histogram CSV (default OUT.hist.csv)")
    sp.add_argument("--no-timestamp", action="store_true")
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("simulate", help="draw paths from a chain model given as JSON")
    sp.add_argument("params", help='JSON, e.g. {"kind": "homogeneous", "initial": [...], "transition": [[...]]}')
    sp.add_argument("--n", "-N", type=_count(0), required=True)
    sp.add_argument("--length", "-T", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--counts", action="store_true", help="write aggregated format")
    sp.add_argument("--out", "-o")
    sp.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnsupportedShape as exc:
        print(f"thmc: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except (CapExceeded, CapExceededError) as exc:
        print(f"thmc: size cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ValueError, OSError) as exc:
        print(f"thmc: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
