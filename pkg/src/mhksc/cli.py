"""Command line interface: ``mhksc generate | cluster | evaluate | export``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .errors import MhkscError, NumericalError
from .hierarchy import GROUND_MODES
from .pipeline import (
    EXPORT_FORMATS, RunConfig, evaluate_tree, export_tree, generate_benchmark,
    run_cluster, write_report,
)

log = logging.getLogger("mhksc")

EXIT_OK = 0
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    defaults = RunConfig(input="")
    parser = argparse.ArgumentParser(prog="mhksc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="repeat for debug output")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a two-level benchmark graph")
    gen.add_argument("--nodes", type=int, required=True)
    gen.add_argument("--macro", type=int, required=True, help="number of macro communities")
    gen.add_argument("--micro", type=int, required=True, help="number of micro communities")
    gen.add_argument("--mu1", type=float, default=0.1, help="macro mixing fraction")
    gen.add_argument("--mu2", type=float, default=0.2, help="micro mixing fraction")
    gen.add_argument("--avg-degree", type=float, default=20.0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=".", help="output directory")

    cl = sub.add_parser("cluster", help="build the multilevel hierarchy of a graph")
    cl.add_argument("input", help="edge list file")
    cl.add_argument("--out", default=defaults.output, help="output directory")
    cl.add_argument("--t0", type=float, default=defaults.t0)
    cl.add_argument("--maxk", type=int, default=defaults.maxk)
    cl.add_argument("--train-fraction", type=float, default=defaults.train_fraction)
    cl.add_argument("--valid-fraction", type=float, default=defaults.valid_fraction)
    cl.add_argument("--cap", type=int, default=defaults.cap,
                    help="largest training set and validation affinity size")
    cl.add_argument("--max-cluster", type=int, default=defaults.max_cluster,
                    help="largest ground-level cluster")
    cl.add_argument("--max-clusters", type=int, default=defaults.max_clusters,
                    help="most ground-level clusters")
    cl.add_argument("--chunk", type=int, default=defaults.chunk,
                    help="nodes projected per batch")
    cl.add_argument("--seed", type=int, default=defaults.seed)
    cl.add_argument("--threads", type=int, default=defaults.threads)
    cl.add_argument("--ground", choices=GROUND_MODES, default=defaults.ground,
                    help="threshold for the ground level: base threshold or first learned one")
    cl.add_argument("--solver", choices=("auto", "dense", "lanczos"), default=defaults.solver)

    ev = sub.add_parser("evaluate", help="per-level quality report for a tree")
    ev.add_argument("tree", help="tree.json from a cluster run")
    ev.add_argument("graph", help="edge list the tree was built from")
    ev.add_argument("--truth", action="append", default=[],
                    help="ground-truth partition file, repeatable")
    ev.add_argument("--out", default=".", help="output directory")

    ex = sub.add_parser("export", help="tree description and ordered membership matrix")
    ex.add_argument("tree", help="tree.json from a cluster run")
    ex.add_argument("--format", choices=sorted(EXPORT_FORMATS), default="dot")
    ex.add_argument("--level", type=int, default=1, help="lowest level to include (1-based)")
    ex.add_argument("--out", default=".", help="output directory")
    return parser


def _run(args) -> None:
    if args.command == "generate":
        paths = generate_benchmark(args.out, args.nodes, args.macro, args.micro, args.mu1,
                                   args.mu2, args.avg_degree, args.seed)
        for p in paths.values():
            print(p)
    elif args.command == "cluster":
        config = RunConfig(
            input=args.input, output=args.out, t0=args.t0, maxk=args.maxk,
            train_fraction=args.train_fraction, valid_fraction=args.valid_fraction,
            cap=args.cap, max_cluster=args.max_cluster, max_clusters=args.max_clusters,
            chunk=args.chunk, seed=args.seed, threads=args.threads, ground=args.ground,
            solver=args.solver,
        )
        manifest = run_cluster(config)
        for lvl in manifest["levels"]:
            print(f"level {lvl['level']}\tk={lvl['k']}\tt={lvl['threshold']:.6f}")
    elif args.command == "evaluate":
        names, rows = evaluate_tree(args.tree, args.graph, args.truth)
        paths = write_report(args.out, names, rows)
        print(open(paths["tsv"], encoding="utf-8").read(), end="")
    elif args.command == "export":
        paths = export_tree(args.tree, args.out, args.format, args.level)
        for p in paths.values():
            print(p)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        _run(args)
    except MhkscError as exc:
        print(f"mhksc: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"mhksc: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MemoryError:
        print("mhksc: error: out of memory", file=sys.stderr)
        return NumericalError.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
