"""Command line entry point: ``rkmeans {pool,run,hist,table}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..core import UsageError
from ..data import ParseError
from .experiment import (
    ALGORITHMS,
    THREADS_ENV,
    ExperimentConfig,
    build_simple_pool,
    emit_centroid_density,
    emit_histogram,
    format_table,
    load_config_dataset,
    read_csv,
    run_experiment,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True, help="numeric text table, one point per line")
    p.add_argument("--format", choices=("ws", "csv"), default="ws")
    p.add_argument("--unit-scale", action="store_true",
                   help="shift and scale all coordinates uniformly into [0,1]")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--s", type=int, default=None, help="candidates per seeding slot (default floor(2+ln k))")
    p.add_argument("--seed", type=int, default=0, help="master seed (unsigned 64-bit)")
    p.add_argument("--max-iters", type=int, default=1000, help="Lloyd iteration cap")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("--out", default=None, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rkmeans", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pool", help="run simple-kmeans many times and store the losses")
    _add_common(p)
    p.add_argument("--size", type=int, default=10_000)
    p.add_argument("--pool", default=None, help="output CSV (default OUT/pool.csv)")

    p = sub.add_parser("run", help="run an experiment and write per-run and summary CSVs")
    _add_common(p)
    p.add_argument("--alg", choices=ALGORITHMS, default="recombinator")
    p.add_argument("--J", type=int, default=10)
    p.add_argument("--beta", type=float, default=5.0)
    p.add_argument("--rtol", type=float, default=1e-4)
    p.add_argument("--max-batches", type=int, default=100)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--restarts", type=int, default=None, help="R for --alg repeated")
    p.add_argument("--pool", default=None, help="simple-kmeans pool CSV (built if missing)")
    p.add_argument("--pool-size", type=int, default=10_000)
    p.add_argument("--success-threshold", type=float, default=None)
    p.add_argument("--density-bin", type=float, default=None,
                   help="also write a 2-d centroid density CSV with this bin size")

    p = sub.add_parser("hist", help="bin a loss column of a CSV")
    p.add_argument("csv")
    p.add_argument("--column", default="loss")
    p.add_argument("--bin", type=float, required=True)
    p.add_argument("--by-batch", action="store_true", help="one histogram per batch index (batches.csv)")
    p.add_argument("--out", required=True, help="output CSV, or directory with --by-batch")

    p = sub.add_parser("table", help="print summary CSVs as a table")
    p.add_argument("summaries", nargs="+")
    p.add_argument("--scale", type=float, default=1.0, help="divide losses by this for display")
    return parser


def _config(args, **extra) -> ExperimentConfig:
    return ExperimentConfig(
        dataset=args.dataset,
        format=args.format,
        unit_scale=args.unit_scale,
        k=args.k,
        s=args.s,
        seed=args.seed,
        lloyd_max_iters=args.max_iters,
        threads=args.threads,
        out_dir=args.out,
        **extra,
    )


def cmd_pool(args) -> int:
    config = _config(args, pool_size=args.size)
    path = args.pool or str(Path(args.out or ".") / "pool.csv")
    losses = build_simple_pool(config, path=path)
    print(f"wrote {len(losses)} losses to {path} (min {min(losses):.17g})")
    return 0


def cmd_run(args) -> int:
    config = _config(
        args,
        algorithm=args.alg,
        J=args.J,
        beta=args.beta,
        rtol=args.rtol,
        max_batches=args.max_batches,
        samples=args.samples,
        restarts=args.restarts,
        pool_path=args.pool,
        pool_size=args.pool_size,
        success_threshold=args.success_threshold,
    )
    if config.out_dir is None:
        config.out_dir = "."
    data = load_config_dataset(config)
    result = run_experiment(config, data=data)
    if args.density_bin:
        emit_centroid_density([r.centroids for r in result.records], args.density_bin,
                              Path(config.out_dir) / "density.csv", config.header())
    row = result.summary.row()
    row.update(k=config.k, J=config.J, beta=config.beta)
    print(format_table([row]))
    return 0


def cmd_hist(args) -> int:
    header, rows = read_csv(args.csv)
    header = f"# {header}" if header else None
    if args.by_batch:
        out = Path(args.out)
        by: dict = {}
        for r in rows:
            by.setdefault(int(r["batch"]), []).append(float(r[args.column]))
        for t, vals in sorted(by.items()):
            emit_histogram(vals, args.bin, out / f"hist_batch{t}.csv", header)
        print(f"wrote {len(by)} histograms to {out}")
    else:
        emit_histogram([float(r[args.column]) for r in rows], args.bin, args.out, header)
        print(f"wrote {args.out}")
    return 0


def cmd_table(args) -> int:
    rows = []
    for path in args.summaries:
        rows.extend(read_csv(path)[1])
    print(format_table(rows, scale=args.scale))
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s: %(message)s")
    handlers = {"pool": cmd_pool, "run": cmd_run, "hist": cmd_hist, "table": cmd_table}
    try:
        return handlers[args.command](args)
    except (UsageError, ParseError, OSError) as exc:
        print(f"rkmeans: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
