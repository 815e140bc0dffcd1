"""Command-line front end for batch pricing experiments.

Subcommands: ``generate`` writes a synthetic instance, ``solve`` prices
an instance, ``evaluate`` estimates the expected profit of a price
file, and ``compare`` runs several pricing methods over an instance
suite and emits a CSV table plus a figure.

Every command is deterministic given ``--seed`` (for ``compare`` use
``--timing-mode none`` to keep measured wall times out of the CSV).
Exit codes: 0 success, 1 solver or bound failure, 2 bad input or I/O.
Set PRICEFLOW_LOG=DEBUG for solver chatter.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import evaluate as ev
from .errors import InputError, PriceflowError, SolverError
from .generators import generate_crowdsourcing, generate_ridehail
from .instance import MarketInstance, read_instance, write_instance
from .pricer import (
    price_capped_mrp,
    price_grid_search,
    price_mrp,
    read_prices,
    solve_prices,
    write_prices,
)
from .report import comparison_figure, profit_histogram, write_comparison_csv, write_samples_csv

log = logging.getLogger(__name__)

METHODS = {
    "proposed": lambda inst, delta: solve_prices(inst, delta),
    "mrp": lambda inst, delta: price_mrp(inst, delta),
    "capped_mrp": lambda inst, delta: price_capped_mrp(inst, delta),
    "grid": lambda inst, delta: price_grid_search(inst, delta=delta),
}


def _add_source_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", type=Path, help="instance JSON file to load")
    p.add_argument("--generate", choices=["ridehail", "crowd"], help="generate an instance instead")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--taxis", type=int, default=4, help="ridehail: number of taxis")
    p.add_argument("--groups", type=int, default=4, help="ridehail: number of requester groups")
    p.add_argument("--tasks", type=int, default=4, help="crowd: number of tasks")
    p.add_argument("--workers", type=int, default=4, help="crowd: number of worker types")
    p.add_argument("--response", default=None, help="response form (linear, logistic, sigmoid)")
    p.add_argument("--family", default="poisson", choices=["binomial", "poisson"],
                   help="crowd: demand family")


def _make_instance(args, seed: int | None = None) -> MarketInstance:
    seed = args.seed if seed is None else seed
    if args.generate == "ridehail":
        response = args.response or "linear"
        return generate_ridehail(seed, args.taxis, args.groups, response=response)
    if args.generate == "crowd":
        response = args.response or "linear"
        return generate_crowdsourcing(
            seed, args.tasks, args.workers, response=response, family=args.family
        )
    raise InputError("no instance source: pass --instance FILE or --generate KIND")


def _load_instance(args) -> MarketInstance:
    if args.instance is not None:
        if not args.instance.exists():
            raise InputError(f"instance file not found: {args.instance}")
        return read_instance(args.instance)
    return _make_instance(args)


def cmd_generate(args) -> int:
    if args.generate is None:
        raise InputError("generate needs --generate {ridehail,crowd}")
    inst = _make_instance(args)
    write_instance(inst, args.out)
    print(f"wrote {args.out}: {inst.summary()}")
    return 0


def cmd_solve(args) -> int:
    inst = _load_instance(args)
    start = time.perf_counter()
    pa = solve_prices(inst, args.delta)
    wall = time.perf_counter() - start
    if args.out is not None:
        write_prices(pa, args.out)
    print(
        f"fhat={pa.fhat:.6g} augmentations={pa.diagnostics['augmentations']} "
        f"delta={pa.diagnostics['delta']:.3g} wall_seconds={wall:.3f}"
    )
    return 0


def cmd_evaluate(args) -> int:
    inst = _load_instance(args)
    if args.prices is not None:
        if not args.prices.exists():
            raise InputError(f"price file not found: {args.prices}")
        pa = read_prices(args.prices)
    else:
        pa = solve_prices(inst, args.delta)
    if args.exact:
        report = ev.exact_expected_profit(inst, pa, delta=args.delta)
    else:
        report = ev.estimate_expected_profit(
            inst, pa, num_samples=args.samples, seed=args.seed, delta=args.delta,
            keep_samples=True,
        )
    if args.out is not None:
        ev.write_eval_report(report, args.out)
        if report.samples:
            stem = Path(args.out)
            write_samples_csv(report.samples, stem.with_suffix(".samples.csv"))
            profit_histogram(report.samples, stem.with_suffix(".png"))
    print(
        f"obj={report.expected_profit:.6g} stderr={report.stderr:.3g} "
        f"fhat={report.fhat:.6g} samples={report.num_samples}"
    )
    if args.check_bounds:
        verdict = ev.check_bounds(inst, pa, delta=args.delta)
        ok = verdict.lower_ok and verdict.upper_ok
        print(
            f"bounds {'ok' if ok else 'VIOLATED'}: "
            f"{ev.APPROX_RATIO:.4f}*fhat={ev.APPROX_RATIO * verdict.fhat:.6g} "
            f"<= E={verdict.expected_profit:.6g} <= fhat={verdict.fhat:.6g} "
            f"(slack {verdict.slack:.3g})"
        )
        return 0 if ok else 1
    return 0


def cmd_compare(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise InputError(f"unknown method {m!r}; choose from {sorted(METHODS)}")

    if args.instance is not None:
        instances = [(args.instance.stem, _load_instance(args))]
    elif args.generate is not None:
        instances = [
            (f"gen{i:03d}", _make_instance(args, seed=args.seed + i)) for i in range(args.count)
        ]
    else:
        raise InputError("no instance source: pass --instance FILE or --generate KIND")

    rows = []
    for ii, (name, inst) in enumerate(instances):
        results = []
        for jj, method in enumerate(methods):
            start = time.perf_counter()
            pa = METHODS[method](inst, args.delta)
            wall = time.perf_counter() - start
            eval_seed = int(np.random.SeedSequence([args.seed, ii, jj]).generate_state(1)[0])
            report = ev.estimate_expected_profit(
                inst, pa, num_samples=args.samples, seed=eval_seed, delta=args.delta
            )
            results.append(
                {
                    "instance": name,
                    "method": method,
                    "obj": report.expected_profit,
                    "stderr": report.stderr,
                    "time_seconds": wall if args.timing_mode == "wall" else 0.0,
                    "best": False,
                }
            )
        best = max(range(len(results)), key=lambda k: results[k]["obj"])
        results[best]["best"] = True
        rows.extend(results)

    write_comparison_csv(rows, args.out)
    comparison_figure(rows, Path(args.out).with_suffix(".png"))
    for method in methods:
        objs = [r["obj"] for r in rows if r["method"] == method]
        wins = sum(1 for r in rows if r["method"] == method and r["best"])
        print(f"{method}: mean obj {sum(objs) / len(objs):.6g} best in {wins}/{len(instances)}")
    print(f"wrote {args.out} and {Path(args.out).with_suffix('.png')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="priceflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic instance file")
    _add_source_options(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("solve", help="price an instance")
    _add_source_options(p)
    p.add_argument("--delta", type=float, default=None, help="flow grid step")
    p.add_argument("--out", type=Path, default=None, help="price file to write")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("evaluate", help="estimate expected profit of a price file")
    _add_source_options(p)
    p.add_argument("--prices", type=Path, default=None, help="price file (default: solve first)")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--exact", action="store_true", help="enumerate the capacity support")
    p.add_argument("--check-bounds", action="store_true",
                   help="exit 0 only if the surrogate bracket holds")
    p.add_argument("--out", type=Path, default=None, help="report JSON to write")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("compare", help="run several pricing methods and tabulate")
    _add_source_options(p)
    p.add_argument("--methods", default="proposed,mrp,capped_mrp")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--count", type=int, default=1, help="generated instances in the suite")
    p.add_argument("--timing-mode", choices=["wall", "none"], default="wall",
                   help="'none' writes 0.0 timings for byte-stable output")
    p.add_argument("--out", type=Path, required=True, help="comparison CSV to write")
    p.set_defaults(fn=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("PRICEFLOW_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 1
    except PriceflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
