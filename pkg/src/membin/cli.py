"""membin command line: pack, compare, efficiency, sweep-pop."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .model import Constraints
from .oracle import InstanceTooLarge, optimal_pack
from .specio import (SpecError, convergence_csv, emit_report, format_efficiency_rows,
                     load_spec)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3

# flag -> override key
_HYPER_FLAGS = {
    "pop": "population_size",
    "tour": "tournament_size",
    "pmut": "p_mut",
    "padm_w": "p_adm_w",
    "padm_h": "p_adm_h",
    "t0": "t0",
    "rc": "cooling_rate",
    "threshold": "efficiency_threshold",
    "stall": "stall",
}


class UsageError(Exception):
    pass


def parse_seeds(text: str) -> list[int]:
    """``1..10``, ``3`` or ``1,4,7``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty seed range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("no seeds given")
    return out


def _csv_list(text: str) -> list[str]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return items


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(t) for t in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")
    if any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("sizes must be positive")
    return vals


def _load(name: str):
    try:
        return load_spec(name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _constraints(args) -> Constraints:
    try:
        return Constraints(c_max=args.cmax, intra_layer_only=args.intra)
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def cmd_pack(args) -> int:
    overrides = {key: getattr(args, flag) for flag, key in _HYPER_FLAGS.items()
                 if getattr(args, flag) is not None}
    if args.preset and overrides:
        raise UsageError("--preset cannot be combined with explicit hyperparameters")
    spec = _load(args.spec)
    cons = _constraints(args)
    try:
        report = bench.run_pack(spec, args.alg, args.seed, cons, overrides=overrides,
                                budget=args.budget, use_preset=not args.no_preset)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out:
        Path(args.out).write_text(emit_report(report, "json"))
    if args.csv:
        Path(args.csv).write_text(convergence_csv(report.convergence))
    sys.stdout.write(emit_report(report, "json" if args.json else "human"))
    return EXIT_OK


def cmd_compare(args) -> int:
    spec = _load(args.spec)
    try:
        cmp = bench.compare(spec, args.algs, args.seeds, budget=args.budget,
                            constraints=_constraints(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.out:
        Path(args.out).write_text(json.dumps(cmp.to_json(), indent=2) + "\n")
    sys.stdout.write(cmp.format())
    return EXIT_OK


def cmd_efficiency(args) -> int:
    for name in args.specs:
        _load(name)
    rows = bench.efficiency_table(args.specs, args.mode, seeds=args.seeds,
                                  budget=args.budget, c_max=args.cmax)
    sys.stdout.write(format_efficiency_rows(
        [(r.label, r.n_bram, r.efficiency, None if args.mode == "baseline" else r.delta_bram)
         for r in rows]))
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = _load(args.spec)
    out = bench.sweep_population(spec, args.sizes, args.repeats, budget=args.budget,
                                 constraints=_constraints(args))
    text = bench.population_csv(out)
    if args.csv:
        Path(args.csv).write_text(text)
    print(f"{'population':>10}{'best':>8}{'worst':>8}{'median t_conv(s)':>18}")
    for s in out:
        print(f"{s.population_size:>10}{s.best:>8}{max(s.final_costs):>8}{s.median_ttc:>18.3f}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    spec = _load(args.spec)
    try:
        cost, sol = optimal_pack(spec, _constraints(args))
    except InstanceTooLarge as exc:
        raise SpecError(str(exc)) from None
    json.dump({"spec_name": spec.name, "min_cost": cost, "groups": sol.groups()}, sys.stdout)
    sys.stdout.write("\n")
    return EXIT_OK


def _add_constraint_flags(p):
    p.add_argument("--cmax", type=int, default=4, help="max buffers per bin (default 4)")
    p.add_argument("--intra", action="store_true", help="only co-locate buffers of one layer")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="membin",
                                     description="Pack CNN parameter buffers into FPGA block RAM.")
    sub = parser.add_subparsers(dest="command", metavar="{pack,compare,efficiency,sweep-pop}")
    sub.required = True

    p = sub.add_parser("pack", help="run one packer on one spec")
    p.add_argument("--spec", required=True, help="built-in name or spec JSON path")
    p.add_argument("--alg", required=True, choices=bench.ALGORITHMS)
    _add_constraint_flags(p)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--budget", type=float, default=bench.DEFAULT_BUDGET, help="wall clock seconds")
    p.add_argument("--preset", action="store_true",
                   help="use the tuned preset only (this is the default when no overrides are given)")
    p.add_argument("--no-preset", action="store_true", help="start from module defaults")
    p.add_argument("--pop", type=int)
    p.add_argument("--tour", type=int)
    p.add_argument("--pmut", type=float)
    p.add_argument("--padm-w", dest="padm_w", type=float)
    p.add_argument("--padm-h", dest="padm_h", type=float)
    p.add_argument("--t0", type=float)
    p.add_argument("--rc", type=float)
    p.add_argument("--threshold", type=float, help="NFD efficiency threshold")
    p.add_argument("--stall", type=int, help="stop after this many steps without improvement")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--csv", help="write the convergence curve here")
    p.add_argument("--json", action="store_true", help="print the JSON report instead of the summary")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser("compare", help="best/median BRAM and convergence time over seeds")
    p.add_argument("--spec", required=True)
    p.add_argument("--algs", type=_csv_list, default=list(bench.ALGORITHMS))
    p.add_argument("--seeds", type=parse_seeds, default=parse_seeds("1..10"))
    p.add_argument("--budget", type=float, default=bench.DEFAULT_BUDGET)
    _add_constraint_flags(p)
    p.add_argument("--out", help="write the JSON comparison here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("efficiency", help="mapping efficiency table (GA-NFD for packed modes)")
    p.add_argument("--specs", type=_csv_list, required=True)
    p.add_argument("--mode", choices=("baseline", "intra", "inter"), default="inter")
    p.add_argument("--seeds", type=parse_seeds, default=[1])
    p.add_argument("--budget", type=float, default=bench.DEFAULT_BUDGET)
    p.add_argument("--cmax", type=int, default=4)
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser("sweep-pop", help="GA-NFD quality and speed per population size")
    p.add_argument("--spec", required=True)
    p.add_argument("--sizes", type=_int_list, default=[5, 25, 50, 100, 200, 400])
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--budget", type=float, default=bench.DEFAULT_BUDGET)
    _add_constraint_flags(p)
    p.add_argument("--csv", help="write per-run rows here")
    p.set_defaults(func=cmd_sweep)

    # test tooling, not listed in --help
    p = sub.add_parser("oracle")
    p.add_argument("--spec", required=True)
    _add_constraint_flags(p)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"membin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpecError as exc:
        print(f"membin: infeasible input: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
