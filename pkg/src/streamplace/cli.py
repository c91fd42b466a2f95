"""Command line interface: ``streamplace {gen,solve,exact,export-lp,sweep,summarize}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import serialization
from .download import SelectionFailure
from .exact import CapExceededError, solve_exact
from .harness import HEURISTIC_ORDER, SWEEP_FIELDS, read_csv, run_experiment, summarize, summary_csv, write_csv
from .ilp import VariantError, export_ilp_constr, export_ilp_nonconstr
from .instances import ConfigError, GeneratorConfig, generate
from .pipeline import solve_heuristic
from .placement import HeuristicFailure


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="ascii", newline="\n")
    else:
        sys.stdout.write(text)


def _config(args) -> GeneratorConfig:
    data = {}
    if getattr(args, "config", None):
        data.update(json.loads(Path(args.config).read_text()))
    flags = {"n": "max_operators", "alpha": "alpha", "regime": "object_size_regime", "frequency": "frequency",
             "replication": "replication", "seed": "seed", "servers": "num_servers",
             "object_types": "num_object_types"}
    for flag, name in flags.items():
        v = getattr(args, flag, None)
        if v is not None:
            data[name] = v
    if getattr(args, "classes", None):
        data["classes"] = [int(c) for c in args.classes.split(",")]
    return GeneratorConfig.from_dict(data)


def _add_generator_flags(p):
    p.add_argument("--config", help="JSON file with GeneratorConfig fields")
    p.add_argument("--n", type=int, help="maximum number of operators")
    p.add_argument("--alpha", type=float)
    p.add_argument("--regime", choices=["small", "big"])
    p.add_argument("--frequency", type=float, help="object downloads per second")
    p.add_argument("--replication", type=float, help="fraction of servers holding each object")
    p.add_argument("--servers", type=int)
    p.add_argument("--object-types", dest="object_types", type=int)
    p.add_argument("--classes", help="comma-separated catalog class ids (default: whole catalog)")
    p.add_argument("--seed", type=int)


def _solution_text(sol, inst) -> str:
    return json.dumps(serialization.solution_to_dict(sol, inst.platform), sort_keys=True, indent=2) + "\n"


def cmd_gen(args) -> int:
    _emit(serialization.dumps(generate(_config(args))), args.output)
    return 0


def _maybe_export(inst, path):
    if path:
        text = export_ilp_constr(inst) if inst.variant.constructive else export_ilp_nonconstr(inst)
        Path(path).write_text(text, encoding="ascii", newline="\n")


def cmd_solve(args) -> int:
    inst = serialization.load_instance(args.instance)
    _maybe_export(inst, args.export_lp)
    try:
        sol = solve_heuristic(inst, args.heuristic, args.selector, args.seed, not args.no_downgrade)
    except HeuristicFailure as exc:
        _emit(json.dumps({"feasible": False, "fail_kind": "Placement", "message": str(exc)}, indent=2) + "\n",
              args.output)
        return 1
    except SelectionFailure as exc:
        _emit(json.dumps({"feasible": False, "fail_kind": exc.kind,
                          "violations": [v.as_dict() for v in exc.violations]}, indent=2, sort_keys=True) + "\n",
              args.output)
        return 1
    _emit(_solution_text(sol, inst), args.output)
    return 0 if sol.feasible else 1


def cmd_exact(args) -> int:
    inst = serialization.load_instance(args.instance)
    _maybe_export(inst, args.export_lp)
    try:
        sol = solve_exact(inst, args.max_operators, args.max_classes, args.max_processors)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if sol is None:
        _emit(json.dumps({"feasible": False, "fail_kind": "Infeasible"}, indent=2) + "\n", args.output)
        return 1
    _emit(_solution_text(sol, inst), args.output)
    return 0


def cmd_export_lp(args) -> int:
    inst = serialization.load_instance(args.instance)
    try:
        if args.nonconstr:
            text = export_ilp_nonconstr(inst, prune_y=not args.full_y)
        else:
            text = export_ilp_constr(inst, prune_y=not args.full_y)
    except VariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _emit(text, args.output)
    return 0


def cmd_sweep(args) -> int:
    base = _config(args)
    caster = int if args.vary == "n" else float
    values = [caster(v) for v in args.values.split(",")]
    heuristics = args.heuristic or HEURISTIC_ORDER
    caps = {"max_operators": args.exact_max_operators, "max_classes": args.exact_max_classes} if args.exact else None
    rows = run_experiment(args.vary, values, base, heuristics, args.trials, args.selector, args.timeout, caps,
                          args.workers)
    if args.output:
        with open(args.output, "w", encoding="ascii", newline="") as fh:
            write_csv(rows, fh, args.timing)
    else:
        write_csv(rows, sys.stdout, args.timing)
    return 0


def cmd_summarize(args) -> int:
    with open(args.results, encoding="ascii", newline="") as fh:
        rows = read_csv(fh)
    _emit(summary_csv(summarize(rows)), args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamplace",
                                     description="Operator placement for in-network stream processing.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    _add_generator_flags(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="run one heuristic on an instance")
    p.add_argument("instance")
    p.add_argument("--heuristic", choices=HEURISTIC_ORDER, default="subtree")
    p.add_argument("--selector", choices=["random", "intelligent"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-downgrade", action="store_true")
    p.add_argument("--export-lp", dest="export_lp")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("exact", help="solve an instance to optimality by exhaustive search")
    p.add_argument("instance")
    p.add_argument("--max-operators", type=int, default=12)
    p.add_argument("--max-classes", type=int, default=5)
    p.add_argument("--max-processors", type=int)
    p.add_argument("--export-lp", dest="export_lp")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("export-lp", help="write the integer linear program in LP format")
    p.add_argument("instance")
    p.add_argument("--nonconstr", action="store_true", help="existing-platform program")
    p.add_argument("--full-y", action="store_true", help="emit y variables for every operator pair")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("sweep", help="run heuristics over a parameter sweep, CSV out")
    _add_generator_flags(p)
    p.add_argument("--vary", choices=sorted(SWEEP_FIELDS), required=True)
    p.add_argument("--values", required=True, help="comma-separated sweep values")
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--heuristic", action="append", choices=HEURISTIC_ORDER,
                   help="repeat to select several (default: all)")
    p.add_argument("--selector", choices=["random", "intelligent"])
    p.add_argument("--timeout", type=float, default=60.0, help="seconds per heuristic run")
    p.add_argument("--exact", action="store_true", help="also run the exhaustive solver")
    p.add_argument("--exact-max-operators", type=int, default=12)
    p.add_argument("--exact-max-classes", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="fill runtime_ms (output no longer reproducible)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("summarize", help="rank heuristics from a sweep CSV")
    p.add_argument("results")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_summarize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
