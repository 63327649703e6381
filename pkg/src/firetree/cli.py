"""firetree command line: generate, solve, transform, lift, check and bench."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import random
import sys
import time
from fractions import Fraction

from . import io
from .errors import FiretreeError, InstanceError, ResourceCapExceeded, TreeError
from .ff_ptas import DEFAULT_ENUM_CAP, ptas_pipeline
from .generate import SHAPES, shape_parents
from .lp import build_lp_ff
from .oracles import MULTIPLIERS, brute_force_ff, brute_force_rmfc, greedy_hartnell_li
from .rmfc import DEFAULT_NODE_CAP, big_b_solve, enum_solve, rmfc_pipeline
from .transforms import (compress_ff, compress_rmfc, general_to_unit_budget, lift, prune,
                         weighted_to_unit_weight)
from .tree import (CUMULATIVE, FF, PER_LEVEL, Instance, build_tree, min_uniform_budget,
                   rmfc_feasible, saved_weight, validate_protection)

EXIT_OK, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3

CSV_COLUMNS = ["instance", "n", "L", "eps", "algorithm", "value", "exact", "ratio", "millis"]


class InputError(Exception):
    pass


def _threads(args) -> int:
    env = os.environ.get("FIRETREE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"FIRETREE_THREADS must be an integer, got {env!r}")
    return max(1, args.threads)


def _write(text: str, path=None):
    if path and path != "-":
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv_row(row: dict):
    writer = csv.DictWriter(sys.stdout, CSV_COLUMNS, lineterminator="\n")
    writer.writerow(row)


def _ratio(a, b):
    return io.fmt_rational(Fraction(a, b)) if b else None


def cmd_gen(args):
    rng = random.Random(args.seed)
    if args.n < 2:
        raise InputError("n must be at least 2")
    parents = shape_parents(args.n, args.shape, rng)
    tree = build_tree(parents)
    if args.kind == FF:
        weights = [0] + [rng.randint(0, args.max_weight) for _ in range(args.n - 1)]
        inst = Instance.ff(tree, weights, args.budget)
    elif args.pow2:
        inst = Instance.rmfc_pow2(tree)
    else:
        inst = Instance.rmfc(tree)
    _write(io.dumps(io.instance_to_dict(inst)), args.output)
    return EXIT_OK


def cmd_solve_ff(args):
    inst = io.load_instance(args.file)
    if inst.kind != FF:
        raise InputError("solve-ff needs an instance of kind 'ff'")
    eps = io.parse_rational(args.eps)
    start = time.perf_counter()
    out = ptas_pipeline(inst, eps, enum_cap=args.enum_cap, workers=_threads(args))
    millis = (time.perf_counter() - start) * 1000
    result = {"value": out.plan.value, "plan": out.plan.sorted(),
              "lp_value": io.fmt_rational(out.core.lp_value),
              "eps": io.fmt_rational(eps), "q_size": len(out.core.Q),
              "lp_solves": out.core.lp_solves}
    rows = [("ptas", out.plan.value, millis)]
    exact = None
    if args.exact:
        exact = brute_force_ff(inst, cap=None).value
        result["exact"] = exact
        result["ratio_vs_exact"] = _ratio(out.plan.value, exact) if exact else "1"
    if args.greedy:
        start = time.perf_counter()
        g = greedy_hartnell_li(inst)
        result["greedy_value"] = g.value
        result["greedy_plan"] = g.sorted()
        rows.append(("greedy", g.value, (time.perf_counter() - start) * 1000))
    if args.dump_lp:
        _write(build_lp_ff(out.reduced).to_lp_text(), args.dump_lp)
    if args.emit_csv:
        for algo, value, ms in rows:
            _csv_row({"instance": args.file, "n": inst.tree.n, "L": inst.tree.L,
                      "eps": io.fmt_rational(eps), "algorithm": algo, "value": value,
                      "exact": "" if exact is None else exact,
                      "ratio": "" if exact is None else (_ratio(value, exact) or "1"),
                      "millis": f"{ms:.1f}"})
    else:
        _write(io.dumps(result), args.output)
    return EXIT_OK


def cmd_solve_rmfc(args):
    inst = io.load_instance(args.file)
    if inst.kind == FF:
        raise InputError("solve-rmfc needs an instance of kind 'rmfc'")
    start = time.perf_counter()
    if inst.is_pow2 and inst.tree.L:
        big = big_b_solve(inst)
        en = enum_solve(inst, node_cap=args.node_cap)
        pick, name = (big, "big-b") if big.budget <= en.budget else (en, "enum")
        budget, plan = pick.budget, sorted(pick.vertices)
        result = {"budget": budget, "plan": plan, "solver": name, "model": "pow2",
                  "lp_budget": io.fmt_rational(big.lp_budget)}
        model = MULTIPLIERS
    else:
        out = rmfc_pipeline(inst.tree, node_cap=args.node_cap)
        budget, plan = out.budget, out.plan.sorted()
        result = {"budget": budget, "plan": plan, "solver": out.chosen, "model": "uniform",
                  "compressed_budget": out.compressed_budget,
                  "compressed_n": out.compressed.tree.n, "compressed_L": out.compressed.tree.L}
        model = "uniform"
    millis = (time.perf_counter() - start) * 1000
    b_opt = None
    if args.exact:
        b_opt = brute_force_rmfc(inst, model, cap=None).value
        result["b_opt"] = b_opt
        result["ratio"] = _ratio(budget, b_opt)
    if args.emit_csv:
        _csv_row({"instance": args.file, "n": inst.tree.n, "L": inst.tree.L, "eps": "-",
                  "algorithm": f"rmfc-{result['solver']}", "value": budget,
                  "exact": "" if b_opt is None else b_opt,
                  "ratio": "" if b_opt is None else result["ratio"], "millis": f"{millis:.1f}"})
    else:
        _write(io.dumps(result), args.output)
    return EXIT_OK


def cmd_transform(args):
    inst = io.load_instance(args.file)
    which = args.which
    if which == "compress-rmfc":
        new, trace = compress_rmfc(inst.tree)
    else:
        if inst.kind != FF:
            raise InputError(f"{which} needs an instance of kind 'ff'")
        if which == "unit-budget":
            new, trace = general_to_unit_budget(inst)
        elif which == "unit-weight":
            new, trace = weighted_to_unit_weight(inst, io.parse_rational(args.delta),
                                                 io.parse_rational(args.alpha))
        elif which == "compress-ff":
            delta = io.parse_rational(args.delta)
            if not 0 < delta:
                raise InputError("delta must be positive")
            new, trace = compress_ff(inst, delta)
        elif which == "prune":
            if args.lam < 1:
                raise InputError("lambda must be a positive integer")
            new, trace = prune(inst, args.lam)
        else:  # pragma: no cover - argparse restricts choices
            raise InputError(f"unknown transform {which}")
    _write(io.dumps(io.instance_to_dict(new)), args.output)
    if args.trace:
        _write(io.dumps(io.trace_to_dict(trace)), args.trace)
    return EXIT_OK


def cmd_lift(args):
    trace = io.trace_from_dict(io.load_json(args.trace))
    vertices, budget = io.plan_from_doc(io.load_json(args.plan))
    if any(not 0 <= v < len(trace.vertex_map) for v in vertices):
        raise InputError("plan names vertices outside the transformed instance")
    lifted = sorted(lift(trace, vertices))
    doc = {"plan": lifted}
    if budget is not None:
        doc["budget"] = budget * trace.budget_factor
    _write(io.dumps(doc), args.output)
    return EXIT_OK


def cmd_check(args):
    inst = io.load_instance(args.instance)
    vertices, budget = io.plan_from_doc(io.load_json(args.plan))
    t = inst.tree
    for v in vertices:
        if not 0 <= v < t.n:
            raise InputError(f"unknown vertex {v}")
        if v == t.root:
            raise InputError("the root cannot be protected")
    if len(set(vertices)) != len(vertices):
        raise InputError("plan repeats a vertex")
    if inst.kind == FF:
        verdict = validate_protection(inst, vertices, CUMULATIVE)
        result = {"feasible": verdict.feasible, "value": saved_weight(inst, vertices)}
    else:
        mode = PER_LEVEL if inst.is_pow2 else CUMULATIVE
        if budget is None:
            budget = min_uniform_budget(inst, vertices, mode)
        verdict = validate_protection(inst, vertices, mode, budget)
        separated = rmfc_feasible(t, vertices)
        result = {"feasible": verdict.feasible and separated, "budget": budget,
                  "separates_leaves": separated}
    if not verdict.feasible:
        result["violated_level"] = verdict.violated_level
        result["reason"] = verdict.reason
    _write(io.dumps(result), args.output)
    return EXIT_OK if result["feasible"] else EXIT_INFEASIBLE


def cmd_bench(args):
    writer = csv.DictWriter(sys.stdout, CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    eps = io.parse_rational(args.eps)
    for seed in range(args.seed, args.seed + args.count):
        rng = random.Random(seed)
        tree = build_tree(shape_parents(args.n, args.shape, rng))
        name = f"{args.shape}-n{args.n}-s{seed}"
        if args.kind == FF:
            weights = [0] + [rng.randint(0, args.max_weight) for _ in range(args.n - 1)]
            inst = Instance.ff(tree, weights, 1)
            exact = brute_force_ff(inst, cap=None).value if args.exact else None
            runs = [("ptas", lambda: ptas_pipeline(inst, eps, enum_cap=args.enum_cap,
                                                   workers=_threads(args)).plan.value),
                    ("greedy", lambda: greedy_hartnell_li(inst).value)]
            eps_text = io.fmt_rational(eps)
        else:
            exact = brute_force_rmfc(tree, cap=None).value if args.exact else None
            runs = [("rmfc", lambda: rmfc_pipeline(tree, node_cap=args.node_cap).budget)]
            eps_text = "-"
        for algo, fn in runs:
            start = time.perf_counter()
            value = fn()
            ms = (time.perf_counter() - start) * 1000
            ratio = "" if exact is None else (_ratio(value, exact) or "1")
            writer.writerow({"instance": name, "n": tree.n, "L": tree.L, "eps": eps_text,
                             "algorithm": algo, "value": value,
                             "exact": "" if exact is None else exact, "ratio": ratio,
                             "millis": f"{ms:.1f}"})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="firetree", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a seeded instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--shape", choices=SHAPES, default="random")
    p.add_argument("--kind", choices=("ff", "rmfc"), default="ff")
    p.add_argument("--max-weight", type=int, default=10)
    p.add_argument("--budget", type=int, default=1, help="uniform per-level budget (ff)")
    p.add_argument("--pow2", action="store_true", help="rmfc with budgets B*2^l per level")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    def solver_flags(p):
        p.add_argument("file")
        p.add_argument("--exact", action="store_true", help="also run the brute-force oracle")
        p.add_argument("--emit-csv", action="store_true")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("-o", "--output")

    p = sub.add_parser("solve-ff", help="approximate a Firefighter instance")
    solver_flags(p)
    p.add_argument("--eps", default="1/2")
    p.add_argument("--greedy", action="store_true", help="also run the greedy baseline")
    p.add_argument("--enum-cap", type=int, default=DEFAULT_ENUM_CAP)
    p.add_argument("--dump-lp", metavar="PATH", help="write the reduced instance's LP")
    p.set_defaults(func=cmd_solve_ff)

    p = sub.add_parser("solve-rmfc", help="approximate an RMFC instance")
    solver_flags(p)
    p.add_argument("--node-cap", type=int, default=DEFAULT_NODE_CAP)
    p.set_defaults(func=cmd_solve_rmfc)

    p = sub.add_parser("transform", help="apply an instance transformation")
    p.add_argument("file")
    p.add_argument("--which", required=True,
                   choices=("unit-budget", "unit-weight", "compress-ff", "compress-rmfc", "prune"))
    p.add_argument("--delta", default="1/2")
    p.add_argument("--alpha", default="1")
    p.add_argument("--lam", type=int, default=2)
    p.add_argument("-o", "--output")
    p.add_argument("--trace", help="where to write the trace JSON")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("lift", help="map a plan back through a trace")
    p.add_argument("trace")
    p.add_argument("plan")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("check", help="verify a plan against an instance")
    p.add_argument("instance")
    p.add_argument("plan")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="CSV table over seeded instances")
    p.add_argument("--kind", choices=("ff", "rmfc"), default="ff")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--shape", choices=SHAPES, default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--eps", default="1/2")
    p.add_argument("--max-weight", type=int, default=10)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--enum-cap", type=int, default=DEFAULT_ENUM_CAP)
    p.add_argument("--node-cap", type=int, default=DEFAULT_NODE_CAP)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ResourceCapExceeded as exc:
        print(f"firetree: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InputError, InstanceError, TreeError, FiretreeError, ValueError) as exc:
        print(f"firetree: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
