"""Command-line entry point: ``meanrisk {gen,solve,exact,frontier}``.

Exit codes: 0 success, 2 bad arguments, 3 unreadable or malformed input,
4 instance too large for an exact solve.
"""

from __future__ import annotations

import argparse
import sys
import time

from meanrisk.errors import CapacityError, ModelError, ParseError

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_IO = 3
EXIT_CAPACITY = 4

# exact-solve guards on the number of interdictable arcs
EXACT_MAX_DIAGONAL = 500
EXACT_MAX_CORRELATED = 60


class UsageError(Exception):
    pass


def _budget_rule(text: str):
    from meanrisk.instgen import Explicit, HalfRows, MeanCostScaled

    name, _, arg = text.partition(":")
    try:
        if name == "half-rows" and not arg:
            return HalfRows()
        if name == "mean-cost":
            return MeanCostScaled(int(arg))
        if name == "explicit":
            return Explicit(float(arg))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError("expected half-rows, mean-cost:<eta> or explicit:<beta>")


def _epsilons(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meanrisk", description="Mean-risk minimization by binary search on a perspective upper bound.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a grid interdiction instance")
    gen.add_argument("--rows", type=int, required=True)
    gen.add_argument("--cols", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--correlated", action="store_true")
    gen.add_argument("--factors", type=int, default=20)
    gen.add_argument("--epsilon", type=float, default=0.05)
    gen.add_argument("--budget-rule", type=_budget_rule, default="half-rows")
    gen.add_argument("--cost-scale", type=int, default=1)
    gen.add_argument("--out", required=True)

    solve = sub.add_parser("solve", help="binary local search")
    solve.add_argument("--instance", required=True)
    solve.add_argument("--gap", type=float, default=0.01)
    solve.add_argument("--max-iters", type=int, default=64)
    solve.add_argument("--trace", help="write the iteration trace as CSV")
    solve.add_argument("--out", help="write the solution as JSON")

    exact = sub.add_parser("exact", help="exact desk-scale reference solve")
    exact.add_argument("--instance", required=True)
    exact.add_argument("--node-budget", type=int, default=10**6)
    exact.add_argument("--out", help="write the solution as JSON")

    front = sub.add_parser("frontier", help="flow-at-risk versus budget sweep")
    front.add_argument("--instance", required=True)
    front.add_argument("--epsilons", type=_epsilons, default=[0.5, 0.1, 0.05])
    front.add_argument("--budget-steps", type=int, default=20)
    front.add_argument("--out", help="CSV path (stdout if omitted)")
    return parser


def _load(path):
    from meanrisk.instgen import read_instance

    try:
        return read_instance(path)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ParseError(f"{path} is not UTF-8 text") from None


def _summary(doc, sol, wall_ms: float, out) -> None:
    print(f"iterations: {sol.iterations}", file=out)
    print(f"termination: {sol.termination}", file=out)
    print(f"value: {sol.value:.6f}", file=out)
    print(f"mean: {sol.mean:.6f}  stdev: {sol.stdev:.6f}", file=out)
    if sol.gap_certificate is not None and sol.termination != "exact":
        print(f"local gap: {100 * sol.gap_certificate:.4f}%", file=out)
    if not sol.exact:
        print("warning: an inner solve hit its node budget; the result is approximate", file=out)
    if doc.kind == "interdiction" and sol.detail is not None:
        hit = sorted(sol.detail.interdicted)
        label = {0: "interdict: none", 1: "interdict: arc "}.get(len(hit), "interdict: arcs ")
        print(label + ", ".join(str(a + 1) for a in hit), file=out)
    print(f"time: {wall_ms:.2f} ms", file=out)


def cmd_gen(args) -> int:
    from meanrisk.instgen import GridSpec, grid_document, write_instance

    spec = GridSpec(
        p=args.cols, q=args.rows, seed=args.seed, correlated=args.correlated, m=args.factors,
        epsilon=args.epsilon, budget_rule=args.budget_rule, cost_scale=args.cost_scale,
    )
    doc = grid_document(spec)
    write_instance(args.out, doc)
    print(f"wrote {args.out}: {doc.network.n_vars} interdictable arcs, budget {doc.network.budget:g}, omega {doc.omega:.6f}")
    return EXIT_OK


def cmd_solve(args) -> int:
    from meanrisk.instgen import solution_record, write_solution
    from meanrisk.oracle import default_minimizer
    from meanrisk.search import SearchConfig, solve, trace_csv

    config = SearchConfig(gap_tol=args.gap, max_iters=args.max_iters)
    doc = _load(args.instance)
    inst = doc.instance()
    t0 = time.perf_counter()
    sol = solve(inst, default_minimizer(inst), config)
    wall = (time.perf_counter() - t0) * 1e3
    _summary(doc, sol, wall, sys.stdout)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write(trace_csv(sol.trace))
    if args.out:
        write_solution(args.out, solution_record(doc, sol, wall_ms=wall, trace=args.trace))
    return EXIT_OK


def exact_solution(doc, node_budget: int = 10**6):
    """Exact optimum, or CapacityError when the instance is over the guard."""
    from meanrisk.netflow.mrni import MRNIMinimizer
    from meanrisk.search import global_scan, parametric_exact

    inst = doc.instance()
    if doc.kind == "explicit":
        return global_scan(inst)
    n = doc.network.n_vars
    limit = EXACT_MAX_DIAGONAL if inst.cov.is_diagonal else EXACT_MAX_CORRELATED
    if n > limit:
        raise CapacityError(
            f"{n} interdictable arcs exceed the exact-solve guard of {limit}; "
            "use 'meanrisk solve' for the local search instead"
        )
    return parametric_exact(inst, MRNIMinimizer(node_budget))


def cmd_exact(args) -> int:
    from meanrisk.instgen import solution_record, write_solution
    from meanrisk.oracle import default_minimizer
    from meanrisk.search import solve

    if args.node_budget < 1:
        raise UsageError("node budget must be >= 1")
    doc = _load(args.instance)
    t0 = time.perf_counter()
    sol = exact_solution(doc, args.node_budget)
    wall = (time.perf_counter() - t0) * 1e3
    inst = doc.instance()
    local = solve(inst, default_minimizer(inst))
    gap = (local.value - sol.value) / abs(sol.value) if sol.value else 0.0
    _summary(doc, sol, wall, sys.stdout)
    print(f"local search value: {local.value:.6f} ({local.iterations} iterations)")
    print(f"optimality gap of local search: {100 * gap:.4f}%")
    if args.out:
        write_solution(args.out, solution_record(doc, sol, wall_ms=wall, local_value=local.value, optimality_gap=gap))
    return EXIT_OK


def cmd_frontier(args) -> int:
    from meanrisk.frontier import frontier, frontier_csv

    doc = _load(args.instance)
    if doc.kind != "interdiction":
        raise UsageError("frontier needs an interdiction instance")
    if args.budget_steps < 1:
        raise UsageError("budget steps must be >= 1")
    rows = frontier(doc.network, doc.cov, args.epsilons, args.budget_steps)
    text = frontier_csv(rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "exact": cmd_exact, "frontier": cmd_frontier}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (ParseError, ModelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
