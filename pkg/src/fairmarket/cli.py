"""Command-line entry point: solve, verify, oracle, gen, bench.

Exit codes: 0 all checks pass, 1 a verified property fails, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .bench import BenchConfig, run_bench
from .generators import FIXTURES, generate
from .instance import as_epsilon, round_instance, validate_instance
from .io import (
    FormatError,
    parse_allocation,
    parse_instance,
    parse_prices,
    rational_from_json,
    serialize_allocation,
    serialize_instance,
    serialize_solution,
    trace_lines,
)
from .solver import InvalidInstanceError, SolverConfig, SolverInvariantError, StepLimitExceeded, solve
from .verify import (
    DEFAULT_BUDGET,
    EnumerationBudgetExceeded,
    NSW_FACTOR,
    brute_force_nash_opt,
    brute_force_pareto_dominator,
    check_eps_EF1,
    check_fpo_certificate,
    nsw,
    nsw_ratio_ok,
)

OK, FAILED, INPUT_ERROR = 0, 1, 2


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _write(path, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _epsilon(text):
    try:
        return as_epsilon(text)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _nonnegative(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _load_instance(path: str):
    inst = parse_instance(_read(path))
    report = validate_instance(inst)
    if not report.ok:
        raise InputError("invalid instance: " + "; ".join(report.violations))
    return inst


def cmd_solve(args) -> int:
    inst = _load_instance(args.input)
    config = SolverConfig(
        epsilon=args.epsilon or Fraction(1, 4),
        mode=args.mode,
        max_steps=args.max_steps,
        po_check_budget=args.po_budget,
        trace_enabled=args.trace is not None,
    )
    sol = solve(inst, config)
    _write(args.output, serialize_solution(sol))
    if args.trace is not None:
        _write(args.trace, trace_lines(sol.trace, sorted(sol.matched_agents)))
    certs = sol.certificates
    problems = []
    if not certs.ef1_exact:
        problems.append("allocation is not EF1 on the original instance")
    if not certs.fpo_certificate_rounded:
        problems.append("market-equilibrium certificate failed")
    if certs.po_brute_force == "refuted":
        problems.append("a Pareto-dominating allocation exists")
    for p in problems:
        print(f"solve: {p}", file=sys.stderr)
    return FAILED if problems else OK


def _prices_epsilon(args, text):
    if args.epsilon is not None:
        return args.epsilon
    data = json.loads(text)
    if isinstance(data, dict) and "epsilon" in data:
        return as_epsilon(rational_from_json(data["epsilon"]))
    raise InputError("fpo-cert needs --epsilon (or a solution file carrying one) to round the instance")


def cmd_verify(args) -> int:
    inst = _load_instance(args.input)
    x = parse_allocation(_read(args.allocation), inst.n, inst.m)
    prop = args.property

    if prop in ("ef1", "eps-ef1"):
        if prop == "eps-ef1" and args.epsilon is None:
            raise InputError("eps-ef1 needs --epsilon")
        slack = 0 if prop == "ef1" else args.epsilon
        holds, witness = check_eps_EF1(inst, x, slack)
        if holds:
            print(f"{prop}: holds")
            return OK
        print(f"{prop}: fails; {witness.describe()}")
        return FAILED

    if prop == "po-brute":
        dominator = brute_force_pareto_dominator(inst, x, args.budget)
        if dominator is None:
            print("po-brute: no integral allocation Pareto-dominates the input")
            return OK
        print("po-brute: dominated by " + json.dumps([sorted(j + 1 for j in b) for b in dominator]))
        return FAILED

    if prop == "fpo-cert":
        if args.prices is None:
            raise InputError("fpo-cert needs --prices")
        text = _read(args.prices)
        prices = parse_prices(text)
        if len(prices) != inst.m:
            raise InputError(f"price vector has {len(prices)} entries for {inst.m} goods")
        rounded = round_instance(inst, _prices_epsilon(args, text))
        if check_fpo_certificate(rounded, x, prices):
            print("fpo-cert: allocation and prices form a market equilibrium of the rounded instance")
            return OK
        print("fpo-cert: certificate fails")
        return FAILED

    # nsw-ratio
    _, opt = brute_force_nash_opt(inst, args.budget)
    mine = nsw(inst, x)
    ratio = Fraction(mine.product, opt.product) if opt.product else None
    print(f"nsw-ratio: product {mine.product} vs optimum {opt.product}" + (f" (ratio {ratio})" if ratio is not None else ""))
    if nsw_ratio_ok(mine.product, opt.product, inst.n, NSW_FACTOR):
        return OK
    print(f"nsw-ratio: product times (29/20)^{inst.n} is below the optimum")
    return FAILED


def cmd_oracle(args) -> int:
    inst = _load_instance(args.input)
    x, value = brute_force_nash_opt(inst, args.budget)
    payload = json.loads(serialize_allocation(x))
    payload["nsw_product"] = str(value.product)
    _write(args.output, json.dumps(payload, separators=(", ", ": ")) + "\n")
    return OK


def cmd_gen(args) -> int:
    if args.family == "fixture" and args.fixture is None:
        raise InputError("--family fixture needs --fixture")
    if args.family in ("random", "identical"):
        missing = [flag for flag, v in (("--n", args.n), ("--m", args.m), ("--vmax", args.vmax)) if v is None]
        if missing:
            raise InputError(f"--family {args.family} needs {', '.join(missing)}")
    inst = generate(args.family, args.seed, n=args.n, m=args.m, vmax=args.vmax, fixture_name=args.fixture)
    _write(args.output, serialize_instance(inst))
    return OK


def cmd_bench(args) -> int:
    cfg = BenchConfig(
        seeds=args.seeds, n_min=args.n_min, n_max=args.n_max, m_min=args.m_min, m_max=args.m_max,
        vmax=args.vmax, mode=args.mode, family=args.family, epsilon=args.epsilon or Fraction(1, 4),
        po_budget=args.po_budget,
    )
    report, timings = run_bench(cfg, args.solutions_dir)
    _write(args.report, json.dumps(report, indent=1) + "\n")
    if args.timings:
        _write(args.timings, json.dumps(timings, indent=1) + "\n")
    s = report["summary"]
    print(f"bench: {s['passed']}/{s['cases']} cases pass; max events {s['max_events']}", file=sys.stderr)
    return OK if s["passed"] == s["cases"] else FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairmarket", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute an EF1 + PO allocation")
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=["fixed", "adaptive", "exact-theorem"], default="adaptive")
    p.add_argument("--epsilon", type=_epsilon, help="rational such as 1/8 (fixed mode)")
    p.add_argument("--output")
    p.add_argument("--trace")
    p.add_argument("--po-budget", type=_nonnegative, default=DEFAULT_BUDGET)
    p.add_argument("--max-steps", type=_positive, default=10**6)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check one property of an allocation")
    p.add_argument("--input", required=True)
    p.add_argument("--allocation", required=True)
    p.add_argument("--property", required=True, choices=["ef1", "eps-ef1", "po-brute", "fpo-cert", "nsw-ratio"])
    p.add_argument("--epsilon", type=_epsilon)
    p.add_argument("--prices")
    p.add_argument("--budget", type=_nonnegative, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="brute-force Nash-optimal allocation")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.add_argument("--budget", type=_nonnegative, default=DEFAULT_BUDGET)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="write an instance file")
    p.add_argument("--family", required=True, choices=["random", "identical", "fixture"])
    p.add_argument("--fixture", choices=list(FIXTURES))
    p.add_argument("--n", type=_positive)
    p.add_argument("--m", type=_positive)
    p.add_argument("--vmax", type=_positive)
    p.add_argument("--seed", type=_nonnegative, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="seeded benchmark with independent re-checks")
    p.add_argument("--seeds", type=_nonnegative, required=True)
    p.add_argument("--n-min", type=_positive, default=2)
    p.add_argument("--n-max", type=_positive, default=4)
    p.add_argument("--m-min", type=_positive, default=2)
    p.add_argument("--m-max", type=_positive, default=7)
    p.add_argument("--vmax", type=_positive, default=10)
    p.add_argument("--mode", choices=["fixed", "adaptive", "exact-theorem"], default="adaptive")
    p.add_argument("--family", choices=["random", "identical"], default="random")
    p.add_argument("--epsilon", type=_epsilon)
    p.add_argument("--po-budget", type=_nonnegative, default=DEFAULT_BUDGET)
    p.add_argument("--report", required=True)
    p.add_argument("--timings", help="optional file for wall-clock times (not deterministic)")
    p.add_argument("--solutions-dir", help="write one solution file per case here")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    try:
        return args.func(args)
    except (InputError, FormatError, InvalidInstanceError, EnumerationBudgetExceeded) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except (StepLimitExceeded, SolverInvariantError) as exc:
        print(f"{args.command}: internal error: {exc}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())
