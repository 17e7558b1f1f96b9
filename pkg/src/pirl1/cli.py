"""Command line interface: solve, verify, rate, gen.

Exit codes: 0 on success, 1 when verification fails (or a solve ends in
numerical failure), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import io as pio
from .core import SolverStatus
from .diagnostics import estimate_rate_from_errors, run_diagnostics
from .solver import run


def _cmd_solve(args) -> int:
    problem, config, x0 = pio.load_problem(args.config)
    result = run(problem, config, x0)
    last = result.trace[-1]
    summary = {
        "status": result.status.value,
        "iterations": result.iterations,
        "F_final": last.F_val,
        "f_final": last.f_val,
        "residual": last.residual,
        "support_size": len(last.support),
    }
    if args.output:
        pio.write_trace(result.trace, args.output)
    if args.result:
        payload = dict(summary)
        payload["x_final"] = [float(v) for v in result.x_final]
        with open(args.result, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    print(json.dumps(summary))
    return 0 if result.status is not SolverStatus.NUMERICAL_FAILURE else 1


def _cmd_verify(args) -> int:
    problem, config, x0 = pio.load_problem(args.config)
    result = run(problem, config, x0)
    report = run_diagnostics(problem, config, result)
    print(json.dumps(report.to_json_dict(), indent=2))
    return 0 if report.all_passed else 1


def _cmd_rate(args) -> int:
    k, e = pio.read_errors_csv(args.errors)
    est = estimate_rate_from_errors(k, e)
    payload = {"rate_class": est.rate_class.value}
    if est.rate_params:
        payload.update(est.rate_params)
    print(json.dumps(payload))
    return 0


def _cmd_gen(args) -> int:
    paths = pio.generate_instance(
        m=args.m,
        n=args.n,
        sparsity=args.sparsity,
        noise=args.noise,
        seed=args.seed,
        out_dir=args.output,
        lam=args.lam,
        p=args.p,
    )
    print(json.dumps(paths))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pirl1",
        description="lp-regularized minimization by proximal reweighted l1, "
        "with convergence diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the solver on a JSON config")
    p_solve.add_argument("config", help="path to the run config JSON")
    p_solve.add_argument("-o", "--output", help="write the trace CSV here")
    p_solve.add_argument("--result", help="write a result JSON here")
    p_solve.set_defaults(func=_cmd_solve)

    p_verify = sub.add_parser(
        "verify", help="solve, then check every convergence property"
    )
    p_verify.add_argument("config", help="path to the run config JSON")
    p_verify.set_defaults(func=_cmd_verify)

    p_rate = sub.add_parser("rate", help="classify a stored k,e error sequence")
    p_rate.add_argument("errors", help="CSV file with header k,e")
    p_rate.set_defaults(func=_cmd_rate)

    p_gen = sub.add_parser("gen", help="generate a synthetic sparse instance")
    p_gen.add_argument("--m", type=int, required=True, help="number of rows")
    p_gen.add_argument("--n", type=int, required=True, help="number of columns")
    p_gen.add_argument("--sparsity", type=int, required=True, help="nonzeros in the signal")
    p_gen.add_argument("--noise", type=float, default=0.0, help="noise std deviation")
    p_gen.add_argument("--seed", type=int, required=True, help="RNG seed")
    p_gen.add_argument("-o", "--output", required=True, help="output directory")
    p_gen.add_argument("--lambda", dest="lam", type=float, default=0.1,
                       help="regularization weight for the generated config")
    p_gen.add_argument("--p", type=float, default=0.5,
                       help="quasi-norm exponent for the generated config")
    p_gen.set_defaults(func=_cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (pio.FileFormatError, pio.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
