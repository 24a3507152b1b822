"""Standalone solver executable conforming to the external-adapter contract.

Reads an LP-format model, solves it (HiGHS via scipy: MIP when integer
variables are present, plain LP otherwise) and writes one
``<variable-name> <value>`` line per variable.  Exit status: 0 solved,
2 infeasible, 3 unbounded, 1 anything else.
"""

from __future__ import annotations

import argparse
import sys

from .lpfile import parse_lp_format
from .model import INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED
from .scipy_backend import solve_lp_highs, solve_mip_highs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="railplan-worker",
        description="Solve an LP-format model and write a plain solution file.",
    )
    parser.add_argument("model", help="input model in LP format")
    parser.add_argument("solution", help="output solution file")
    parser.add_argument("--time-limit", type=float, default=None)
    args = parser.parse_args(argv)

    with open(args.model, "r", encoding="utf-8") as handle:
        model = parse_lp_format(handle.read(), name=args.model)

    if len(model.integer_indices()):
        result = solve_mip_highs(model, time_limit=args.time_limit, gap_tolerance=0.0)
    else:
        result = solve_lp_highs(model)

    if result.status == INFEASIBLE:
        print("model is infeasible", file=sys.stderr)
        return 2
    if result.status == UNBOUNDED:
        print("model is unbounded", file=sys.stderr)
        return 3
    if result.status == LIMIT and result.x is None:
        print("limit reached without a feasible solution", file=sys.stderr)
        return 1

    with open(args.solution, "w", encoding="utf-8") as handle:
        for index, variable in enumerate(model.variables):
            handle.write(f"{variable.name} {float(result.x[index])!r}\n")
    print(f"objective {result.objective!r}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
