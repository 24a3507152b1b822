"""Subprocess adapter for external LP/MIP solvers.

The model is exported in LP format, the external command is invoked with
the model and solution paths substituted into its template, and the
solution file (plain ``<variable-name> <value>`` lines, unmentioned
variables zero) is read back, checked for feasibility against the model
and wrapped in a SolveResult.  Failures are reported through distinct
exception types carrying the captured diagnostics.
"""

from __future__ import annotations

import shlex
import subprocess
import sys
import tempfile
import time
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from .lpfile import export_lp_format
from .model import MilpError, MipModel, OPTIMAL, SolveResult, SolveStats


class ExternalSolverError(MilpError):
    """The external command failed (nonzero exit status)."""


class SolutionFileError(MilpError):
    """The solution file is missing or cannot be parsed."""


class SolutionInfeasibleError(MilpError):
    """The returned assignment violates the model."""

    def __init__(self, message: str, violated: Optional[list] = None):
        super().__init__(message)
        self.violated = violated or []


def bundled_worker_command(time_limit: Optional[float] = None) -> str:
    """Command template for the scipy-backed worker shipped with the package."""
    base = f"{shlex.quote(sys.executable)} -m railplan.milp.worker {{model}} {{solution}}"
    if time_limit is not None:
        base += f" --time-limit {time_limit}"
    return base


def parse_solution_file(text: str) -> Dict[str, float]:
    """Parse ``<name> <value>`` lines; blank lines and #-comments allowed."""
    values: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise SolutionFileError(f"line {lineno}: expected '<name> <value>', got {raw!r}")
        name, raw_value = parts
        try:
            value = float(raw_value)
        except ValueError as exc:
            raise SolutionFileError(f"line {lineno}: bad value {raw_value!r}") from exc
        values[name] = value
    return values


def solve_external(
    model: MipModel,
    command_template: str,
    workdir: Optional[str] = None,
    tol: float = 1e-6,
) -> SolveResult:
    """Export the model, run the external command, verify and wrap its answer."""
    start = time.perf_counter()
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        model_path = Path(tmp) / "model.lp"
        solution_path = Path(tmp) / "model.sol"
        rename = export_lp_format(model, model_path)
        reverse = {safe: original for original, safe in rename.items()}

        tokens = [
            tok.format(model=str(model_path), solution=str(solution_path))
            for tok in shlex.split(command_template)
        ]
        proc = subprocess.run(tokens, capture_output=True, text=True)
        if proc.returncode != 0:
            raise ExternalSolverError(
                f"external solver exited with status {proc.returncode}: "
                f"{proc.stderr.strip() or proc.stdout.strip()}"
            )
        if not solution_path.exists():
            raise SolutionFileError(
                f"external solver wrote no solution file ({solution_path})"
            )
        values = parse_solution_file(solution_path.read_text("utf-8"))

    x = np.zeros(model.n_variables)
    for name, value in values.items():
        original = reverse.get(name, name)
        if not model.has_variable(original):
            raise SolutionFileError(f"solution names unknown variable {name!r}")
        x[model.variable_index(original)] = value
    violated = model.violations(x, tol)
    if violated:
        raise SolutionInfeasibleError(
            f"returned assignment violates {violated[0]}"
            + (f" (and {len(violated) - 1} more)" if len(violated) > 1 else ""),
            violated,
        )
    return SolveResult(
        status=OPTIMAL,
        objective=model.objective_value(x),
        x=x,
        bound=model.objective_value(x),
        stats=SolveStats(total_time=time.perf_counter() - start),
    )
