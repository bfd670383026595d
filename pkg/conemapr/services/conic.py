"""Solver-agnostic conic problem helpers.

svec(H) stacks the upper triangle of a symmetric m x m matrix column by column,
each off-diagonal entry once: (0,0), (0,1), (1,1), (0,2), (1,2), (2,2), ...
"""

import logging
from pathlib import Path

import numpy as np

from conemapr.config import settings
from conemapr.exceptions import InfeasibleProblemError, NumericalFailureError
from conemapr.schemas.conic import (
    ConicProblem,
    LinearEquality,
    SocRow,
    SolverReport,
    SolverStatus,
    svec_length,
)

logger = logging.getLogger(__name__)

DUMP_HEADER = "# conemapr-conic v1"


def svec_index(i: int, j: int) -> int:
    """Position of H[i, j] (0-based, either triangle) inside svec(H)."""
    if i > j:
        i, j = j, i
    return j * (j + 1) // 2 + i


def svec(H: np.ndarray) -> np.ndarray:
    rows, cols = np.triu_indices(H.shape[0])
    order = np.lexsort((rows, cols))
    return H[rows[order], cols[order]]


def smat(v: np.ndarray, dim: int) -> np.ndarray:
    H = np.zeros((dim, dim))
    for j in range(dim):
        for i in range(j + 1):
            H[i, j] = H[j, i] = v[svec_index(i, j)]
    return H


def entry(dim: int, i: int, j: int) -> np.ndarray:
    """Linear functional over svec(H) returning H[i, j]."""
    e = np.zeros(svec_length(dim))
    e[svec_index(i, j)] = 1.0
    return e


def trace_coefficients(A: np.ndarray) -> np.ndarray:
    """c with c @ svec(H) = tr{A H} for symmetric A and H."""
    weights = 2.0 * A - np.diag(np.diag(A))
    return svec(weights)


def objective_at(problem: ConicProblem, H: np.ndarray) -> float:
    """tr{M0 H}."""
    return float(np.sum(problem.objective * H))


def equality_residuals(problem: ConicProblem, H: np.ndarray) -> np.ndarray:
    """|tr{A_k H} - b_k| per equality."""
    return np.array([abs(float(np.sum(eq.matrix * H)) - eq.rhs) for eq in problem.equalities])


def soc_violations(problem: ConicProblem, H: np.ndarray) -> np.ndarray:
    """max(0, ||S v|| - r v) per SOC row, v = svec(H)."""
    v = svec(H)
    return np.array(
        [max(0.0, float(np.linalg.norm(row.selector @ v) - row.rhs @ v)) for row in problem.socs]
    )


def max_violation(problem: ConicProblem, H: np.ndarray) -> float:
    """Largest equality residual or SOC violation."""
    values = np.concatenate([equality_residuals(problem, H), soc_violations(problem, H), [0.0]])
    return float(np.max(values))


def solve(
    problem: ConicProblem,
    tol: float | None = None,
    backend: str | None = None,
) -> tuple[np.ndarray, SolverReport]:
    """Solve with the configured backend.

    Raises:
        InfeasibleProblemError: contradictory constraints
        NumericalFailureError: ill-conditioning or non-convergence
    """
    # lazy import: backends depend on the svec helpers above
    from conemapr.solvers import get_backend

    tol = tol or settings.solver_tol
    solver = get_backend(backend)
    H, report = solver.solve(problem, tol)

    logger.debug(
        f"{report.backend}: status={report.status.value} obj={report.objective_value:.3e} "
        f"iters={report.iterations} eq_res={report.max_equality_residual:.2e}"
    )

    if report.status == SolverStatus.INFEASIBLE:
        raise InfeasibleProblemError(backend=report.backend)
    if report.status == SolverStatus.NUMERICAL_FAILURE or H is None:
        raise NumericalFailureError(backend=report.backend)
    return H, report


def _format_functional(coefficients: np.ndarray, dim: int) -> str:
    terms = []
    for j in range(dim):
        for i in range(j + 1):
            value = coefficients[svec_index(i, j)]
            if value != 0.0:
                terms.append(f"{i + 1},{j + 1}:{value:.17g}")
    return " ".join(terms) if terms else "-"


def dump_problem(problem: ConicProblem) -> str:
    """Text dump for cross-solver diffing, one equality or SOC row per line.

    Entries are 1-based (i,j):coefficient pairs over the upper triangle of H. `obj` and
    `eq` lines list tr{A H} coefficients; `soc` lines list the rhs functional followed by
    one `|`-separated functional per selector row.
    """
    dim = problem.dim
    lines = [
        f"{DUMP_HEADER} dim={dim} equalities={len(problem.equalities)} socs={len(problem.socs)}",
        f"obj {_format_functional(trace_coefficients(problem.objective), dim)}",
    ]
    for k, eq in enumerate(problem.equalities):
        label = eq.label or f"eq{k}"
        functional = _format_functional(trace_coefficients(eq.matrix), dim)
        lines.append(f"eq {label} rhs={eq.rhs:.17g} {functional}")
    for k, row in enumerate(problem.socs):
        label = row.label or f"soc{k}"
        selectors = " | ".join(_format_functional(sel, dim) for sel in row.selector)
        lines.append(f"soc {label} {_format_functional(row.rhs, dim)} >= {selectors}")
    return "\n".join(lines) + "\n"


def write_problem(problem: ConicProblem, path: Path) -> Path:
    path.write_text(dump_problem(problem))
    logger.info(f"Conic problem written to {path}")
    return path


__all__ = [
    "ConicProblem",
    "LinearEquality",
    "SocRow",
    "dump_problem",
    "entry",
    "equality_residuals",
    "max_violation",
    "objective_at",
    "smat",
    "soc_violations",
    "solve",
    "svec",
    "svec_index",
    "trace_coefficients",
    "write_problem",
]
