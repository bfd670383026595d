"""cvxpy bindings for the conic IR."""

import logging
from collections import defaultdict

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from conemapr.schemas.conic import ConicProblem, SolverReport, SolverStatus
from conemapr.services.conic import equality_residuals, soc_violations, trace_coefficients
from conemapr.solvers.base import SolverBackend

logger = logging.getLogger(__name__)

# the largest normalised objective entry lies in [1, OBJECTIVE_CEILING]
OBJECTIVE_CEILING = 1e4
GAP_TOL_FLOOR = 1e-12

_STATUS_MAP = {
    cp.OPTIMAL: SolverStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolverStatus.NEAR_OPTIMAL,
    cp.INFEASIBLE: SolverStatus.INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolverStatus.INFEASIBLE,
}


def objective_scale(objective: np.ndarray) -> float:
    """Divisor applied to M0 before solving."""
    largest = float(np.max(np.abs(objective)))
    if largest == 0.0:
        return 1.0
    return largest / min(max(largest, 1.0), OBJECTIVE_CEILING)


def gap_tolerance(tol: float, scale: float) -> float:
    """Duality-gap tolerance on the normalised problem; tol / 10 in the problem's own units."""
    return min(tol, max(0.1 * tol / scale, GAP_TOL_FLOOR))


def _svec_selection(dim: int) -> sp.csr_matrix:
    """Sparse P with P @ vec_F(H) = svec(H)."""
    rows, cols = [], []
    k = 0
    for j in range(dim):
        for i in range(j + 1):
            rows.append(k)
            cols.append(j * dim + i)  # column-major position of H[i, j]
            k += 1
    data = np.ones(len(rows))
    return sp.csr_matrix((data, (rows, cols)), shape=(k, dim * dim))


class CvxpyBackend(SolverBackend):
    """Conic backend delegating to a cvxpy-registered solver."""

    cvxpy_solver: str = ""

    def _options(self, tol: float, gap_tol: float) -> dict:
        return {}

    def solve(self, problem: ConicProblem, tol: float) -> tuple[np.ndarray | None, SolverReport]:
        dim = problem.dim
        scale = objective_scale(problem.objective)

        H = cp.Variable((dim, dim), symmetric=True)
        v = _svec_selection(dim) @ cp.reshape(H, (dim * dim,), order="F")

        constraints = [H >> 0]
        if problem.equalities:
            A = np.stack([trace_coefficients(eq.matrix) for eq in problem.equalities])
            b = np.array([eq.rhs for eq in problem.equalities])
            constraints.append(A @ v == b)

        # one vectorised cone per selector height
        groups: dict[int, list[int]] = defaultdict(list)
        for k, row in enumerate(problem.socs):
            groups[row.selector.shape[0]].append(k)
        for height, members in groups.items():
            selectors = np.vstack([problem.socs[k].selector for k in members])
            rhs = np.stack([problem.socs[k].rhs for k in members])
            cone_args = cp.reshape(selectors @ v, (height, len(members)), order="F")
            constraints.append(cp.SOC(rhs @ v, cone_args, axis=0))

        objective = cp.Minimize(trace_coefficients(problem.objective / scale) @ v)
        cvx_problem = cp.Problem(objective, constraints)

        try:
            cvx_problem.solve(
                solver=self.cvxpy_solver, **self._options(tol, gap_tolerance(tol, scale))
            )
        except cp.error.SolverError as e:
            logger.warning(f"{self.get_name()} failed: {e}")
            report = SolverReport(
                status=SolverStatus.NUMERICAL_FAILURE,
                objective_value=float("nan"),
                backend=self.get_name(),
            )
            return None, report

        stats = cvx_problem.solver_stats
        iterations = int(stats.num_iters or 0) if stats is not None else 0
        status = _STATUS_MAP.get(cvx_problem.status, SolverStatus.NUMERICAL_FAILURE)

        if H.value is None or status == SolverStatus.INFEASIBLE:
            report = SolverReport(
                status=(
                    status
                    if status == SolverStatus.INFEASIBLE
                    else SolverStatus.NUMERICAL_FAILURE
                ),
                objective_value=float("nan"),
                iterations=iterations,
                backend=self.get_name(),
            )
            return None, report

        H_value = 0.5 * (H.value + H.value.T)
        residuals = equality_residuals(problem, H_value)
        max_residual = float(np.max(residuals)) if residuals.size else 0.0

        if status == SolverStatus.OPTIMAL and not self._meets_contract(problem, H_value, tol):
            status = SolverStatus.NEAR_OPTIMAL

        report = SolverReport(
            status=status,
            objective_value=float(np.sum(problem.objective * H_value)),
            iterations=iterations,
            max_equality_residual=max_residual,
            backend=self.get_name(),
        )
        return H_value, report

    @staticmethod
    def _meets_contract(problem: ConicProblem, H: np.ndarray, tol: float) -> bool:
        # backends stop on scaled residuals; a small multiple of tol absorbs the unscaling
        slack = 100.0 * tol
        if float(np.min(np.linalg.eigvalsh(H))) < -slack * max(1.0, float(np.trace(H))):
            return False
        for eq, residual in zip(problem.equalities, equality_residuals(problem, H)):
            if residual > slack * (1.0 + abs(eq.rhs)):
                return False
        violations = soc_violations(problem, H)
        return not violations.size or float(np.max(violations)) <= slack


class ClarabelBackend(CvxpyBackend):
    """Interior-point backend (default)."""

    cvxpy_solver = cp.CLARABEL

    @staticmethod
    def get_name() -> str:
        return "clarabel"

    def _options(self, tol: float, gap_tol: float) -> dict:
        return {
            "tol_gap_abs": gap_tol,
            "tol_gap_rel": gap_tol,
            "tol_feas": tol,
            "max_iter": 200,
        }


class ScsBackend(CvxpyBackend):
    """First-order splitting backend, for cross-checking."""

    cvxpy_solver = cp.SCS

    @staticmethod
    def get_name() -> str:
        return "scs"

    def _options(self, tol: float, gap_tol: float) -> dict:
        return {"eps_abs": tol, "eps_rel": tol, "max_iters": 200_000}
