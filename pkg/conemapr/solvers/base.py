from abc import ABC, abstractmethod

import numpy as np

from conemapr.schemas.conic import ConicProblem, SolverReport


class SolverBackend(ABC):
    """Interface for conic backends.

    Any backend meeting the post-conditions of `solve` is interchangeable: on an
    optimal status H is symmetric with eigenvalues >= -tol, every equality holds within
    tol * (1 + |b_k|) and every SOC row within tol.
    """

    @staticmethod
    @abstractmethod
    def get_name() -> str:
        """Backend identifier (e.g., 'clarabel')."""
        ...

    @abstractmethod
    def solve(self, problem: ConicProblem, tol: float) -> tuple[np.ndarray | None, SolverReport]:
        """Solve the problem; H is None when no primal point was produced."""
        ...
