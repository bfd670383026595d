"""Custom exceptions for conemapr."""

from typing import Any


class ConemaprError(Exception):
    """Base exception for all localization errors."""

    def __init__(
        self,
        message: str,
        *,
        code: str | None = None,
        details: dict[str, Any] | None = None,
    ):
        super().__init__(message)
        self.message = message
        self.code = code or "CONEMAPR_ERROR"
        self.details = details or {}


class DomainError(ConemaprError):
    """Input outside the domain of a coordinate or angle conversion."""

    def __init__(self, message: str, *, operation: str | None = None, value: Any = None):
        details = {}
        if operation is not None:
            details["operation"] = operation
        if value is not None:
            details["value"] = str(value)[:100]  # Truncate

        super().__init__(message, code="DOMAIN_ERROR", details=details)


class DegenerateGeometryError(ConemaprError):
    """Geometry too close to a singular configuration (cone axis, pole, zero eigenvalue)."""

    def __init__(
        self,
        message: str,
        *,
        quantity: str | None = None,
        value: float | None = None,
        threshold: float | None = None,
    ):
        details: dict[str, Any] = {}
        if quantity is not None:
            details["quantity"] = quantity
        if value is not None:
            details["value"] = value
        if threshold is not None:
            details["threshold"] = threshold

        super().__init__(message, code="DEGENERATE_GEOMETRY", details=details)


class SolverError(ConemaprError):
    """Conic backend did not return a usable solution."""

    def __init__(
        self,
        message: str,
        *,
        code: str = "SOLVER_ERROR",
        backend: str | None = None,
        status: str | None = None,
    ):
        details = {}
        if backend is not None:
            details["backend"] = backend
        if status is not None:
            details["status"] = status

        super().__init__(message, code=code, details=details)
        self.status = status


class InfeasibleProblemError(SolverError):
    """The conic problem has contradictory constraints."""

    def __init__(self, message: str = "Problem is infeasible", *, backend: str | None = None):
        super().__init__(message, code="INFEASIBLE", backend=backend, status="infeasible")


class NumericalFailureError(SolverError):
    """Ill-conditioning or non-convergence inside the backend."""

    def __init__(
        self,
        message: str = "Numerical failure",
        *,
        backend: str | None = None,
        status: str | None = "numerical_failure",
    ):
        super().__init__(message, code="NUMERICAL_FAILURE", backend=backend, status=status)


class SingularFimError(ConemaprError):
    """Fisher information matrix too ill-conditioned to invert."""

    def __init__(self, message: str, *, condition: float):
        super().__init__(message, code="SINGULAR_FIM", details={"condition": condition})
        self.condition = condition


class DivergenceError(ConemaprError):
    """Gauss-Newton cost kept increasing under maximal damping."""

    def __init__(self, message: str, *, iteration: int, damping: float):
        super().__init__(
            message,
            code="DIVERGENCE",
            details={"iteration": iteration, "damping": damping},
        )


class RejectionOverflowError(ConemaprError):
    """Scenario rejection sampling exhausted its draw budget."""

    def __init__(self, message: str, *, draws: int):
        super().__init__(message, code="REJECTION_OVERFLOW", details={"draws": draws})


class ConfigError(ConemaprError):
    """Invalid run configuration."""

    def __init__(self, message: str, *, field: str | None = None, value: Any = None):
        details = {}
        if field is not None:
            details["field"] = field
        if value is not None:
            details["value"] = str(value)[:100]  # Truncate

        super().__init__(message, code="CONFIG_ERROR", details=details)
