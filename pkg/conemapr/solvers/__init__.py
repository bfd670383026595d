"""Conic solver backends, selected by name (settings.solver / CONEMAPR_SOLVER)."""

from conemapr.config import settings
from conemapr.exceptions import ConfigError
from conemapr.solvers.base import SolverBackend
from conemapr.solvers.cvxpy_backend import ClarabelBackend, ScsBackend

BACKENDS: dict[str, type[SolverBackend]] = {
    ClarabelBackend.get_name(): ClarabelBackend,
    ScsBackend.get_name(): ScsBackend,
}


def get_backend(name: str | None = None) -> SolverBackend:
    """Instantiate a backend by name; defaults to settings.solver."""
    key = (name or settings.solver).lower()
    backend = BACKENDS.get(key)
    if backend is None:
        raise ConfigError(
            f"Unknown solver backend: {key}. Supported: {list(BACKENDS.keys())}",
            field="solver",
            value=key,
        )
    return backend()


__all__ = ["BACKENDS", "SolverBackend", "get_backend"]
