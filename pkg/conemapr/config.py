from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="CONEMAPR_", env_file=".env", extra="ignore")

    # Conic backend (see conemapr.solvers.BACKENDS)
    solver: str = "clarabel"
    solver_tol: float = 1e-8

    # Estimator guards
    sign_hint_threshold: float = 0.05  # |rho_j| below this skips the sign constraints for axis j
    sin_floor: float = 1e-6  # floor on |sin psi| in B and in the CRLB denominators
    max_condition: float = 1e14  # conditioning guard for W and the FIM

    # Scenario generation
    rejection_limit: int = 10_000

    # Runtime
    log_level: str = "INFO"
    threads: int | None = None  # None -> os.cpu_count()


settings = Settings()
