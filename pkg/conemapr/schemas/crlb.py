from conemapr.schemas.common import ArrayModel, Matrix


class CrlbResult(ArrayModel):
    """CRLB of (azimuth, elevation, inverse-range) and of omega = [rho^T, g]^T."""

    cov_mpr: Matrix  # 3x3, rad^2 / rad^2 / m^-2
    cov_omega: Matrix  # 4x4
    condition: float  # of the 4x4 FIM

    @property
    def angle_bound(self) -> float:
        """Bound on E[(dphi)^2 + (dtheta)^2]."""
        return float(self.cov_mpr[0, 0] + self.cov_mpr[1, 1])

    @property
    def g_bound(self) -> float:
        return float(self.cov_mpr[2, 2])
