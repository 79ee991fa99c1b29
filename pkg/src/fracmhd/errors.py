"""Exception types raised across the package."""


class FracMhdError(Exception):
    """Base class for package errors."""


class HermitianViolation(FracMhdError, ValueError):
    """Spectral coefficients do not describe a real-valued field."""


class NegativePowerOnMean(FracMhdError, ValueError):
    """A negative fractional power was applied to a field with nonzero mean."""


class NonZeroMean(FracMhdError, ValueError):
    """Biot-Savart inversion requested for a field with nonzero mean."""


class GridMismatch(FracMhdError, ValueError):
    """Operands live on different grids."""


class DegenerateInput(FracMhdError, ValueError):
    """A right-hand-side factor of an interpolation inequality vanished."""


class ConfigInvalid(FracMhdError, ValueError):
    """A run or sweep configuration failed validation."""


class NonFinite(FracMhdError):
    """A time step produced NaN or Inf coefficients."""

    def __init__(self, time: float, message: str | None = None):
        self.time = float(time)
        super().__init__(message or f"non-finite coefficients at t={self.time!r}")


class ResolutionLoss(FracMhdError):
    """The spectral tail exceeded its threshold; the run is no longer resolved."""

    def __init__(self, time: float, fraction: float):
        self.time = float(time)
        self.fraction = float(fraction)
        super().__init__(
            f"spectral tail fraction {self.fraction:.3e} exceeds threshold at t={self.time!r}"
        )
