"""Exception types shared by all modules."""


class SpaceTimeError(Exception):
    """Base class for every error raised by this package."""


class ConstructionError(SpaceTimeError, ValueError):
    """Invalid parameters when building a triple, form, grid or solution."""


class ContractionViolation(ConstructionError):
    """The coupling operator has discrete norm larger than one."""

    def __init__(self, norm: float):
        self.norm = float(norm)
        super().__init__(f"coupling operator is not a contraction: certified norm {self.norm!r} > 1")


class RescaleInfeasible(ConstructionError):
    """exp(lambda*T)*||Phi|| exceeds one, so the shifted coupling is not a contraction."""


class SingularSchemeError(SpaceTimeError):
    """The coupled space-time system is (numerically) singular."""

    def __init__(self, sigma_min: float, sigma_max: float, message: str = ""):
        self.sigma_min = float(sigma_min)
        self.sigma_max = float(sigma_max)
        msg = message or "space-time system is singular"
        super().__init__(f"{msg}: sigma_min={self.sigma_min:.3e}, sigma_max={self.sigma_max:.3e}")


class NumericalError(SpaceTimeError, ArithmeticError):
    """A factorization or eigensolve failed or an a-posteriori check did not pass."""


class ConditioningError(ConstructionError):
    """Requested polynomial degree is beyond the supported range."""
