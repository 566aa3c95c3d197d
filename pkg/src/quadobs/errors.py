"""Exception hierarchy shared by all quadobs modules."""

from __future__ import annotations


class QuadObsError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(QuadObsError, ValueError):
    """Matrix or vector shapes are inconsistent."""


class AsymmetricMatrixError(QuadObsError, ValueError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class GridRangeError(QuadObsError, ValueError):
    """A time query falls outside (or off) the integration grid."""


class ConfigurationError(QuadObsError, ValueError):
    """Invalid user configuration (observer tuning, scenario values)."""


class ScenarioFormatError(ConfigurationError):
    """Scenario document is malformed or contains unknown keys."""


class AssumptionViolated(QuadObsError):
    """No C_m vanishes up to the search limit: the system is outside the supported class."""

    def __init__(self, max_m: int, norm: float):
        self.max_m = max_m
        self.norm = norm
        super().__init__(
            f"C_{max_m} still has Frobenius norm {norm:.3e}; no index <= {max_m} "
            "gives a vanishing C_m"
        )


class SignalOrderError(QuadObsError, ValueError):
    """Signal cannot supply the derivative order a computation needs."""

    def __init__(self, required: int, available: int):
        self.required = required
        self.available = available
        super().__init__(
            f"derivative of order {required} required (kappa >= {required}), "
            f"signal supplies up to {available}"
        )


class ComplexEigenvalues(QuadObsError):
    """State matrix has eigenvalues with nonzero imaginary part."""


class GammaUnobservable(QuadObsError):
    """The pair (A, Gamma) fails the Kalman rank test."""


class NumericalBlowup(QuadObsError, ArithmeticError):
    """Integration produced a non-finite state."""

    def __init__(self, t: float, what: str = "state"):
        self.t = t
        super().__init__(f"non-finite {what} at t = {t:.6g}")


class RiccatiDegenerate(QuadObsError, ArithmeticError):
    """Riccati matrix lost positive definiteness."""

    def __init__(self, t: float, min_eig: float | None = None):
        self.t = t
        self.min_eig = min_eig
        detail = "" if min_eig is None else f" (min eigenvalue {min_eig:.3e})"
        super().__init__(f"Riccati matrix not positive definite at t = {t:.6g}{detail}")
